#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sim {

// Fixed-width hex rendering, always 0x-prefixed and zero-padded. Used for
// log lines and reports; keep the format stable, tests diff serialized logs
// byte for byte.
std::string hex8(uint8_t v);
std::string hex32(uint32_t v);
std::string hex64(uint64_t v);

// Renders bytes as "AA BB CC". Empty input -> empty string.
std::string hex_bytes(const std::vector<uint8_t>& bytes);

// Parses "0x1F", "1F" or decimal "31". Throws SimError on garbage; `what`
// names the field for the error message.
uint64_t parse_u64(const std::string& text, const std::string& what);

// Parses "FF FF FF FF" or "FFFFFFFF" into bytes. Throws SimError on odd
// length or non-hex characters.
std::vector<uint8_t> parse_byte_string(const std::string& text,
                                       const std::string& what);

}  // namespace sim
