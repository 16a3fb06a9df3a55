#include "sim/hex.hpp"

#include <cctype>
#include <cstdio>

#include "sim/error.hpp"

namespace sim {

std::string hex8(uint8_t v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%02X", v);
  return buf;
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016llX", static_cast<unsigned long long>(v));
  return buf;
}

std::string hex_bytes(const std::vector<uint8_t>& bytes) {
  std::string out;
  out.reserve(bytes.size() * 3);
  for (size_t i = 0; i < bytes.size(); ++i) {
    char buf[4];
    std::snprintf(buf, sizeof(buf), "%02X", bytes[i]);
    if (i) out.push_back(' ');
    out += buf;
  }
  return out;
}

uint64_t parse_u64(const std::string& text, const std::string& what) {
  if (text.empty()) throw SimError(what + ": empty number");
  int base = 10;
  size_t start = 0;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    start = 2;
  } else {
    // Bare hex digits are accepted too ("1F"); decimal otherwise.
    for (char c : text)
      if (!std::isdigit(static_cast<unsigned char>(c))) { base = 16; break; }
  }
  uint64_t value = 0;
  for (size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else throw SimError(what + ": bad digit '" + std::string(1, c) + "' in \"" + text + "\"");
    if (digit >= base) throw SimError(what + ": bad digit in \"" + text + "\"");
    uint64_t next = value * base + static_cast<uint64_t>(digit);
    if (next / base != value) throw SimError(what + ": overflow in \"" + text + "\"");
    value = next;
  }
  if (start == text.size()) throw SimError(what + ": empty number \"" + text + "\"");
  return value;
}

std::vector<uint8_t> parse_byte_string(const std::string& text, const std::string& what) {
  std::string digits;
  digits.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '\t') continue;
    if (!std::isxdigit(static_cast<unsigned char>(c)))
      throw SimError(what + ": bad hex byte character '" + std::string(1, c) + "'");
    digits.push_back(c);
  }
  if (digits.size() % 2 != 0) throw SimError(what + ": odd hex digit count");
  std::vector<uint8_t> out;
  out.reserve(digits.size() / 2);
  auto nibble = [](char c) -> uint8_t {
    if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
    return static_cast<uint8_t>(c - 'A' + 10);
  };
  for (size_t i = 0; i + 1 < digits.size(); i += 2)
    out.push_back(static_cast<uint8_t>((nibble(digits[i]) << 4) | nibble(digits[i + 1])));
  return out;
}

}  // namespace sim
