#pragma once

#include <stdexcept>
#include <string>

namespace sim {

// Structural errors: scenario-authoring bugs, layout collisions, malformed
// programs. Simulated outcomes (denials, violations, verdicts) are values,
// never exceptions.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sim
