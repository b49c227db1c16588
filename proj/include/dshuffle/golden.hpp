#pragma once

// Frozen reference fixtures: known-good layouts, broadcast tables, loads and
// bound values for small instances, checked against the live implementation.

#include <string>
#include <vector>

namespace dshuffle {

struct GoldenCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // what differed, empty when pass
};

std::vector<GoldenCheck> run_verify_golden();
bool all_pass(const std::vector<GoldenCheck>& checks);

}  // namespace dshuffle
