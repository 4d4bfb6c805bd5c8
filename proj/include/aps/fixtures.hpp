#pragma once

#include <string>
#include <vector>

#include "aps/tiling.hpp"

namespace aps::fixtures {

// Embedded rules: "fib", "np13", "np21", "npprod", "isoprod".
tiling::SubstitutionRule get(const std::string& name);

std::vector<std::string> names();

// One-dimensional two-letter rule a -> a b^k, b -> a with Perron tile lengths;
// the expansion is the positive root of x^2 - x - k.
tiling::SubstitutionRule two_letter_rule(const std::string& name, int k);

tiling::SubstitutionRule rule_from_json(const std::string& text);
std::string rule_to_json(const tiling::SubstitutionRule& rule);

}  // namespace aps::fixtures
