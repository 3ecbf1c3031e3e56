#pragma once

#include <span>
#include <vector>

namespace lsa {

/// Largest-remainder (Hamilton) apportionment of `total` seats by non-negative `weights`.
/// Weights are normalized internally. Remaining seats go to the largest fractional parts;
/// equal fractional parts favour the lower index.
std::vector<int> largest_remainder(std::span<const double> weights, int total);

}  // namespace lsa
