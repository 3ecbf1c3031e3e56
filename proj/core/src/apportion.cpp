#include "lsa/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsa/error.hpp"

namespace lsa {

std::vector<int> largest_remainder(std::span<const double> weights, int total) {
  if (weights.empty()) throw UsageError("largest_remainder: empty weight vector");
  if (total < 0) throw UsageError("largest_remainder: negative total");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("largest_remainder: invalid weight");
    sum += w;
  }
  if (sum <= 0.0) throw UsageError("largest_remainder: weights sum to zero");

  const std::size_t n = weights.size();
  std::vector<int> seats(n);
  std::vector<double> frac(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = weights[i] / sum * total;
    const double fl = std::floor(quota);
    seats[i] = static_cast<int>(fl);
    frac[i] = quota - fl;
    assigned += seats[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  // Rounding can leave the floors summing slightly off; walk the ranking in either direction.
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n) {
    ++seats[order[k]];
    ++assigned;
  }
  for (std::size_t k = n; assigned > total;) {
    k = (k == 0 ? n : k) - 1;
    if (seats[order[k]] > 0) {
      --seats[order[k]];
      --assigned;
    }
  }
  return seats;
}

}  // namespace lsa
