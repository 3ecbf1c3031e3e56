#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "lsa/network.hpp"

namespace fd {

/// Denominator floor for the relative error, so components whose true gradient is
/// essentially zero are compared on an absolute scale instead.
inline constexpr double kRelativeFloor = 1e-6;

struct Report {
  double max_rel_error = 0.0;
  long worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central differences with step h on every parameter; compares against `analytic`.
inline Report check(lsa::learn::ParamSet params, const lsa::learn::Gradient& analytic,
                    const std::function<double(const lsa::learn::ParamSet&)>& loss,
                    double h = 1e-5) {
  Report r;
  auto& v = params.values();
  for (long i = 0; i < v.size(); ++i) {
    const double orig = v[i];
    v[i] = orig + h;
    const double up = loss(params);
    v[i] = orig - h;
    const double down = loss(params);
    v[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kRelativeFloor});
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
      r.worst_analytic = a;
      r.worst_numeric = numeric;
    }
  }
  return r;
}

}  // namespace fd
