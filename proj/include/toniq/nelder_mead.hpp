#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace toniq {

struct NelderMeadOptions {
  std::size_t max_evals = 200;
  double xtol = 1e-3;
  double ftol = 1e-4;
  /// Relative perturbation for the initial simplex; zero coordinates get
  /// zero_step instead.
  double initial_step = 0.05;
  double zero_step = 0.00025;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  double initial_f = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Downhill simplex with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Stops when both the simplex diameter
/// (max-norm, relative to the best vertex) is <= xtol and the spread of
/// function values is <= ftol, or when the evaluation budget is spent. The
/// budget is checked once per iteration, so the last iteration may overshoot
/// it by at most dim + 1 evaluations. Non-finite values are ranked as +inf.
///
/// The returned point is the best vertex ever held by the simplex, so
/// result.f <= result.initial_f always.
template <typename Fn>
NelderMeadResult nelder_mead(Fn&& objective, std::vector<double> x0,
                             const NelderMeadOptions& opt = {}) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  NelderMeadResult res;
  const std::size_t dim = x0.size();
  auto f = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> sim(dim + 1, x0);
  for (std::size_t k = 0; k < dim; ++k) {
    auto& y = sim[k + 1];
    y[k] = y[k] != 0.0 ? (1.0 + opt.initial_step) * y[k] : opt.zero_step;
  }
  std::vector<double> fsim(dim + 1);
  for (std::size_t k = 0; k <= dim; ++k) fsim[k] = f(sim[k]);
  res.initial_f = fsim[0];

  std::vector<std::size_t> order(dim + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fsim[a] < fsim[b]; });
    std::vector<std::vector<double>> s2(dim + 1);
    std::vector<double> f2(dim + 1);
    for (std::size_t k = 0; k <= dim; ++k) {
      s2[k] = std::move(sim[order[k]]);
      f2[k] = fsim[order[k]];
    }
    sim.swap(s2);
    fsim.swap(f2);
  };
  sort_simplex();

  std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
  auto along = [&](std::vector<double>& out, double t) {
    // out = (1 + t) * centroid - t * worst
    for (std::size_t i = 0; i < dim; ++i) out[i] = (1.0 + t) * centroid[i] - t * sim[dim][i];
  };

  res.iterations = 1;
  while (res.evals < opt.max_evals) {
    double xspread = 0.0;
    double fspread = 0.0;
    for (std::size_t k = 1; k <= dim; ++k) {
      for (std::size_t i = 0; i < dim; ++i)
        xspread = std::max(xspread, std::abs(sim[k][i] - sim[0][i]));
      fspread = std::max(fspread, std::abs(fsim[0] - fsim[k]));
    }
    if (xspread <= opt.xtol && fspread <= opt.ftol) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < dim; ++k)
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += sim[k][i];
    for (auto& c : centroid) c /= static_cast<double>(dim);

    along(xr, kReflect);
    const double fr = f(xr);
    bool shrink = false;
    if (fr < fsim[0]) {
      along(xe, kReflect * kExpand);
      const double fe = f(xe);
      if (fe < fr) {
        sim[dim] = xe;
        fsim[dim] = fe;
      } else {
        sim[dim] = xr;
        fsim[dim] = fr;
      }
    } else if (fr < fsim[dim - 1]) {
      sim[dim] = xr;
      fsim[dim] = fr;
    } else if (fr < fsim[dim]) {
      along(xc, kContract * kReflect);
      const double fc = f(xc);
      if (fc <= fr) {
        sim[dim] = xc;
        fsim[dim] = fc;
      } else {
        shrink = true;
      }
    } else {
      along(xc, -kContract);
      const double fc = f(xc);
      if (fc < fsim[dim]) {
        sim[dim] = xc;
        fsim[dim] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t k = 1; k <= dim; ++k) {
        for (std::size_t i = 0; i < dim; ++i)
          sim[k][i] = sim[0][i] + kShrink * (sim[k][i] - sim[0][i]);
        fsim[k] = f(sim[k]);
      }
    }
    sort_simplex();
    ++res.iterations;
  }

  res.x = sim[0];
  res.f = fsim[0];
  return res;
}

}  // namespace toniq
