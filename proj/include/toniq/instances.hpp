#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "toniq/backend.hpp"
#include "toniq/errors.hpp"
#include "toniq/parallel.hpp"
#include "toniq/qaoa.hpp"
#include "toniq/qubo.hpp"
#include "toniq/random.hpp"

namespace toniq {

/// Acceptance rules for random instances. An instance is kept when its
/// ground state is unique and the mean accuracy of `probe_runs` noiseless
/// 1-layer QAOA runs falls inside [min_probe_accuracy, max_probe_accuracy].
struct GenerationOptions {
  std::size_t probe_runs = 50;
  double min_probe_accuracy = 0.05;
  double max_probe_accuracy = 0.80;
  std::size_t max_candidates = 1000;
  unsigned jobs = 1;
};

/// Symmetric matrix with upper-triangle entries (row-major) uniform in [-1, 1].
inline QMatrix random_symmetric(std::size_t n, Rng& rng) {
  QMatrix q(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      q(i, j) = v;
      q(j, i) = v;
    }
  }
  return q;
}

/// Mean accuracy of noiseless single-layer runs; the difficulty probe.
inline double probe_accuracy(const QuboInstance& inst, std::uint64_t probe_seed,
                             std::size_t runs, unsigned jobs = 1) {
  const auto ideal = ideal_backend(inst.n());
  const QaoaEvaluator eval(inst, ideal, 1);
  std::vector<double> acc(runs, 0.0);
  parallel_for(runs, jobs, [&](std::size_t k) {
    acc[k] = run_once(eval, 1, {}, derive_seed(probe_seed, SeedStream::kProbe, k)).accuracy;
  });
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(runs);
}

/// Deterministic per seed: draws candidates until one passes the acceptance
/// rules in GenerationOptions.
inline QuboInstance generate_instance(std::size_t n, std::uint64_t seed,
                                      const GenerationOptions& opt = {}) {
  if (n < kMinInstanceQubits || n > kMaxInstanceQubits) {
    throw ValidationError("generated instances need " + std::to_string(kMinInstanceQubits) +
                          " <= n <= " + std::to_string(kMaxInstanceQubits) + ", got " +
                          std::to_string(n));
  }
  Rng rng(seed);
  std::string last_reason = "no candidates drawn";
  for (std::size_t c = 0; c < opt.max_candidates; ++c) {
    auto inst = make_instance("gen_q" + std::to_string(n) + "_s" + std::to_string(seed),
                              random_symmetric(n, rng), seed);
    if (inst.ground_states.size() != 1) {
      last_reason = "degenerate ground state";
      continue;
    }
    const double acc = probe_accuracy(inst, derive_seed(seed, c), opt.probe_runs, opt.jobs);
    if (acc < opt.min_probe_accuracy || acc > opt.max_probe_accuracy) {
      last_reason = "probe accuracy " + std::to_string(acc) + " outside [" +
                    std::to_string(opt.min_probe_accuracy) + ", " +
                    std::to_string(opt.max_probe_accuracy) + "]";
      continue;
    }
    return inst;
  }
  throw GenerationError("no acceptable instance after " + std::to_string(opt.max_candidates) +
                        " candidates; last rejection: " + last_reason);
}

}  // namespace toniq
