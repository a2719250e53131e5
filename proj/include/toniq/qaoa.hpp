#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "toniq/backend.hpp"
#include "toniq/errors.hpp"
#include "toniq/nelder_mead.hpp"
#include "toniq/qubo.hpp"
#include "toniq/random.hpp"
#include "toniq/simcore.hpp"

namespace toniq {

/// Ising form of a QUBO under x_i = (1 - z_i) / 2:
/// x^T Q x = offset + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j.
struct IsingForm {
  struct Coupling {
    std::size_t i, j;
    double value;
  };
  std::vector<double> h;
  std::vector<Coupling> couplings;  // i < j, row-major order, zeros dropped
  double offset = 0.0;
};

inline IsingForm ising_from_qubo(const QMatrix& q) {
  const std::size_t n = q.size();
  IsingForm f;
  f.h.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    f.h[i] -= 0.5 * q(i, i);
    f.offset += 0.5 * q(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double qij = q(i, j);
      if (qij == 0.0) continue;
      f.h[i] -= 0.5 * qij;
      f.h[j] -= 0.5 * qij;
      f.offset += 0.5 * qij;
      f.couplings.push_back({i, j, 0.5 * qij});
    }
  }
  return f;
}

struct QaoaParams {
  std::vector<double> gammas;
  std::vector<double> betas;

  std::size_t layers() const noexcept { return gammas.size(); }

  /// Optimizer vector layout: [gamma_1..gamma_p, beta_1..beta_p].
  std::vector<double> flatten() const {
    std::vector<double> v(gammas);
    v.insert(v.end(), betas.begin(), betas.end());
    return v;
  }

  static QaoaParams unflatten(const std::vector<double>& v) {
    if (v.size() % 2 != 0) throw ValidationError("parameter vector must have even length");
    const auto p = static_cast<std::ptrdiff_t>(v.size() / 2);
    return {{v.begin(), v.begin() + p}, {v.begin() + p, v.end()}};
  }

  friend bool operator==(const QaoaParams&, const QaoaParams&) = default;
};

/// Logical QAOA circuit: H on every qubit, then per layer RZ(2 gamma h_i) for
/// each nonzero field, RZZ(2 gamma J_ij) for each nonzero coupling in
/// row-major order, and the RX(2 beta) mixer. The Ising offset is a global
/// phase and is dropped.
inline Circuit build_ansatz(const QMatrix& q, const QaoaParams& params) {
  if (params.gammas.size() != params.betas.size() || params.gammas.empty()) {
    throw ValidationError("QAOA needs p >= 1 and equal numbers of gammas and betas");
  }
  const std::size_t n = q.size();
  const auto ising = ising_from_qubo(q);
  Circuit c;
  c.reserve(n + params.layers() * (2 * n + ising.couplings.size()));
  for (std::size_t i = 0; i < n; ++i) c.push_back(GateOp::h(i));
  for (std::size_t l = 0; l < params.layers(); ++l) {
    const double g = params.gammas[l];
    for (std::size_t i = 0; i < n; ++i)
      if (ising.h[i] != 0.0) c.push_back(GateOp::rz(i, 2.0 * g * ising.h[i]));
    for (const auto& cp : ising.couplings) c.push_back(GateOp::rzz(cp.i, cp.j, 2.0 * g * cp.value));
    for (std::size_t i = 0; i < n; ++i) c.push_back(GateOp::rx(i, 2.0 * params.betas[l]));
  }
  return c;
}

inline Circuit build_ansatz(const QuboInstance& inst, const QaoaParams& params) {
  return build_ansatz(inst.q, params);
}

inline void check_distribution_size(const Distribution& dist, std::size_t n) {
  if (dist.size() != (std::size_t{1} << n)) {
    throw ValidationError("distribution has " + std::to_string(dist.size()) +
                          " entries, expected 2^" + std::to_string(n));
  }
}

inline double cost_expectation(const Distribution& dist, const std::vector<double>& costs) {
  double e = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) e += dist[k] * costs[k];
  return e;
}

/// sum_x dist(x) x^T Q x.
inline double cost_expectation(const Distribution& dist, const QuboInstance& inst) {
  check_distribution_size(dist, inst.n());
  return cost_expectation(dist, cost_table(inst.q));
}

/// Probability mass on the instance's ground states.
inline double accuracy_of(const Distribution& dist, const QuboInstance& inst) {
  check_distribution_size(dist, inst.n());
  double a = 0.0;
  for (auto k : inst.dec_states) a += dist[k];
  return std::clamp(a, 0.0, 1.0);
}

struct OptimizerConfig {
  /// 0 selects the default of 200 evaluations per layer.
  std::size_t max_evals = 0;
  double xtol = 1e-3;
  double ftol = 1e-4;
  std::uint64_t init_seed = 0;

  std::size_t budget(std::size_t layers) const {
    return max_evals ? max_evals : 200 * layers;
  }
};

struct RunOptions {
  /// Invert the backend's readout confusion before computing cost/accuracy.
  bool mitigate_readout = false;
  /// 0 uses the exact distribution; otherwise the cost seen by the optimizer
  /// is estimated from this many multinomial shots.
  std::size_t shots = 0;
};

struct QaoaRunResult {
  double accuracy = 0.0;
  double final_cost = 0.0;
  std::size_t evals_used = 0;
  QaoaParams params;
};

namespace detail {

inline Distribution sample_counts(const Distribution& dist, std::size_t shots, Rng& rng) {
  // Conditional binomial decomposition of the multinomial.
  Distribution out(dist.size(), 0.0);
  std::size_t remaining = shots;
  double mass_left = 1.0;
  for (std::size_t k = 0; k < dist.size() && remaining > 0; ++k) {
    const double pk = std::clamp(dist[k] / std::max(mass_left, 1e-300), 0.0, 1.0);
    std::size_t c = remaining;
    if (k + 1 < dist.size()) {
      std::binomial_distribution<std::size_t> bin(remaining, pk);
      c = bin(rng.engine());
    }
    out[k] = static_cast<double>(c) / static_cast<double>(shots);
    remaining -= c;
    mass_left -= dist[k];
  }
  return out;
}

}  // namespace detail

/// Evaluates QAOA parameter vectors for one (instance, backend) pair. The
/// circuit is routed once; later evaluations only rebind angles. Noiseless
/// backends are simulated directly on the logical circuit.
class QaoaEvaluator {
 public:
  QaoaEvaluator(const QuboInstance& inst, const BackendModel& backend, std::size_t layers,
                RunOptions options = {})
      : inst_(&inst), backend_(&backend), layers_(layers), options_(options),
        costs_(cost_table(inst.q)) {
    if (layers == 0) throw ValidationError("n_layers must be >= 1");
    if (backend.has_noise()) {
      QaoaParams zero{std::vector<double>(layers, 0.0), std::vector<double>(layers, 0.0)};
      // Fixed nonzero angles so no rotation is dropped from the template.
      for (auto& g : zero.gammas) g = 1.0;
      for (auto& b : zero.betas) b = 1.0;
      const auto layout = select_layout(backend, inst.n());
      compiled_ = route_and_compile(build_ansatz(inst.q, zero), backend, layout);
    }
  }

  const QuboInstance& instance() const { return *inst_; }
  const std::vector<double>& costs() const { return costs_; }

  /// Outcome distribution over logical bitstrings after readout (and
  /// mitigation, when enabled).
  Distribution distribution(const QaoaParams& params) const {
    const auto logical = build_ansatz(inst_->q, params);
    if (!compiled_) {
      StateVector sv(inst_->n());
      sv.apply(logical);
      return probabilities(sv);
    }
    CompiledCircuit c = *compiled_;
    rebind_angles(c, logical);
    auto dist = execute(c, *backend_);
    if (options_.mitigate_readout) dist = mitigate_readout(std::move(dist), *backend_, c.layout);
    return dist;
  }

  double cost(const Distribution& dist) const { return cost_expectation(dist, costs_); }

  const std::optional<CompiledCircuit>& compiled() const { return compiled_; }

 private:
  const QuboInstance* inst_;
  const BackendModel* backend_;
  std::size_t layers_;
  RunOptions options_;
  std::vector<double> costs_;
  std::optional<CompiledCircuit> compiled_;
};

/// Random initial angles: gamma_l in [0, 2 pi), beta_l in [0, pi).
inline QaoaParams random_params(std::size_t layers, Rng& rng) {
  QaoaParams p;
  for (std::size_t l = 0; l < layers; ++l) p.gammas.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  for (std::size_t l = 0; l < layers; ++l) p.betas.push_back(rng.uniform(0.0, std::numbers::pi));
  return p;
}

/// One complete QAOA optimization. Deterministic in (inputs, run_seed).
inline QaoaRunResult run_once(const QaoaEvaluator& eval, std::size_t layers,
                              const OptimizerConfig& opt, std::uint64_t run_seed,
                              RunOptions options = {}) {
  if (layers == 0) throw ValidationError("n_layers must be >= 1");
  Rng rng(derive_seed(run_seed, opt.init_seed));
  const auto init = random_params(layers, rng);
  Rng shot_rng(mix64(run_seed) ^ 0x5851f42d4c957f2dULL);

  NelderMeadOptions nm;
  nm.max_evals = opt.budget(layers);
  nm.xtol = opt.xtol;
  nm.ftol = opt.ftol;
  if (nm.max_evals < 2 * layers + 2) throw ValidationError("max_evals must be >= 2p + 2");

  auto objective = [&](const std::vector<double>& x) {
    auto dist = eval.distribution(QaoaParams::unflatten(x));
    if (options.shots > 0) dist = detail::sample_counts(dist, options.shots, shot_rng);
    return eval.cost(dist);
  };
  const auto res = nelder_mead(objective, init.flatten(), nm);
  if (!std::isfinite(res.f)) throw RunError("optimizer produced a non-finite cost");

  QaoaRunResult out;
  out.params = QaoaParams::unflatten(res.x);
  const auto dist = eval.distribution(out.params);
  out.final_cost = eval.cost(dist);
  out.accuracy = accuracy_of(dist, eval.instance());
  out.evals_used = res.evals;
  if (!std::isfinite(out.final_cost) || !std::isfinite(out.accuracy)) {
    throw RunError("final state produced a non-finite cost or accuracy");
  }
  return out;
}

inline QaoaRunResult run_once(const QuboInstance& inst, const BackendModel& backend,
                              std::size_t layers, const OptimizerConfig& opt,
                              std::uint64_t run_seed, RunOptions options = {}) {
  QaoaEvaluator eval(inst, backend, layers, options);
  return run_once(eval, layers, opt, run_seed, options);
}

}  // namespace toniq
