#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

#include "toniq/builtin.hpp"
#include "toniq/instances.hpp"
#include "toniq/nelder_mead.hpp"
#include "toniq/qaoa.hpp"

using namespace toniq;
using Catch::Approx;

namespace {

QaoaParams random_angles(std::size_t p, Rng& rng) { return random_params(p, rng); }

/// Dense oracle: |+>^n, then per layer diag(exp(-i gamma c(x))) and the
/// Kronecker product of single-qubit RX(2 beta) matrices.
Distribution oracle(const QMatrix& q, const QaoaParams& params) {
  const std::size_t n = q.size(), d = std::size_t{1} << n;
  std::vector<Complex> psi(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const auto costs = cost_table(q);
  for (std::size_t l = 0; l < params.layers(); ++l) {
    for (std::size_t x = 0; x < d; ++x) psi[x] *= std::exp(Complex(0, -params.gammas[l] * costs[x]));
    const double c = std::cos(params.betas[l]), s = std::sin(params.betas[l]);
    // Full 2^n x 2^n mixer matrix: product over qubits of [[c, -is], [-is, c]].
    std::vector<Complex> out(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t col = 0; col < d; ++col) {
        Complex m = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
          const bool same = ((r >> k) & 1) == ((col >> k) & 1);
          m *= same ? Complex(c, 0) : Complex(0, -s);
        }
        out[r] += m * psi[col];
      }
    }
    psi = out;
  }
  Distribution p(d);
  for (std::size_t x = 0; x < d; ++x) p[x] = std::norm(psi[x]);
  return p;
}

Distribution simulate(const QMatrix& q, const QaoaParams& params) {
  StateVector sv(q.size());
  sv.apply(build_ansatz(q, params));
  return probabilities(sv);
}

}  // namespace

TEST_CASE("Ising form reproduces the QUBO cost") {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.below(6);
    const auto q = random_symmetric(n, rng);
    const auto f = ising_from_qubo(q);
    for (std::uint64_t x = 0; x < (1ULL << n); ++x) {
      double e = f.offset;
      for (std::size_t i = 0; i < n; ++i) e += f.h[i] * (((x >> i) & 1) ? -1.0 : 1.0);
      for (const auto& cp : f.couplings) {
        const double zi = ((x >> cp.i) & 1) ? -1.0 : 1.0;
        const double zj = ((x >> cp.j) & 1) ? -1.0 : 1.0;
        e += cp.value * zi * zj;
      }
      CHECK(e == Approx(evaluate_cost(q, from_decimal(x, n))).margin(1e-12));
    }
  }
  CHECK(ising_from_qubo(QMatrix{{-1}}).h[0] == 0.5);
}

TEST_CASE("ansatz matches the dense oracle") {
  Rng rng(77);
  for (std::size_t n : {2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto q = random_symmetric(n, rng);
      const auto params = random_angles(1 + rng.below(3), rng);
      const auto a = simulate(q, params);
      const auto b = oracle(q, params);
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-8);
    }
  }
}

TEST_CASE("ansatz structure") {
  const QMatrix q{{0.5, 0.0, -0.2}, {0.0, -0.3, 0.4}, {-0.2, 0.4, 0.0}};
  const QaoaParams p{{0.3, 0.7}, {0.2, 0.1}};
  const auto c = build_ansatz(q, p);
  const auto f = ising_from_qubo(q);
  std::size_t nz_h = 0;
  for (double h : f.h) nz_h += h != 0.0;
  std::size_t h = 0, rx = 0, rz = 0, rzz = 0;
  for (const auto& g : c) {
    h += g.kind == GateKind::H;
    rx += g.kind == GateKind::RX;
    rz += g.kind == GateKind::RZ;
    rzz += g.kind == GateKind::RZZ;
  }
  CHECK(h == 3);
  CHECK(rx == 2 * 3);
  CHECK(rz == 2 * nz_h);
  CHECK(rzz == 2 * 2);  // two nonzero off-diagonal pairs per layer
  // Couplings in row-major order.
  CHECK(c[3 + nz_h].targets == std::array<std::size_t, 2>{0, 2});
  CHECK(c[4 + nz_h].targets == std::array<std::size_t, 2>{1, 2});

  CHECK_THROWS_AS(build_ansatz(q, QaoaParams{{0.1}, {}}), ValidationError);
  CHECK_THROWS_AS(build_ansatz(q, QaoaParams{}), ValidationError);
}

TEST_CASE("zero angles leave the uniform superposition") {
  const auto inst = builtin_instances(4);
  for (double p : simulate(inst.q, QaoaParams{{0.0}, {0.0}})) CHECK(p == Approx(1.0 / 16.0));
}

TEST_CASE("single-qubit grid search reaches the ground state") {
  const QMatrix q{{-1.0}};
  double best = 0.0;
  const int steps = 200;
  for (int a = 0; a < steps; ++a) {
    for (int b = 0; b < steps; ++b) {
      const QaoaParams p{{2 * std::numbers::pi * a / steps}, {std::numbers::pi * b / steps}};
      best = std::max(best, simulate(q, p)[1]);
    }
  }
  CHECK(best > 0.99);
}

TEST_CASE("cost expectation and accuracy examples") {
  const auto inst = builtin_instances(3);
  Distribution delta(8, 0.0);
  delta[inst.dec_states[0]] = 1.0;
  CHECK(cost_expectation(delta, inst) == Approx(inst.ground_energy));
  CHECK(accuracy_of(delta, inst) == 1.0);

  const Distribution uniform(8, 1.0 / 8.0);
  const auto costs = cost_table(inst.q);
  CHECK(cost_expectation(uniform, inst) == Approx(std::accumulate(costs.begin(), costs.end(), 0.0) / 8.0));
  CHECK(accuracy_of(uniform, inst) == Approx(1.0 / 8.0));

  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Distribution d(8);
    double s = 0.0;
    for (auto& v : d) s += (v = rng.uniform());
    for (auto& v : d) v /= s;
    CHECK(cost_expectation(d, inst) >= inst.ground_energy - 1e-12);
  }

  const auto flat = make_instance("flat", QMatrix(3));
  CHECK(accuracy_of(uniform, flat) == Approx(1.0));
  CHECK_THROWS_AS(accuracy_of(Distribution(4, 0.25), inst), ValidationError);
}

TEST_CASE("run_once is deterministic and well formed") {
  const auto inst = builtin_instances(3);
  const auto ideal = ideal_backend(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = run_once(inst, ideal, 2, {}, seed);
    const auto b = run_once(inst, ideal, 2, {}, seed);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.params == b.params);
    CHECK(a.accuracy >= 0.0);
    CHECK(a.accuracy <= 1.0);
    CHECK(a.final_cost >= inst.ground_energy - 1e-9);
    CHECK(a.evals_used <= 400 + 4 + 1);
    CHECK(a.params.layers() == 2);
  }
  OptimizerConfig tiny;
  tiny.max_evals = 3;
  CHECK_THROWS_AS(run_once(inst, ideal, 1, tiny, 0), ValidationError);
  CHECK_THROWS_AS(run_once(inst, ideal, 0, {}, 0), ValidationError);
}

TEST_CASE("evaluator rebinding matches fresh compilation") {
  const auto inst = builtin_instances(4);
  const auto b = topology_preset(Topology::IShape7, {0.001, 0.02, 80, 60, 0.035, 0.3, {0.02, 0.03}, false});
  const QaoaEvaluator eval(inst, b, 2);
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = random_angles(2, rng);
    const auto fresh = execute(route_and_compile(build_ansatz(inst.q, p), b, select_layout(b, 4)), b);
    const auto rebound = eval.distribution(p);
    for (std::size_t k = 0; k < fresh.size(); ++k) CHECK(std::abs(fresh[k] - rebound[k]) < 1e-12);
  }
}

TEST_CASE("noise lowers mean accuracy") {
  const auto inst = builtin_instances(3);
  const auto ideal = ideal_backend(3);
  const auto noisy = line_backend(3, {0.01, 0.1, 30, 20, 0.035, 0.3, {0.05, 0.05}, false});
  double ai = 0.0, an = 0.0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    ai += run_once(inst, ideal, 1, {}, s).accuracy;
    an += run_once(inst, noisy, 1, {}, s).accuracy;
  }
  CHECK(an < ai);
}

TEST_CASE("shot sampling is deterministic per seed") {
  const auto inst = builtin_instances(3);
  const auto ideal = ideal_backend(3);
  RunOptions ro;
  ro.shots = 256;
  const auto a = run_once(inst, ideal, 1, {}, 9, ro);
  const auto b = run_once(inst, ideal, 1, {}, 9, ro);
  CHECK(a.accuracy == b.accuracy);
  Rng rng(1);
  const auto counts = detail::sample_counts({0.25, 0.25, 0.5}, 1000, rng);
  CHECK(counts[0] + counts[1] + counts[2] == Approx(1.0));
}

TEST_CASE("optimizer never ends above its start on the one-angle restriction") {
  const auto inst = builtin_instances(3);
  const auto costs = cost_table(inst.q);
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const double beta = rng.uniform(0, std::numbers::pi);
    auto f = [&](const std::vector<double>& x) {
      return cost_expectation(simulate(inst.q, QaoaParams{{x[0]}, {beta}}), costs);
    };
    const auto res = nelder_mead(f, {rng.uniform(0, 2 * std::numbers::pi)}, NelderMeadOptions{});
    CHECK(res.f <= res.initial_f);
  }
}

TEST_CASE("Nelder-Mead minimizes a quadratic") {
  auto f = [](const std::vector<double>& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 0.5) * (x[1] + 0.5);
  };
  NelderMeadOptions opt;
  opt.max_evals = 2000;
  opt.xtol = 1e-8;
  opt.ftol = 1e-12;
  const auto r = nelder_mead(f, {3.0, 2.0}, opt);
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(1.0).margin(1e-5));
  CHECK(r.x[1] == Approx(-0.5).margin(1e-5));
  CHECK(r.evals <= opt.max_evals);

  NelderMeadOptions small;
  small.max_evals = 20;
  const auto s = nelder_mead(f, {3.0, 2.0}, small);
  CHECK_FALSE(s.converged);
  CHECK(s.evals <= 20 + 3);  // one iteration may overshoot by n + 1
}

TEST_CASE("relabeling qubits permutes the output distribution") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rng.below(3);
    const auto q = random_symmetric(n, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    QMatrix qp(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) qp(perm[i], perm[j]) = q(i, j);
    const auto params = random_angles(2, rng);
    const auto a = simulate(q, params);
    const auto b = simulate(qp, params);
    for (std::size_t x = 0; x < a.size(); ++x) {
      std::size_t y = 0;
      for (std::size_t i = 0; i < n; ++i)
        if ((x >> i) & 1) y |= std::size_t{1} << perm[i];
      CHECK(std::abs(a[x] - b[y]) < 1e-10);
    }
  }
}
