#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "toniq/random.hpp"
#include "toniq/simcore.hpp"

using namespace toniq;
using Catch::Approx;

namespace {

Circuit random_circuit(std::size_t n, std::size_t len, Rng& rng) {
  Circuit c;
  for (std::size_t k = 0; k < len; ++k) {
    const auto a = rng.below(n);
    auto b = rng.below(n);
    if (n > 1)
      while (b == a) b = rng.below(n);
    const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
    switch (rng.below(n > 1 ? 6 : 3)) {
      case 0: c.push_back(GateOp::h(a)); break;
      case 1: c.push_back(GateOp::rx(a, th)); break;
      case 2: c.push_back(GateOp::rz(a, th)); break;
      case 3: c.push_back(GateOp::rzz(a, b, th)); break;
      case 4: c.push_back(GateOp::cnot(a, b)); break;
      default: c.push_back(GateOp::swap(a, b)); break;
    }
  }
  return c;
}

StateVector random_state(std::size_t n, Rng& rng) {
  std::vector<Complex> a(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& v : a) {
    v = Complex(rng.normal(), rng.normal());
    norm += std::norm(v);
  }
  for (auto& v : a) v /= std::sqrt(norm);
  return StateVector::from_amplitudes(a);
}

/// Random mixed state: an equal mixture of two random pure states after a
/// random unitary-ish circuit.
DensityMatrix random_mixed(std::size_t n, Rng& rng) {
  auto a = DensityMatrix::from_pure(random_state(n, rng));
  apply_depolarizing(a, 0.3, std::vector<std::size_t>{0});
  a.apply(random_circuit(n, 10, rng));
  return a;
}

double max_diff(const DensityMatrix& a, const DensityMatrix& b) {
  double d = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) d = std::max(d, std::abs(a(r, c) - b(r, c)));
  return d;
}

}  // namespace

TEST_CASE("gate examples") {
  StateVector s(1);
  s.apply(GateOp::h(0));
  CHECK(s.amplitudes()[0].real() == Approx(1.0 / std::sqrt(2.0)));
  CHECK(s.amplitudes()[1].real() == Approx(1.0 / std::sqrt(2.0)));

  auto t = StateVector::from_amplitudes({0, 1, 0, 0});  // qubit 0 = 1
  t.apply(GateOp::cnot(0, 1));
  CHECK(std::abs(t.amplitudes()[3]) == Approx(1.0));

  StateVector z(2);
  z.apply(GateOp::rzz(0, 1, 0.7));
  CHECK(probabilities(z)[0] == Approx(1.0));

  CHECK_THROWS_AS(z.apply(GateOp::h(2)), ValidationError);
  CHECK_THROWS_AS(z.apply(GateOp::cnot(1, 1)), ValidationError);
  CHECK_THROWS_AS(StateVector(0), CapacityError);
  CHECK_THROWS_AS(StateVector(kMaxSimQubits + 1), CapacityError);
}

TEST_CASE("rotation conventions") {
  // RX(pi)|0> = -i|1>, RZ(theta) = diag(e^{-i theta/2}, e^{i theta/2}).
  StateVector s(1);
  s.apply(GateOp::rx(0, std::numbers::pi));
  CHECK(s.amplitudes()[1].imag() == Approx(-1.0));
  auto p = StateVector::from_amplitudes({1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
  p.apply(GateOp::rz(0, 0.6));
  const auto rel = p.amplitudes()[1] / p.amplitudes()[0];
  CHECK(std::arg(rel) == Approx(0.6));
  // RZZ(theta) = exp(-i theta Z Z / 2): |01> picks up e^{+i theta/2}.
  auto q = StateVector::from_amplitudes({1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0, 0});
  q.apply(GateOp::rzz(0, 1, 0.8));
  CHECK(std::arg(q.amplitudes()[1] / q.amplitudes()[0]) == Approx(0.8));
}

TEST_CASE("gate followed by its inverse restores the state") {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.below(5);
    const auto start = random_state(n, rng);
    auto s = start;
    const auto c = random_circuit(n, 30, rng);
    s.apply(c);
    for (auto it = c.rbegin(); it != c.rend(); ++it) s.apply(it->inverse());
    for (std::size_t k = 0; k < s.dim(); ++k) {
      CHECK(std::abs(s.amplitudes()[k] - start.amplitudes()[k]) < 1e-9);
    }
    CHECK(s.norm_squared() == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("statevector and density matrix agree on noiseless circuits") {
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.below(5);
    const auto c = random_circuit(n, 40, rng);
    StateVector sv(n);
    DensityMatrix dm(n);
    sv.apply(c);
    dm.apply(c);
    const auto ps = probabilities(sv);
    const auto pd = probabilities(dm);
    for (std::size_t k = 0; k < ps.size(); ++k) CHECK(std::abs(ps[k] - pd[k]) < 1e-8);
    CHECK(dm.trace().real() == Approx(1.0).margin(1e-8));
    CHECK(dm.hermiticity_error() < 1e-10);
    const auto pure = DensityMatrix::from_pure(sv);
    CHECK(max_diff(pure, dm) < 1e-8);
  }
}

TEST_CASE("channel examples") {
  Rng rng(9);
  auto rho = random_mixed(3, rng);
  const auto before = rho;
  apply_channel(rho, channels::identity(), {1});
  CHECK(max_diff(rho, before) < 1e-14);

  apply_channel(rho, channels::depolarizing(1.0), {1});
  // Qubit 1 reduced state is I/2.
  Complex r00 = 0, r01 = 0, r11 = 0;
  for (std::size_t k = 0; k < rho.dim(); ++k) {
    if (k & 2) {
      r11 += rho(k, k);
    } else {
      r00 += rho(k, k);
      r01 += rho(k, k | 2);
    }
  }
  CHECK(r00.real() == Approx(0.5));
  CHECK(r11.real() == Approx(0.5));
  CHECK(std::abs(r01) < 1e-12);

  for (const auto& ch : {channels::amplitude_damping(0.3), channels::phase_flip(0.2), channels::depolarizing(0.4)}) {
    apply_channel(rho, ch, {0});
    CHECK(rho.trace().real() == Approx(1.0).margin(1e-8));
    CHECK(rho.hermiticity_error() < 1e-10);
  }
  apply_channel(rho, channels::depolarizing(0.5, 2), {2, 0});
  CHECK(rho.trace().real() == Approx(1.0).margin(1e-8));
}

TEST_CASE("invalid channels are rejected") {
  CHECK_THROWS_AS(NoiseChannel::from_kraus(1, {{1, 0, 0, 0.9}}), ChannelError);
  CHECK_THROWS_AS(NoiseChannel::from_kraus(1, {{1, 0, 0}}), ChannelError);
  CHECK_THROWS_AS(NoiseChannel::from_kraus(3, {{1}}), ChannelError);
  CHECK_THROWS_AS(channels::depolarizing(1.5), ChannelError);
  CHECK_THROWS_AS(channels::amplitude_damping(-0.1), ChannelError);
  DensityMatrix rho(2);
  CHECK_THROWS_AS(apply_channel(rho, channels::depolarizing(0.1, 2), {0}), ValidationError);
  CHECK_THROWS_AS(apply_channel(rho, channels::identity(), {2}), ValidationError);
}

TEST_CASE("depolarizing channels compose multiplicatively") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const double p = rng.uniform(), q = rng.uniform();
    auto a = random_mixed(2, rng);
    auto b = a;
    apply_channel(a, channels::depolarizing(p), {1});
    apply_channel(a, channels::depolarizing(q), {1});
    apply_channel(b, channels::depolarizing(1.0 - (1.0 - p) * (1.0 - q)), {1});
    CHECK(max_diff(a, b) < 1e-12);
  }
}

TEST_CASE("closed-form channels match their Kraus forms") {
  Rng rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rng.below(3);
    const double p = rng.uniform();
    auto a = random_mixed(n, rng);
    auto b = a;
    const std::size_t t0 = rng.below(n);
    std::size_t t1 = rng.below(n);
    while (t1 == t0) t1 = rng.below(n);

    apply_depolarizing(a, p, std::vector<std::size_t>{t0});
    apply_channel(b, channels::depolarizing(p, 1), {t0});
    CHECK(max_diff(a, b) < 1e-12);

    apply_depolarizing(a, p, std::vector<std::size_t>{t0, t1});
    apply_channel(b, channels::depolarizing(p, 2), {t0, t1});
    CHECK(max_diff(a, b) < 1e-12);

    const auto r = channels::relaxation(rng.uniform(0.01, 1.0), rng.uniform(20, 100), rng.uniform(10, 40));
    apply_relaxation(a, t1, r.gamma, r.phase_flip);
    apply_channel(b, channels::amplitude_damping(r.gamma), {t1});
    apply_channel(b, channels::phase_flip(r.phase_flip), {t1});
    CHECK(max_diff(a, b) < 1e-12);
  }
}

TEST_CASE("relaxation parameters") {
  const auto r = channels::relaxation(0.3, 100.0, 80.0);
  CHECK(r.gamma == Approx(1.0 - std::exp(-0.003)));
  // Total coherence decay sqrt(1-gamma)(1-2 pz) equals exp(-d/T2).
  CHECK(std::sqrt(1.0 - r.gamma) * (1.0 - 2.0 * r.phase_flip) == Approx(std::exp(-0.3 / 80.0)));
  // T2 = 2 T1: no extra dephasing.
  CHECK(channels::relaxation(0.3, 50.0, 100.0).phase_flip == Approx(0.0).margin(1e-15));
  CHECK(channels::relaxation(0.3, 0.0, 0.0).gamma == 0.0);
}

TEST_CASE("probabilities examples") {
  StateVector s(3);
  for (std::size_t q = 0; q < 3; ++q) s.apply(GateOp::h(q));
  for (double p : probabilities(s)) CHECK(p == Approx(1.0 / 8.0));
  auto basis = StateVector::from_amplitudes({0, 0, 0, 0, 0, 1, 0, 0});
  const auto pb = probabilities(basis);
  for (std::size_t k = 0; k < 8; ++k) CHECK(pb[k] == (k == 5 ? 1.0 : 0.0));
  Rng rng(1);
  const auto pm = probabilities(random_mixed(3, rng));
  double sum = 0.0;
  for (double p : pm) sum += p;
  CHECK(sum == Approx(1.0).margin(1e-9));
}

TEST_CASE("readout error examples") {
  const Distribution p{0.1, 0.2, 0.3, 0.4};
  const std::vector<ReadoutError> none(2);
  CHECK(apply_readout_error(p, none) == p);
  const std::vector<ReadoutError> one{{0.1, 0.0}};
  const auto r = apply_readout_error({1.0, 0.0}, one);
  CHECK(r[0] == Approx(0.9));
  CHECK(r[1] == Approx(0.1));
  const std::vector<ReadoutError> two{{0.05, 0.1}, {0.2, 0.03}};
  const auto out = apply_readout_error(p, two);
  double sum = 0.0;
  for (double v : out) sum += v;
  CHECK(sum == Approx(1.0));
  // Bit 1 flips: P(read 10) includes P(00) * (1-p01_0) * p01_1.
  CHECK(out[2] == Approx(0.1 * 0.95 * 0.2 + 0.2 * 0.1 * 0.2 + 0.3 * 0.95 * 0.97 + 0.4 * 0.1 * 0.97));
}
