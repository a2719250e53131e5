#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toniq/errors.hpp"

namespace toniq {

using Complex = std::complex<double>;
using Distribution = std::vector<double>;

inline constexpr std::size_t kMaxSimQubits = 10;

enum class GateKind { H, RX, RZ, RZZ, CNOT, SWAP };

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::RX: return "RX";
    case GateKind::RZ: return "RZ";
    case GateKind::RZZ: return "RZZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::SWAP: return "SWAP";
  }
  return "?";
}

inline constexpr bool is_two_qubit(GateKind k) {
  return k == GateKind::RZZ || k == GateKind::CNOT || k == GateKind::SWAP;
}

/// One gate. For CNOT, targets[0] is the control. Rotations follow
/// R_P(theta) = exp(-i theta P / 2); RZZ uses P = Z (x) Z.
struct GateOp {
  GateKind kind = GateKind::H;
  std::array<std::size_t, 2> targets{0, 0};
  double angle = 0.0;

  static GateOp h(std::size_t q) { return {GateKind::H, {q, q}, 0.0}; }
  static GateOp rx(std::size_t q, double theta) { return {GateKind::RX, {q, q}, theta}; }
  static GateOp rz(std::size_t q, double theta) { return {GateKind::RZ, {q, q}, theta}; }
  static GateOp rzz(std::size_t a, std::size_t b, double theta) {
    return {GateKind::RZZ, {a, b}, theta};
  }
  static GateOp cnot(std::size_t control, std::size_t target) {
    return {GateKind::CNOT, {control, target}, 0.0};
  }
  static GateOp swap(std::size_t a, std::size_t b) { return {GateKind::SWAP, {a, b}, 0.0}; }

  std::size_t arity() const noexcept { return is_two_qubit(kind) ? 2 : 1; }
  std::span<const std::size_t> qubits() const noexcept { return {targets.data(), arity()}; }

  /// Inverse gate (negated angle; H, CNOT and SWAP are self-inverse).
  GateOp inverse() const {
    GateOp g = *this;
    g.angle = -angle;
    return g;
  }

  friend bool operator==(const GateOp&, const GateOp&) = default;
};

using Circuit = std::vector<GateOp>;

inline void validate_gate(const GateOp& g, std::size_t n) {
  for (auto q : g.qubits()) {
    if (q >= n) {
      throw ValidationError(std::string(gate_name(g.kind)) + " target " +
                            std::to_string(q) + " out of range for " +
                            std::to_string(n) + " qubits");
    }
  }
  if (g.arity() == 2 && g.targets[0] == g.targets[1]) {
    throw ValidationError(std::string(gate_name(g.kind)) +
                          " targets must be distinct");
  }
}

using Mat2 = std::array<Complex, 4>;   // row-major
using Mat4 = std::array<Complex, 16>;  // row-major, local index = bit_a + 2 bit_b

namespace kernels {

inline void apply_mat2(std::span<Complex> v, std::size_t q, const Mat2& m) {
  const std::size_t mask = std::size_t{1} << q;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i & mask) continue;
    const Complex a0 = v[i];
    const Complex a1 = v[i | mask];
    v[i] = m[0] * a0 + m[1] * a1;
    v[i | mask] = m[2] * a0 + m[3] * a1;
  }
}

inline void apply_diag2(std::span<Complex> v, std::size_t q, Complex d0, Complex d1) {
  const std::size_t mask = std::size_t{1} << q;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= (i & mask) ? d1 : d0;
}

/// diag(same, diff, diff, same) on the parity of bits a and b.
inline void apply_parity_phase(std::span<Complex> v, std::size_t a, std::size_t b,
                               Complex same, Complex diff) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool parity = ((i >> a) ^ (i >> b)) & 1u;
    v[i] *= parity ? diff : same;
  }
}

inline void apply_cnot(std::span<Complex> v, std::size_t control, std::size_t target) {
  const std::size_t cm = std::size_t{1} << control;
  const std::size_t tm = std::size_t{1} << target;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((i & cm) && !(i & tm)) std::swap(v[i], v[i | tm]);
  }
}

inline void apply_swap(std::span<Complex> v, std::size_t a, std::size_t b) {
  const std::size_t am = std::size_t{1} << a;
  const std::size_t bm = std::size_t{1} << b;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((i & am) && !(i & bm)) std::swap(v[i], v[(i & ~am) | bm]);
  }
}

inline void apply_mat4(std::span<Complex> v, std::size_t a, std::size_t b, const Mat4& m) {
  const std::size_t am = std::size_t{1} << a;
  const std::size_t bm = std::size_t{1} << b;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((i & am) || (i & bm)) continue;
    const std::array<std::size_t, 4> idx{i, i | am, i | bm, i | am | bm};
    std::array<Complex, 4> in{v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]};
    for (std::size_t r = 0; r < 4; ++r) {
      Complex acc = 0.0;
      for (std::size_t c = 0; c < 4; ++c) acc += m[r * 4 + c] * in[c];
      v[idx[r]] = acc;
    }
  }
}

/// Applies g to the register v. With conjugate set, the complex conjugate of
/// the gate matrix is applied and targets are shifted by `offset` (used for
/// the column half of a vectorized density matrix).
inline void apply_gate(std::span<Complex> v, const GateOp& g, std::size_t offset = 0,
                       bool conjugate = false) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const std::size_t a = g.targets[0] + offset;
  const std::size_t b = g.targets[1] + offset;
  const double half = 0.5 * g.angle;
  const double c = std::cos(half);
  const double s = conjugate ? -std::sin(half) : std::sin(half);
  switch (g.kind) {
    case GateKind::H:
      apply_mat2(v, a, {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2});
      break;
    case GateKind::RX:
      apply_mat2(v, a, {Complex(c, 0), Complex(0, -s), Complex(0, -s), Complex(c, 0)});
      break;
    case GateKind::RZ:
      apply_diag2(v, a, Complex(c, -s), Complex(c, s));
      break;
    case GateKind::RZZ:
      apply_parity_phase(v, a, b, Complex(c, -s), Complex(c, s));
      break;
    case GateKind::CNOT:
      apply_cnot(v, a, b);
      break;
    case GateKind::SWAP:
      apply_swap(v, a, b);
      break;
  }
}

}  // namespace kernels

/// Pure state on n qubits; amplitude index bit i is qubit i.
class StateVector {
 public:
  explicit StateVector(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxSimQubits) {
      throw CapacityError("statevector supports 1.." + std::to_string(kMaxSimQubits) +
                          " qubits, got " + std::to_string(n));
    }
    amp_.assign(std::size_t{1} << n, Complex(0.0));
    amp_[0] = 1.0;
  }

  /// Builds from explicit amplitudes (length must be a power of two).
  static StateVector from_amplitudes(std::vector<Complex> amps) {
    std::size_t n = 0;
    while ((std::size_t{1} << n) < amps.size()) ++n;
    if ((std::size_t{1} << n) != amps.size()) {
      throw ValidationError("amplitude count must be a power of two");
    }
    StateVector sv(n);
    sv.amp_ = std::move(amps);
    return sv;
  }

  std::size_t num_qubits() const noexcept { return n_; }
  std::size_t dim() const noexcept { return amp_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amp_; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
  }

  void apply(const GateOp& g) {
    validate_gate(g, n_);
    kernels::apply_gate(amp_, g);
  }

  void apply(std::span<const GateOp> circuit) {
    for (const auto& g : circuit) apply(g);
  }

 private:
  std::size_t n_;
  std::vector<Complex> amp_;
};

/// Mixed state on n qubits. Stored vectorized: entry (r, c) lives at
/// r | (c << n), so row operations act on bits [0, n) and column operations on
/// bits [n, 2n).
class DensityMatrix {
 public:
  explicit DensityMatrix(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxSimQubits) {
      throw CapacityError("density matrix supports 1.." + std::to_string(kMaxSimQubits) +
                          " qubits, got " + std::to_string(n));
    }
    rho_.assign(std::size_t{1} << (2 * n), Complex(0.0));
    rho_[0] = 1.0;
  }

  static DensityMatrix from_pure(const StateVector& sv) {
    DensityMatrix dm(sv.num_qubits());
    const auto a = sv.amplitudes();
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a.size(); ++c) dm(r, c) = a[r] * std::conj(a[c]);
    return dm;
  }

  std::size_t num_qubits() const noexcept { return n_; }
  std::size_t dim() const noexcept { return std::size_t{1} << n_; }

  Complex& operator()(std::size_t r, std::size_t c) { return rho_[r | (c << n_)]; }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return rho_[r | (c << n_)];
  }

  std::span<Complex> raw() noexcept { return rho_; }
  std::span<const Complex> raw() const noexcept { return rho_; }

  Complex trace() const {
    Complex t = 0.0;
    for (std::size_t k = 0; k < dim(); ++k) t += (*this)(k, k);
    return t;
  }

  double hermiticity_error() const {
    double err = 0.0;
    for (std::size_t r = 0; r < dim(); ++r)
      for (std::size_t c = 0; c < dim(); ++c)
        err = std::max(err, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return err;
  }

  void apply(const GateOp& g) {
    validate_gate(g, n_);
    kernels::apply_gate(rho_, g, 0, false);
    kernels::apply_gate(rho_, g, n_, true);
  }

  void apply(std::span<const GateOp> circuit) {
    for (const auto& g : circuit) apply(g);
  }

 private:
  std::size_t n_;
  std::vector<Complex> rho_;
};

// ---------------------------------------------------------------------------
// Noise channels

/// Kraus representation on 1 or 2 qubits. Matrices are row-major with local
/// basis index bit_a + 2 bit_b for two-qubit channels.
class NoiseChannel {
 public:
  static constexpr double kCompletenessTol = 1e-8;

  static NoiseChannel from_kraus(std::size_t arity, std::vector<std::vector<Complex>> kraus) {
    if (arity != 1 && arity != 2) throw ChannelError("channels act on 1 or 2 qubits");
    if (kraus.empty()) throw ChannelError("channel needs at least one Kraus operator");
    const std::size_t d = std::size_t{1} << arity;
    for (const auto& k : kraus) {
      if (k.size() != d * d) throw ChannelError("Kraus operator has wrong dimension");
    }
    // sum_k K^dagger K == I
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        Complex s = 0.0;
        for (const auto& k : kraus)
          for (std::size_t m = 0; m < d; ++m) s += std::conj(k[m * d + i]) * k[m * d + j];
        const Complex expected = (i == j) ? 1.0 : 0.0;
        if (std::abs(s - expected) > kCompletenessTol) {
          throw ChannelError("Kraus operators violate completeness");
        }
      }
    }
    NoiseChannel ch;
    ch.arity_ = arity;
    ch.kraus_ = std::move(kraus);
    return ch;
  }

  std::size_t arity() const noexcept { return arity_; }
  const std::vector<std::vector<Complex>>& kraus() const noexcept { return kraus_; }

 private:
  std::size_t arity_ = 1;
  std::vector<std::vector<Complex>> kraus_;
};

namespace channels {

inline const std::array<Mat2, 4>& paulis() {
  static const std::array<Mat2, 4> p{
      Mat2{1, 0, 0, 1},
      Mat2{0, 1, 1, 0},
      Mat2{0, Complex(0, -1), Complex(0, 1), 0},
      Mat2{1, 0, 0, -1},
  };
  return p;
}

inline NoiseChannel identity(std::size_t arity = 1) {
  const std::size_t d = std::size_t{1} << arity;
  std::vector<Complex> id(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) id[i * d + i] = 1.0;
  return NoiseChannel::from_kraus(arity, {id});
}

/// rho -> (1 - p) rho + p I/d on the target qubits.
inline NoiseChannel depolarizing(double p, std::size_t arity = 1) {
  if (!(p >= 0.0 && p <= 1.0)) throw ChannelError("depolarizing probability outside [0,1]");
  const auto& P = paulis();
  std::vector<std::vector<Complex>> kraus;
  if (arity == 1) {
    for (std::size_t a = 0; a < 4; ++a) {
      const double w = std::sqrt(a == 0 ? 1.0 - 0.75 * p : 0.25 * p);
      std::vector<Complex> k(4);
      for (std::size_t i = 0; i < 4; ++i) k[i] = w * P[a][i];
      kraus.push_back(std::move(k));
    }
  } else if (arity == 2) {
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        const double w = std::sqrt(a == 0 && b == 0 ? 1.0 - 15.0 * p / 16.0 : p / 16.0);
        // local index = bit_first + 2 bit_second; P[a] acts on the first qubit.
        std::vector<Complex> k(16);
        for (std::size_t r = 0; r < 4; ++r)
          for (std::size_t c = 0; c < 4; ++c)
            k[r * 4 + c] = w * P[a][(r & 1) * 2 + (c & 1)] * P[b][(r >> 1) * 2 + (c >> 1)];
        kraus.push_back(std::move(k));
      }
    }
  } else {
    throw ChannelError("depolarizing channel supports 1 or 2 qubits");
  }
  return NoiseChannel::from_kraus(arity, std::move(kraus));
}

inline NoiseChannel amplitude_damping(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ChannelError("damping rate outside [0,1]");
  return NoiseChannel::from_kraus(
      1, {{1, 0, 0, std::sqrt(1.0 - gamma)}, {0, std::sqrt(gamma), 0, 0}});
}

inline NoiseChannel phase_flip(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ChannelError("phase-flip probability outside [0,1]");
  const double a = std::sqrt(1.0 - p);
  const double b = std::sqrt(p);
  return NoiseChannel::from_kraus(1, {{a, 0, 0, a}, {b, 0, 0, -b}});
}

/// Decoherence during an idle interval of `duration`: amplitude damping with
/// gamma = 1 - exp(-d/T1), then a phase flip that brings the total coherence
/// decay to exp(-d/T2). The pure-dephasing rate is clamped at zero.
struct Relaxation {
  double gamma = 0.0;
  double phase_flip = 0.0;
};

inline Relaxation relaxation(double duration, double t1, double t2) {
  Relaxation r;
  if (duration <= 0.0) return r;
  if (t1 > 0.0) r.gamma = 1.0 - std::exp(-duration / t1);
  if (t2 > 0.0) {
    const double inv_t1 = t1 > 0.0 ? 1.0 / t1 : 0.0;
    const double inv_tphi = std::max(0.0, 1.0 / t2 - 0.5 * inv_t1);
    r.phase_flip = 0.5 * (1.0 - std::exp(-duration * inv_tphi));
  }
  return r;
}

}  // namespace channels

/// rho <- sum_k K rho K^dagger on the given targets.
inline void apply_channel(DensityMatrix& rho, const NoiseChannel& ch,
                          std::span<const std::size_t> targets) {
  if (targets.size() != ch.arity()) {
    throw ValidationError("channel arity " + std::to_string(ch.arity()) +
                          " does not match " + std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = rho.num_qubits();
  for (auto t : targets) {
    if (t >= n) throw ValidationError("channel target out of range");
  }
  if (targets.size() == 2 && targets[0] == targets[1]) {
    throw ValidationError("channel targets must be distinct");
  }

  auto raw = rho.raw();
  std::vector<Complex> acc(raw.size(), Complex(0.0));
  std::vector<Complex> work(raw.size());
  for (const auto& k : ch.kraus()) {
    std::copy(raw.begin(), raw.end(), work.begin());
    if (ch.arity() == 1) {
      const Mat2 m{k[0], k[1], k[2], k[3]};
      const Mat2 mc{std::conj(k[0]), std::conj(k[1]), std::conj(k[2]), std::conj(k[3])};
      kernels::apply_mat2(work, targets[0], m);
      kernels::apply_mat2(work, targets[0] + n, mc);
    } else {
      Mat4 m{};
      Mat4 mc{};
      for (std::size_t i = 0; i < 16; ++i) {
        m[i] = k[i];
        mc[i] = std::conj(k[i]);
      }
      kernels::apply_mat4(work, targets[0], targets[1], m);
      kernels::apply_mat4(work, targets[0] + n, targets[1] + n, mc);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
  }
  std::copy(acc.begin(), acc.end(), raw.begin());
}

inline void apply_channel(DensityMatrix& rho, const NoiseChannel& ch,
                          std::initializer_list<std::size_t> targets) {
  apply_channel(rho, ch, std::span<const std::size_t>(targets.begin(), targets.size()));
}

/// Closed form of the depolarizing channel, rho -> (1-p) rho + p Tr_T(rho) (x) I/d.
/// Equivalent to apply_channel(rho, channels::depolarizing(p, |T|), T).
inline void apply_depolarizing(DensityMatrix& rho, double p,
                               std::span<const std::size_t> targets) {
  if (p == 0.0) return;
  if (!(p >= 0.0 && p <= 1.0)) throw ChannelError("depolarizing probability outside [0,1]");
  const std::size_t n = rho.num_qubits();
  std::size_t tmask = 0;
  for (auto t : targets) {
    if (t >= n) throw ValidationError("channel target out of range");
    tmask |= std::size_t{1} << t;
  }
  const std::size_t d = std::size_t{1} << targets.size();
  const std::size_t dim = rho.dim();

  // Partial trace over targets, indexed by (row, col) with target bits cleared.
  std::vector<Complex> reduced(dim * dim, Complex(0.0));
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      if ((r & tmask) != (c & tmask)) continue;
      reduced[(r & ~tmask) * dim + (c & ~tmask)] += rho(r, c);
    }
  }
  const double keep = 1.0 - p;
  const double mix = p / static_cast<double>(d);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      Complex v = keep * rho(r, c);
      if ((r & tmask) == (c & tmask)) v += mix * reduced[(r & ~tmask) * dim + (c & ~tmask)];
      rho(r, c) = v;
    }
  }
}

/// Closed form of amplitude damping (gamma) followed by a phase flip (pz) on
/// qubit q. Equivalent to the two Kraus channels applied in that order.
inline void apply_relaxation(DensityMatrix& rho, std::size_t q, double gamma, double pz) {
  if (gamma == 0.0 && pz == 0.0) return;
  if (q >= rho.num_qubits()) throw ValidationError("channel target out of range");
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = rho.dim();
  const double coherence = std::sqrt(1.0 - gamma) * (1.0 - 2.0 * pz);
  for (std::size_t r = 0; r < dim; ++r) {
    if (r & mask) continue;
    for (std::size_t c = 0; c < dim; ++c) {
      if (c & mask) continue;
      const Complex excited = rho(r | mask, c | mask);
      rho(r, c) += gamma * excited;
      rho(r | mask, c | mask) = (1.0 - gamma) * excited;
      rho(r, c | mask) *= coherence;
      rho(r | mask, c) *= coherence;
    }
  }
}

// ---------------------------------------------------------------------------
// Measurement

inline Distribution probabilities(const StateVector& sv) {
  Distribution p(sv.dim());
  const auto a = sv.amplitudes();
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(a[k]);
  return p;
}

/// Diagonal of rho; tiny negative round-off is clipped to zero.
inline Distribution probabilities(const DensityMatrix& rho) {
  Distribution p(rho.dim());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::max(0.0, rho(k, k).real());
  return p;
}

/// p01 = P(read 1 | prepared 0), p10 = P(read 0 | prepared 1).
struct ReadoutError {
  double p01 = 0.0;
  double p10 = 0.0;
  friend bool operator==(const ReadoutError&, const ReadoutError&) = default;
};

/// Applies the tensor product of per-qubit confusion matrices; flips[i] is
/// the readout error of bit i of the outcome index.
inline Distribution apply_readout_error(Distribution p, std::span<const ReadoutError> flips) {
  const std::size_t n = flips.size();
  if (p.size() != (std::size_t{1} << n)) {
    throw ValidationError("readout error count does not match distribution size");
  }
  for (std::size_t q = 0; q < n; ++q) {
    const auto [p01, p10] = flips[q];
    if (!(p01 >= 0.0 && p01 <= 1.0 && p10 >= 0.0 && p10 <= 1.0)) {
      throw ValidationError("readout flip probabilities must lie in [0,1]");
    }
    if (p01 == 0.0 && p10 == 0.0) continue;
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k & mask) continue;
      const double a0 = p[k];
      const double a1 = p[k | mask];
      p[k] = (1.0 - p01) * a0 + p10 * a1;
      p[k | mask] = p01 * a0 + (1.0 - p10) * a1;
    }
  }
  return p;
}

}  // namespace toniq
