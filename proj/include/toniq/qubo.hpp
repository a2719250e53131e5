#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toniq/errors.hpp"

namespace toniq {

/// Bits are stored qubit-first: bits[i] is qubit i, which is also bit i of the
/// decimal encoding (little-endian).
using Bitstring = std::vector<std::uint8_t>;

inline std::uint64_t to_decimal(const Bitstring& bits) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) v |= std::uint64_t{1} << i;
  }
  return v;
}

inline Bitstring from_decimal(std::uint64_t value, std::size_t n) {
  Bitstring bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = (value >> i) & 1u;
  return bits;
}

/// "0"/"1" characters, qubit 0 first.
inline std::string to_string(const Bitstring& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline Bitstring parse_bitstring(const std::string& s) {
  Bitstring bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') {
      throw ValidationError("bitstring may only contain '0' and '1': " + s);
    }
    bits.push_back(c == '1');
  }
  return bits;
}

/// Dense real square matrix, row-major.
class QMatrix {
 public:
  QMatrix() = default;
  explicit QMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  QMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& row : rows) {
      if (row.size() != n_) throw ValidationError("QMatrix rows must be square");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static QMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    QMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw ValidationError("QMatrix rows must be square");
      }
      for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }

  bool is_symmetric() const noexcept {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
    return out;
  }

  /// Sum of absolute entries; sets the scale for degeneracy tolerances.
  double abs_sum() const noexcept {
    double s = 0.0;
    for (double v : data_) s += std::abs(v);
    return s;
  }

  friend bool operator==(const QMatrix&, const QMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// x^T Q x, summed row-major.
inline double evaluate_cost(const QMatrix& q, std::span<const std::uint8_t> x) {
  if (x.size() != q.size()) {
    throw ValidationError("bitstring length " + std::to_string(x.size()) +
                          " does not match matrix dimension " +
                          std::to_string(q.size()));
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 1) throw ValidationError("bitstring entries must be 0 or 1");
    if (!x[i]) continue;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j]) cost += q(i, j);
    }
  }
  return cost;
}

inline double evaluate_cost(const QMatrix& q, const Bitstring& x) {
  return evaluate_cost(q, std::span<const std::uint8_t>(x));
}

/// Costs of all 2^n bitstrings indexed by their decimal encoding.
inline std::vector<double> cost_table(const QMatrix& q) {
  const std::size_t n = q.size();
  std::vector<double> costs(std::size_t{1} << n);
  Bitstring bits(n);
  for (std::uint64_t k = 0; k < costs.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) bits[i] = (k >> i) & 1u;
    costs[k] = evaluate_cost(q, bits);
  }
  return costs;
}

struct GroundTruth {
  double energy = 0.0;
  std::vector<Bitstring> states;
  std::vector<std::uint64_t> dec_states;
};

inline constexpr std::size_t kMaxBruteForceQubits = 20;

/// Costs within this distance of the minimum count as minimizers. Keeps
/// degeneracy detection immune to summation-order rounding.
inline double degeneracy_tolerance(const QMatrix& q) {
  return 1e-12 * (1.0 + q.abs_sum());
}

/// Exhaustive search over all 2^n bitstrings. Every minimizer is returned,
/// ordered by decimal value.
inline GroundTruth brute_force_solve(const QMatrix& q) {
  if (q.size() > kMaxBruteForceQubits) {
    throw CapacityError("brute force is limited to " +
                        std::to_string(kMaxBruteForceQubits) + " variables, got " +
                        std::to_string(q.size()));
  }
  if (q.size() == 0) throw ValidationError("empty Q matrix");
  const auto costs = cost_table(q);
  double best = costs[0];
  for (double c : costs) best = std::min(best, c);

  const double tol = degeneracy_tolerance(q);
  GroundTruth gt;
  gt.energy = best;
  for (std::uint64_t k = 0; k < costs.size(); ++k) {
    if (costs[k] - best <= tol) {
      gt.dec_states.push_back(k);
      gt.states.push_back(from_decimal(k, q.size()));
    }
  }
  return gt;
}

struct QuboInstance {
  std::string id;
  QMatrix q;
  double ground_energy = 0.0;
  std::vector<Bitstring> ground_states;
  std::vector<std::uint64_t> dec_states;
  std::optional<std::uint64_t> seed;

  std::size_t n() const noexcept { return q.size(); }

  friend bool operator==(const QuboInstance&, const QuboInstance&) = default;
};

inline constexpr std::size_t kMinInstanceQubits = 3;
inline constexpr std::size_t kMaxInstanceQubits = 8;

/// Builds an instance from a user matrix, attaching brute-forced ground truth.
inline QuboInstance make_instance(std::string id, QMatrix q,
                                  std::optional<std::uint64_t> seed = {}) {
  if (!q.is_symmetric()) throw ValidationError("Q matrix must be symmetric");
  auto gt = brute_force_solve(q);
  QuboInstance inst;
  inst.id = std::move(id);
  inst.q = std::move(q);
  inst.ground_energy = gt.energy;
  inst.ground_states = std::move(gt.states);
  inst.dec_states = std::move(gt.dec_states);
  inst.seed = seed;
  return inst;
}

/// Checks the stored ground truth against a fresh enumeration.
inline void validate_instance(const QuboInstance& inst) {
  if (!inst.q.is_symmetric()) throw ValidationError("Q matrix must be symmetric");
  if (inst.ground_states.size() != inst.dec_states.size()) {
    throw ValidationError("ground_states and dec_states differ in length");
  }
  for (std::size_t k = 0; k < inst.ground_states.size(); ++k) {
    if (inst.ground_states[k].size() != inst.n() ||
        to_decimal(inst.ground_states[k]) != inst.dec_states[k]) {
      throw ValidationError("instance " + inst.id +
                            ": dec_states do not match ground_states");
    }
  }
  const auto gt = brute_force_solve(inst.q);
  if (std::abs(gt.energy - inst.ground_energy) > degeneracy_tolerance(inst.q) ||
      gt.dec_states != inst.dec_states) {
    throw ValidationError("instance " + inst.id +
                          ": stored ground truth disagrees with enumeration");
  }
}

}  // namespace toniq
