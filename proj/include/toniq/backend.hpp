#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "toniq/errors.hpp"
#include "toniq/simcore.hpp"

namespace toniq {

using Edge = std::pair<std::size_t, std::size_t>;

inline Edge normalized(Edge e) { return e.first < e.second ? e : Edge{e.second, e.first}; }

/// Simulated QPU: coupling map plus a uniform-by-default noise calibration.
/// Times are in microseconds. Empty t1/t2 vectors disable decoherence and an
/// empty readout vector means perfect measurement.
struct BackendModel {
  std::string name;
  std::size_t num_qubits = 0;
  std::vector<Edge> coupling;
  double p1 = 0.0;
  double p2_default = 0.0;
  std::map<Edge, double> p2_edges;  // keys normalized (low, high)
  std::vector<double> t1;
  std::vector<double> t2;
  double dur1 = 0.035;
  double dur2 = 0.3;
  std::vector<ReadoutError> readout;
  bool noiseless = false;

  double p2(std::size_t a, std::size_t b) const {
    if (noiseless) return 0.0;
    auto it = p2_edges.find(normalized({a, b}));
    return it == p2_edges.end() ? p2_default : it->second;
  }

  ReadoutError readout_of(std::size_t q) const {
    if (noiseless || readout.empty()) return {};
    return readout.at(q);
  }

  double mean_readout_error(std::size_t q) const {
    const auto r = readout_of(q);
    return 0.5 * (r.p01 + r.p10);
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(num_qubits);
    for (auto [a, b] : coupling) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (auto& list : adj) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
  }

  bool has_noise() const {
    if (noiseless) return false;
    if (p1 > 0.0 || p2_default > 0.0) return true;
    for (const auto& [e, p] : p2_edges)
      if (p > 0.0) return true;
    for (const auto& r : readout)
      if (r.p01 > 0.0 || r.p10 > 0.0) return true;
    return !t1.empty() || !t2.empty();
  }

  friend bool operator==(const BackendModel&, const BackendModel&) = default;
};

namespace detail {

inline bool connected_over(const std::vector<std::vector<std::size_t>>& adj,
                           const std::set<std::size_t>& nodes) {
  if (nodes.empty()) return true;
  std::set<std::size_t> seen{*nodes.begin()};
  std::deque<std::size_t> queue{*nodes.begin()};
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : adj[u]) {
      if (nodes.count(v) && seen.insert(v).second) queue.push_back(v);
    }
  }
  return seen.size() == nodes.size();
}

inline bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace detail

inline void validate_backend(const BackendModel& b) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("backend '" + b.name + "': " + what);
  };
  if (b.num_qubits == 0) fail("num_qubits must be positive");
  std::set<std::size_t> mentioned;
  for (auto [x, y] : b.coupling) {
    if (x >= b.num_qubits || y >= b.num_qubits) fail("coupling index out of range");
    if (x == y) fail("coupling edge is a self-loop");
    mentioned.insert(x);
    mentioned.insert(y);
  }
  if (!detail::connected_over(b.adjacency(), mentioned)) fail("coupling graph is disconnected");
  if (!detail::in_unit(b.p1) || !detail::in_unit(b.p2_default)) fail("gate error outside [0,1]");
  for (const auto& [e, p] : b.p2_edges) {
    if (!detail::in_unit(p)) fail("edge gate error outside [0,1]");
    if (e.first >= b.num_qubits || e.second >= b.num_qubits) fail("p2 edge out of range");
  }
  if (!(b.dur1 > 0.0) || !(b.dur2 > 0.0)) fail("gate durations must be positive");
  if (!b.t1.empty() && b.t1.size() != b.num_qubits) fail("t1 needs one entry per qubit");
  if (!b.t2.empty() && b.t2.size() != b.num_qubits) fail("t2 needs one entry per qubit");
  for (std::size_t q = 0; q < b.t1.size(); ++q) {
    if (!(b.t1[q] > 0.0)) fail("t1 must be positive");
    if (q < b.t2.size() && b.t2[q] > 2.0 * b.t1[q]) fail("t2 exceeds 2*t1 on qubit " + std::to_string(q));
  }
  for (double t : b.t2)
    if (!(t > 0.0)) fail("t2 must be positive");
  if (!b.readout.empty() && b.readout.size() != b.num_qubits) fail("readout needs one entry per qubit");
  for (const auto& r : b.readout)
    if (!detail::in_unit(r.p01) || !detail::in_unit(r.p10)) fail("readout error outside [0,1]");
}

// ---------------------------------------------------------------------------
// Presets

enum class Topology { HeavyHex16, TwoLine27, IShape7 };

inline const char* topology_name(Topology t) {
  switch (t) {
    case Topology::HeavyHex16: return "heavy_hex_16";
    case Topology::TwoLine27: return "two_line_27";
    case Topology::IShape7: return "i_shape_7";
  }
  return "?";
}

inline Topology parse_topology(const std::string& s) {
  if (s == "heavy_hex_16") return Topology::HeavyHex16;
  if (s == "two_line_27") return Topology::TwoLine27;
  if (s == "i_shape_7") return Topology::IShape7;
  throw ValidationError("unknown topology preset: " + s);
}

/// Uniform calibration applied to every qubit and edge of a preset.
/// t1 = t2 = 0 disables decoherence.
struct NoiseDefaults {
  double p1 = 0.0;
  double p2 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double dur1 = 0.035;
  double dur2 = 0.3;
  ReadoutError readout{};
  bool noiseless = false;
};

inline std::vector<Edge> preset_edges(Topology t) {
  switch (t) {
    case Topology::HeavyHex16:
      return {{0, 1},  {1, 2},   {1, 4},   {2, 3},   {3, 5},   {4, 7},   {5, 8},   {6, 7},
              {7, 10}, {8, 9},   {8, 11},  {10, 12}, {11, 14}, {12, 13}, {12, 15}, {13, 14}};
    case Topology::TwoLine27:
      return {{0, 1},   {1, 2},   {1, 4},   {2, 3},   {3, 5},   {4, 7},   {5, 8},
              {6, 7},   {7, 10},  {8, 9},   {8, 11},  {10, 12}, {11, 14}, {12, 13},
              {12, 15}, {13, 14}, {14, 16}, {15, 18}, {16, 19}, {17, 18}, {18, 21},
              {19, 20}, {19, 22}, {21, 23}, {22, 25}, {23, 24}, {24, 25}, {25, 26}};
    case Topology::IShape7:
      return {{0, 1}, {1, 2}, {1, 3}, {3, 5}, {4, 5}, {5, 6}};
  }
  return {};
}

inline std::size_t preset_size(Topology t) {
  switch (t) {
    case Topology::HeavyHex16: return 16;
    case Topology::TwoLine27: return 27;
    case Topology::IShape7: return 7;
  }
  return 0;
}

inline BackendModel apply_noise_defaults(BackendModel b, const NoiseDefaults& nd) {
  b.p1 = nd.p1;
  b.p2_default = nd.p2;
  b.dur1 = nd.dur1;
  b.dur2 = nd.dur2;
  b.noiseless = nd.noiseless;
  if (nd.t1 > 0.0) b.t1.assign(b.num_qubits, nd.t1);
  if (nd.t2 > 0.0) b.t2.assign(b.num_qubits, nd.t2);
  if (nd.readout.p01 > 0.0 || nd.readout.p10 > 0.0) b.readout.assign(b.num_qubits, nd.readout);
  validate_backend(b);
  return b;
}

inline BackendModel topology_preset(Topology t, const NoiseDefaults& nd = {}) {
  BackendModel b;
  b.name = topology_name(t);
  b.num_qubits = preset_size(t);
  b.coupling = preset_edges(t);
  return apply_noise_defaults(std::move(b), nd);
}

/// Path 0-1-...-(n-1).
inline BackendModel line_backend(std::size_t n, const NoiseDefaults& nd = {},
                                 std::string name = "line") {
  BackendModel b;
  b.name = std::move(name);
  b.num_qubits = n;
  for (std::size_t i = 0; i + 1 < n; ++i) b.coupling.emplace_back(i, i + 1);
  return apply_noise_defaults(std::move(b), nd);
}

/// All-to-all, noise-free device used for reference runs.
inline BackendModel ideal_backend(std::size_t n, std::string name = "noiseless") {
  BackendModel b;
  b.name = std::move(name);
  b.num_qubits = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) b.coupling.emplace_back(i, j);
  b.noiseless = true;
  validate_backend(b);
  return b;
}

// ---------------------------------------------------------------------------
// Layout selection

using Layout = std::vector<std::size_t>;  // logical -> physical

/// Greedy connected growth: start from the most reliable edge, then keep adding
/// the neighbour with the largest (sum of new-edge fidelities - readout error).
/// Ties go to the lowest physical index.
inline Layout select_layout(const BackendModel& b, std::size_t n) {
  if (n == 0) throw ValidationError("layout needs at least one logical qubit");
  if (n > b.num_qubits) {
    throw CapacityError("backend '" + b.name + "' has " + std::to_string(b.num_qubits) +
                        " qubits, circuit needs " + std::to_string(n));
  }
  if (n == 1) {
    std::size_t best = 0;
    for (std::size_t q = 1; q < b.num_qubits; ++q)
      if (b.mean_readout_error(q) < b.mean_readout_error(best)) best = q;
    return {best};
  }
  if (b.coupling.empty()) throw CapacityError("backend '" + b.name + "' has no couplings");

  Edge seed = normalized(b.coupling.front());
  double seed_score = -std::numeric_limits<double>::infinity();
  for (auto e : b.coupling) {
    e = normalized(e);
    const double score = 1.0 - b.p2(e.first, e.second);
    if (score > seed_score || (score == seed_score && e < seed)) {
      seed = e;
      seed_score = score;
    }
  }

  const auto adj = b.adjacency();
  Layout chosen{seed.first, seed.second};
  std::vector<bool> in(b.num_qubits, false);
  in[seed.first] = in[seed.second] = true;
  while (chosen.size() < n) {
    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < b.num_qubits; ++v) {
      if (in[v]) continue;
      double gain = 0.0;
      bool touches = false;
      for (auto u : adj[v]) {
        if (!in[u]) continue;
        touches = true;
        gain += 1.0 - b.p2(u, v);
      }
      if (!touches) continue;
      const double score = gain - b.mean_readout_error(v);
      if (score > best_score) {
        best = v;
        best_score = score;
      }
    }
    if (!best) {
      throw CapacityError("backend '" + b.name + "' has no connected region of " +
                          std::to_string(n) + " qubits");
    }
    chosen.push_back(*best);
    in[*best] = true;
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Routing and decomposition

struct GateCounts {
  std::size_t h = 0, rx = 0, rz = 0, cnot = 0;
  std::size_t rzz = 0;   // logical RZZ gates decomposed
  std::size_t swap = 0;  // SWAPs inserted by routing

  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

/// Physical circuit over {H, RX, RZ, CNOT}. `origin[k]` is the index of the
/// logical gate that produced gate k, or -1 for routing CNOTs; it lets callers
/// rebind rotation angles without re-routing.
struct CompiledCircuit {
  Circuit gates;
  std::vector<long> origin;
  Layout initial_layout;
  Layout layout;                    // final logical -> physical after SWAPs
  std::vector<std::size_t> active;  // physical qubits touched, ascending
  GateCounts gate_counts;
};

namespace detail {

inline std::vector<std::size_t> bfs_path(const std::vector<std::vector<std::size_t>>& adj,
                                         std::size_t from, std::size_t to,
                                         const std::vector<bool>* allowed) {
  std::vector<long> parent(adj.size(), -1);
  std::vector<bool> seen(adj.size(), false);
  std::deque<std::size_t> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (u == to) break;
    for (auto v : adj[u]) {
      if (seen[v] || (allowed && !(*allowed)[v])) continue;
      seen[v] = true;
      parent[v] = static_cast<long>(u);
      queue.push_back(v);
    }
  }
  if (!seen[to]) return {};
  std::vector<std::size_t> path{to};
  while (path.back() != from) path.push_back(static_cast<std::size_t>(parent[path.back()]));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Maps a logical {H, RX, RZ, RZZ} circuit onto the coupling map. A
/// non-adjacent RZZ(i, j) moves logical i along a BFS shortest path towards j
/// with SWAPs, preferring paths inside the already-occupied region; SWAPs
/// permanently relabel the layout. RZZ becomes CNOT.RZ.CNOT and SWAP three
/// CNOTs.
inline CompiledCircuit route_and_compile(const Circuit& logical, const BackendModel& b,
                                         const Layout& layout) {
  const std::size_t n = layout.size();
  {
    std::set<std::size_t> image(layout.begin(), layout.end());
    if (image.size() != n) throw ValidationError("layout is not injective");
    for (auto p : layout)
      if (p >= b.num_qubits) throw ValidationError("layout maps outside the backend");
  }

  const auto adj = b.adjacency();
  auto adjacent = [&](std::size_t x, std::size_t y) {
    return std::binary_search(adj[x].begin(), adj[x].end(), y);
  };

  CompiledCircuit out;
  out.initial_layout = layout;
  out.layout = layout;
  std::vector<long> occupant(b.num_qubits, -1);
  std::vector<bool> active(b.num_qubits, false);
  for (std::size_t l = 0; l < n; ++l) {
    occupant[layout[l]] = static_cast<long>(l);
    active[layout[l]] = true;
  }

  auto emit = [&](GateOp g, long origin) {
    out.gates.push_back(g);
    out.origin.push_back(origin);
    switch (g.kind) {
      case GateKind::H: ++out.gate_counts.h; break;
      case GateKind::RX: ++out.gate_counts.rx; break;
      case GateKind::RZ: ++out.gate_counts.rz; break;
      case GateKind::CNOT: ++out.gate_counts.cnot; break;
      default: break;
    }
  };

  auto swap_physical = [&](std::size_t x, std::size_t y) {
    emit(GateOp::cnot(x, y), -1);
    emit(GateOp::cnot(y, x), -1);
    emit(GateOp::cnot(x, y), -1);
    ++out.gate_counts.swap;
    std::swap(occupant[x], occupant[y]);
    if (occupant[x] >= 0) out.layout[occupant[x]] = x;
    if (occupant[y] >= 0) out.layout[occupant[y]] = y;
    active[x] = active[y] = true;
  };

  for (std::size_t k = 0; k < logical.size(); ++k) {
    const auto& g = logical[k];
    validate_gate(g, n);
    const long origin = static_cast<long>(k);
    switch (g.kind) {
      case GateKind::H:
      case GateKind::RX:
      case GateKind::RZ:
        emit({g.kind, {out.layout[g.targets[0]], out.layout[g.targets[0]]}, g.angle}, origin);
        break;
      case GateKind::RZZ: {
        std::size_t pa = out.layout[g.targets[0]];
        const std::size_t pb = out.layout[g.targets[1]];
        if (!adjacent(pa, pb)) {
          auto path = detail::bfs_path(adj, pa, pb, &active);
          if (path.empty()) path = detail::bfs_path(adj, pa, pb, nullptr);
          if (path.empty()) {
            throw RoutingError("no path between physical qubits " + std::to_string(pa) +
                               " and " + std::to_string(pb));
          }
          for (std::size_t s = 0; s + 2 < path.size(); ++s) swap_physical(path[s], path[s + 1]);
          pa = out.layout[g.targets[0]];
        }
        emit(GateOp::cnot(pa, pb), origin);
        emit(GateOp::rz(pb, g.angle), origin);
        emit(GateOp::cnot(pa, pb), origin);
        ++out.gate_counts.rzz;
        break;
      }
      default:
        throw ValidationError(std::string("logical circuits may only use H, RX, RZ, RZZ; got ") +
                              gate_name(g.kind));
    }
  }

  for (std::size_t p = 0; p < b.num_qubits; ++p)
    if (active[p]) out.active.push_back(p);
  return out;
}

/// Copies rotation angles from `logical` into a circuit compiled from a
/// logical circuit with the same structure.
inline void rebind_angles(CompiledCircuit& c, const Circuit& logical) {
  for (std::size_t k = 0; k < c.gates.size(); ++k) {
    const long o = c.origin[k];
    if (o < 0) continue;
    const auto kind = c.gates[k].kind;
    if (kind == GateKind::RX || kind == GateKind::RZ) c.gates[k].angle = logical.at(o).angle;
  }
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

/// Distribution over the compact register (bit k = active[k]) to logical
/// outcomes (bit i = logical qubit i), marginalizing ancillas.
inline Distribution to_logical(const Distribution& compact, const CompiledCircuit& c) {
  const std::size_t n = c.layout.size();
  std::vector<std::size_t> compact_bit(n);
  for (std::size_t l = 0; l < n; ++l) {
    auto it = std::lower_bound(c.active.begin(), c.active.end(), c.layout[l]);
    compact_bit[l] = static_cast<std::size_t>(it - c.active.begin());
  }
  Distribution out(std::size_t{1} << n, 0.0);
  for (std::size_t k = 0; k < compact.size(); ++k) {
    std::size_t idx = 0;
    for (std::size_t l = 0; l < n; ++l) idx |= ((k >> compact_bit[l]) & 1u) << l;
    out[idx] += compact[k];
  }
  return out;
}

inline GateOp to_compact(GateOp g, const std::vector<std::size_t>& active) {
  for (std::size_t t = 0; t < g.arity(); ++t) {
    auto it = std::lower_bound(active.begin(), active.end(), g.targets[t]);
    g.targets[t] = static_cast<std::size_t>(it - active.begin());
  }
  if (g.arity() == 1) g.targets[1] = g.targets[0];
  return g;
}

}  // namespace detail

/// Outcome distribution before readout error, over logical bitstrings.
/// Noise model per gate: depolarizing (p1, or the edge's p2) on the gate's
/// qubits, then amplitude damping and dephasing for the gate duration.
inline Distribution execute_pre_readout(const CompiledCircuit& c, const BackendModel& b) {
  const auto& act = c.active;
  if (act.size() > kMaxSimQubits) {
    throw CapacityError("compiled circuit touches " + std::to_string(act.size()) +
                        " qubits; simulator limit is " + std::to_string(kMaxSimQubits));
  }
  if (!b.has_noise()) {
    StateVector sv(act.size());
    for (const auto& g : c.gates) sv.apply(detail::to_compact(g, act));
    return detail::to_logical(probabilities(sv), c);
  }

  DensityMatrix rho(act.size());
  std::array<std::size_t, 2> local{};
  for (const auto& g : c.gates) {
    const auto cg = detail::to_compact(g, act);
    rho.apply(cg);
    const std::size_t arity = g.arity();
    for (std::size_t t = 0; t < arity; ++t) local[t] = cg.targets[t];
    const double p = arity == 1 ? b.p1 : b.p2(g.targets[0], g.targets[1]);
    apply_depolarizing(rho, p, std::span<const std::size_t>(local.data(), arity));

    const double duration = arity == 1 ? b.dur1 : b.dur2;
    for (std::size_t t = 0; t < arity; ++t) {
      const std::size_t phys = g.targets[t];
      const double t1 = b.t1.empty() ? 0.0 : b.t1[phys];
      const double t2 = b.t2.empty() ? 0.0 : b.t2[phys];
      const auto r = channels::relaxation(duration, t1, t2);
      apply_relaxation(rho, local[t], r.gamma, r.phase_flip);
    }
  }
  return detail::to_logical(probabilities(rho), c);
}

/// Readout errors of the physical qubits holding each logical qubit.
inline std::vector<ReadoutError> logical_readout(const BackendModel& b, const Layout& layout) {
  std::vector<ReadoutError> out;
  out.reserve(layout.size());
  for (auto p : layout) out.push_back(b.readout_of(p));
  return out;
}

/// Exact outcome distribution of a compiled circuit on b, including readout
/// error, over logical bitstrings.
inline Distribution execute(const CompiledCircuit& c, const BackendModel& b) {
  auto dist = execute_pre_readout(c, b);
  if (b.noiseless) return dist;
  return apply_readout_error(std::move(dist), logical_readout(b, c.layout));
}

// ---------------------------------------------------------------------------
// Readout mitigation

/// Inverts the tensor-product confusion matrix, then clips negative entries
/// and renormalizes.
inline Distribution mitigate_readout(Distribution dist, std::span<const ReadoutError> flips) {
  const std::size_t n = flips.size();
  if (dist.size() != (std::size_t{1} << n)) {
    throw ValidationError("readout error count does not match distribution size");
  }
  for (std::size_t q = 0; q < n; ++q) {
    const auto [p01, p10] = flips[q];
    if (p01 == 0.0 && p10 == 0.0) continue;
    const double det = 1.0 - p01 - p10;
    if (std::abs(det) < 1e-12) {
      throw MitigationError("confusion matrix of qubit " + std::to_string(q) + " is singular");
    }
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (k & mask) continue;
      const double m0 = dist[k];
      const double m1 = dist[k | mask];
      dist[k] = ((1.0 - p10) * m0 - p10 * m1) / det;
      dist[k | mask] = ((1.0 - p01) * m1 - p01 * m0) / det;
    }
  }
  double total = 0.0;
  for (auto& v : dist) {
    v = std::max(0.0, v);
    total += v;
  }
  if (!(total > 0.0)) throw MitigationError("mitigated distribution has no mass");
  for (auto& v : dist) v /= total;
  return dist;
}

/// Mitigates a logical distribution using the readout calibration of the
/// physical qubits in `layout` (identity layout when empty).
inline Distribution mitigate_readout(Distribution dist, const BackendModel& b,
                                     Layout layout = {}) {
  if (layout.empty()) {
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dist.size()) ++n;
    layout.resize(n);
    for (std::size_t i = 0; i < n; ++i) layout[i] = i;
  }
  const auto flips = logical_readout(b, layout);
  return mitigate_readout(std::move(dist), flips);
}

}  // namespace toniq
