#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qmflab/errors.hpp"
#include "qmflab/network.hpp"

namespace qmf {

enum class Ensemble { identical, independent };

inline std::string_view to_string(Ensemble e) {
  return e == Ensemble::identical ? "identical" : "independent";
}

inline Ensemble parse_ensemble(std::string_view s) {
  if (s == "identical") return Ensemble::identical;
  if (s == "independent") return Ensemble::independent;
  throw ValidationError("unknown ensemble '" + std::string(s) + "'");
}

struct NodeSlot {
  std::size_t node = 0;
  int slot = 1;

  friend bool operator==(const NodeSlot&, const NodeSlot&) = default;
};

/// A tensor occurrence (v;sigma) in a closed network. `key` is a stable label
/// that survives reductions; `factor` is the product coordinate.
struct ClosedNode {
  std::string base;
  int copy = 1;
  int factor = 0;
  bool conjugate = false;
  int degree = 0;
  std::size_t key = 0;
};

struct ClosedEdge {
  NodeSlot a;
  NodeSlot b;
};

/// A tensor network with no open edges, e.g. the one computing
/// tr((L^dagger L)^k). `free_loops` counts index loops that touch no tensor
/// (one per identity edge of the originating network).
struct ClosedNetwork {
  std::vector<ClosedNode> nodes;
  std::vector<ClosedEdge> edges;
  int free_loops = 0;
  std::string origin;

  std::size_t num_unconjugated() const {
    return static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [](const ClosedNode& n) { return !n.conjugate; }));
  }

  std::optional<std::size_t> find_key(std::size_t key) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].key == key) return i;
    return std::nullopt;
  }

  /// Index of (base;copy) in factor `factor`.
  std::size_t node_of(std::string_view base, int copy, int factor = 0) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].base == base && nodes[i].copy == copy && nodes[i].factor == factor)
        return i;
    throw ValidationError("no node (" + std::string(base) + ";" +
                          std::to_string(copy) + ")");
  }

  std::string label(std::size_t i) const {
    const auto& n = nodes.at(i);
    std::string s = "(" + n.base + ";" + std::to_string(n.copy);
    if (n.factor != 0) s += "|" + std::to_string(n.factor);
    return s + ")";
  }
};

/// A perfect matching of unconjugated to conjugated nodes, stored as an
/// involution over node indices.
struct Pairing {
  std::vector<std::size_t> partner;

  friend bool operator==(const Pairing&, const Pairing&) = default;
};

inline Pairing make_pairing(const ClosedNetwork& n,
                            const std::vector<std::pair<std::size_t, std::size_t>>& matches) {
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  Pairing p{std::vector<std::size_t>(n.nodes.size(), none)};
  for (auto [a, b] : matches) {
    p.partner.at(a) = b;
    p.partner.at(b) = a;
  }
  return p;
}

inline std::string describe(const ClosedNetwork& n, const Pairing& p) {
  std::string s;
  for (std::size_t i = 0; i < n.nodes.size(); ++i) {
    if (n.nodes[i].conjugate) continue;
    if (!s.empty()) s += " ";
    s += n.label(i) + "-" + n.label(p.partner[i]);
  }
  return s;
}

namespace detail {

/// Flat numbering of (node, slot) endpoints with the edge incident to each.
struct EndpointTable {
  std::vector<std::size_t> offset;
  std::vector<std::size_t> edge_of;
  std::vector<std::size_t> other;

  explicit EndpointTable(const ClosedNetwork& n) : offset(n.nodes.size() + 1, 0) {
    for (std::size_t i = 0; i < n.nodes.size(); ++i)
      offset[i + 1] = offset[i] + static_cast<std::size_t>(n.nodes[i].degree);
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    edge_of.assign(offset.back(), none);
    other.assign(offset.back(), none);
    for (std::size_t e = 0; e < n.edges.size(); ++e) {
      const std::size_t a = id(n.edges[e].a), b = id(n.edges[e].b);
      if (edge_of[a] != none || edge_of[b] != none || a == b)
        throw ValidationError("closed network uses a slot twice");
      edge_of[a] = edge_of[b] = e;
      other[a] = b;
      other[b] = a;
    }
    if (std::find(edge_of.begin(), edge_of.end(), none) != edge_of.end())
      throw ValidationError("closed network has an unattached slot");
  }

  std::size_t id(NodeSlot p) const {
    return offset.at(p.node) + static_cast<std::size_t>(p.slot - 1);
  }
  std::size_t node(std::size_t endpoint) const {
    return static_cast<std::size_t>(
               std::upper_bound(offset.begin(), offset.end(), endpoint) - offset.begin()) -
           1;
  }
  int slot(std::size_t endpoint) const {
    return static_cast<int>(endpoint - offset[node(endpoint)]) + 1;
  }
};

inline void check_pairing(const ClosedNetwork& n, const Pairing& p) {
  if (p.partner.size() != n.nodes.size())
    throw ValidationError("pairing size does not match the closed network");
  for (std::size_t i = 0; i < n.nodes.size(); ++i) {
    const std::size_t j = p.partner[i];
    if (j >= n.nodes.size() || p.partner[j] != i ||
        n.nodes[i].conjugate == n.nodes[j].conjugate ||
        n.nodes[i].degree != n.nodes[j].degree)
      throw ValidationError("not a perfect T/T-bar matching at node " + n.label(i));
  }
}

}  // namespace detail

/// Builds the closed network of tr((L^dagger L)^k): nodes (v;sigma) for
/// sigma = 1..2k, conjugated for even sigma. A closed edge (v,w) yields an
/// edge in every copy; an input edge joins (v;sigma),(v;sigma+1) for odd
/// sigma, an output edge for even sigma, with sigma periodic mod 2k. Slots are
/// inherited. Each identity edge contributes one free loop.
inline ClosedNetwork build_closed_network(const TensorNetworkGraph& g, int k) {
  if (k < 1) throw ValidationError("moment order k must be at least 1");
  ClosedNetwork n;
  const std::size_t nv = g.num_vertices();
  const int copies = 2 * k;
  for (int sigma = 1; sigma <= copies; ++sigma)
    for (std::size_t v = 0; v < nv; ++v)
      n.nodes.push_back({g.vertex(v).id, sigma, 0, sigma % 2 == 0, g.vertex(v).degree,
                         n.nodes.size()});
  auto node = [&](std::size_t v, int sigma) {
    const int wrapped = (sigma - 1) % copies;
    return static_cast<std::size_t>(wrapped) * nv + v;
  };
  for (const Edge& e : g.edges()) {
    switch (e.kind) {
      case EdgeKind::closed:
        for (int sigma = 1; sigma <= copies; ++sigma)
          n.edges.push_back({{node(e.ends[0].vertex, sigma), e.ends[0].slot},
                             {node(e.ends[1].vertex, sigma), e.ends[1].slot}});
        break;
      case EdgeKind::input:
      case EdgeKind::output: {
        const int first = e.kind == EdgeKind::input ? 1 : 2;
        const auto [v, slot] = e.ends[0];
        for (int sigma = first; sigma <= copies; sigma += 2)
          n.edges.push_back({{node(v, sigma), slot}, {node(v, sigma + 1), slot}});
        break;
      }
      case EdgeKind::identity:
        ++n.free_loops;
        break;
    }
  }
  n.origin = "tr((L^dagger L)^" + std::to_string(k) + ") of " + g.name();
  return n;
}

/// Disjoint union; node `factor` records the position in `parts`.
inline ClosedNetwork build_product_closed_network(const std::vector<ClosedNetwork>& parts) {
  if (parts.empty()) throw ValidationError("product of zero closed networks");
  ClosedNetwork out;
  for (std::size_t f = 0; f < parts.size(); ++f) {
    const std::size_t base = out.nodes.size();
    for (ClosedNode node : parts[f].nodes) {
      node.factor = static_cast<int>(f);
      node.key = out.nodes.size();
      out.nodes.push_back(std::move(node));
    }
    for (ClosedEdge e : parts[f].edges) {
      e.a.node += base;
      e.b.node += base;
      out.edges.push_back(e);
    }
    out.free_loops += parts[f].free_loops;
    out.origin += (f ? " * " : "") + parts[f].origin;
  }
  return out;
}

/// Number of closed index loops for a complete pairing: walk each edge, and
/// at every node hop to the same slot of its partner, until the walk returns.
inline int count_loops(const ClosedNetwork& n, const Pairing& p) {
  detail::check_pairing(n, p);
  const detail::EndpointTable table(n);
  std::vector<bool> visited(n.edges.size(), false);
  int loops = n.free_loops;
  for (std::size_t e = 0; e < n.edges.size(); ++e) {
    if (visited[e]) continue;
    ++loops;
    const std::size_t start = table.id(n.edges[e].a);
    std::size_t cur = start;
    do {
      visited[table.edge_of[cur]] = true;
      const std::size_t exit = table.other[cur];
      const std::size_t y = table.node(exit);
      cur = table.id({p.partner[y], table.slot(exit)});
    } while (cur != start);
  }
  return loops;
}

/// Exact expectation E[N_c] = sum over pairings of N^C(pi), kept as the map
/// loop-count exponent -> number of pairings.
struct MomentPolynomial {
  std::map<int, std::uint64_t> coefficients;
  Ensemble ensemble = Ensemble::identical;
  int k = 0;
  std::string network;
  /// False when only the leading term was computed (pruned enumeration).
  bool complete = true;
  /// Pairings attaining C_max, when requested.
  std::vector<Pairing> maximal;

  int c_max() const { return coefficients.empty() ? 0 : coefficients.rbegin()->first; }
  std::uint64_t n_max() const {
    return coefficients.empty() ? 0 : coefficients.rbegin()->second;
  }
  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (auto [e, c] : coefficients) sum += c;
    return sum;
  }
  long double evaluate(long double N) const {
    long double sum = 0;
    for (auto [e, c] : coefficients)
      sum += static_cast<long double>(c) * std::pow(N, static_cast<long double>(e));
    return sum;
  }
};

struct EnumerationOptions {
  /// Maximum number of admissible pairings to visit.
  std::uint64_t budget = 3628800;
  /// Prune branches that cannot reach the best loop count; only the leading
  /// coefficient is then exact.
  bool leading_only = false;
  bool collect_maximal = false;
  unsigned jobs = 1;
};

/// Budget from QMFLAB_BUDGET_PAIRS, default 10! (ten unconjugated nodes).
inline std::uint64_t default_pair_budget() {
  if (const char* env = std::getenv("QMFLAB_BUDGET_PAIRS")) {
    char* end = nullptr;
    const auto value = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return value;
  }
  return 3628800;
}

namespace detail {

inline bool admissible(const ClosedNode& t, const ClosedNode& tbar, Ensemble ensemble) {
  if (t.degree != tbar.degree) return false;
  return ensemble == Ensemble::identical || (t.base == tbar.base && t.factor == tbar.factor);
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

/// Depth-first enumeration of T/T-bar matchings. Slot gluing is tracked
/// incrementally: every partially glued index strand knows its two loose ends,
/// so pairing two nodes costs O(degree) and a loop closes exactly when a glue
/// joins the two ends of one strand.
class PairingEnumerator {
 public:
  PairingEnumerator(const ClosedNetwork& n, Ensemble ensemble)
      : net_(n), table_(n) {
    for (std::size_t i = 0; i < n.nodes.size(); ++i)
      (n.nodes[i].conjugate ? conj_ : unconj_).push_back(i);
    if (unconj_.size() != conj_.size())
      throw ValidationError("closed network has unequal numbers of T and T-bar nodes");
    choices_.resize(unconj_.size());
    for (std::size_t i = 0; i < unconj_.size(); ++i)
      for (std::size_t j = 0; j < conj_.size(); ++j)
        if (admissible(n.nodes[unconj_[i]], n.nodes[conj_[j]], ensemble))
          choices_[i].push_back(j);
  }

  std::size_t size() const { return unconj_.size(); }
  std::size_t first_choices() const { return choices_.empty() ? 0 : choices_[0].size(); }

  /// Number of admissible perfect matchings (saturating).
  std::uint64_t count_pairings() const {
    // Admissibility is an equivalence relation, so the count factorizes
    // into factorials of class sizes.
    std::vector<std::size_t> seen(unconj_.size(), 0);
    std::uint64_t total = 1;
    std::vector<bool> done(unconj_.size(), false);
    for (std::size_t i = 0; i < unconj_.size(); ++i) {
      if (done[i]) continue;
      std::size_t same = 0;
      for (std::size_t j = i; j < unconj_.size(); ++j)
        if (choices_[j] == choices_[i]) {
          done[j] = true;
          ++same;
        }
      if (same != choices_[i].size()) return 0;
      for (std::size_t f = 2; f <= same; ++f) total = saturating_mul(total, f);
    }
    return total;
  }

  struct Partial {
    std::map<int, std::uint64_t> counts;
    std::vector<Pairing> maximal;
    int best = -1;
  };

  /// Enumerates all matchings whose first node takes its `first`-th choice.
  Partial run(std::size_t first, bool leading_only, bool collect) const {
    State st(*this, leading_only, collect);
    if (unconj_.empty()) {
      st.leaf();
      return std::move(st.out);
    }
    const std::size_t j = choices_[0][first];
    st.pair(0, j);
    st.descend(1);
    st.unpair(0, j);
    return std::move(st.out);
  }

  Partial run_all(bool leading_only, bool collect) const {
    if (unconj_.empty()) return run(0, leading_only, collect);
    Partial out;
    for (std::size_t f = 0; f < first_choices(); ++f) merge(out, run(f, leading_only, collect));
    return out;
  }

  static void merge(Partial& into, Partial from) {
    for (auto [e, c] : from.counts) into.counts[e] += c;
    if (from.best > into.best) {
      into.best = from.best;
      into.maximal = std::move(from.maximal);
    } else if (from.best == into.best) {
      for (auto& p : from.maximal) into.maximal.push_back(std::move(p));
    }
  }

 private:
  struct State {
    const PairingEnumerator& e;
    bool leading_only;
    bool collect;
    std::vector<std::size_t> mate;
    std::vector<bool> used;
    std::vector<std::size_t> chosen;
    std::vector<std::pair<std::size_t, std::size_t>> undo;
    std::vector<int> closed_at;
    int loops = 0;
    std::size_t glued = 0;
    Partial out;

    State(const PairingEnumerator& owner, bool lead, bool coll)
        : e(owner),
          leading_only(lead),
          collect(coll),
          mate(owner.table_.other),
          used(owner.conj_.size(), false),
          chosen(owner.unconj_.size(), 0) {}

    void glue(std::size_t a, std::size_t b) {
      if (mate[a] == b) {
        ++loops;
        closed_at.push_back(1);
        return;
      }
      closed_at.push_back(0);
      const std::size_t ma = mate[a], mb = mate[b];
      undo.push_back({ma, mate[ma]});
      undo.push_back({mb, mate[mb]});
      mate[ma] = mb;
      mate[mb] = ma;
    }

    void unglue() {
      if (closed_at.back()) {
        --loops;
      } else {
        for (int r = 0; r < 2; ++r) {
          mate[undo.back().first] = undo.back().second;
          undo.pop_back();
        }
      }
      closed_at.pop_back();
    }

    void pair(std::size_t i, std::size_t j) {
      const std::size_t t = e.unconj_[i], tb = e.conj_[j];
      for (int s = 1; s <= e.net_.nodes[t].degree; ++s)
        glue(e.table_.id({t, s}), e.table_.id({tb, s}));
      glued += static_cast<std::size_t>(e.net_.nodes[t].degree);
      used[j] = true;
      chosen[i] = j;
    }

    void unpair(std::size_t i, std::size_t j) {
      const std::size_t t = e.unconj_[i];
      for (int s = 1; s <= e.net_.nodes[t].degree; ++s) unglue();
      glued -= static_cast<std::size_t>(e.net_.nodes[t].degree);
      used[j] = false;
    }

    void leaf() {
      const int c = loops + e.net_.free_loops;
      ++out.counts[c];
      if (c > out.best) {
        out.best = c;
        out.maximal.clear();
        if (leading_only) {
          // Lower exponents seen so far are not tracked when pruning.
          out.counts.erase(out.counts.begin(), out.counts.find(c));
        }
      }
      if (collect && c == out.best) {
        Pairing p{std::vector<std::size_t>(e.net_.nodes.size())};
        for (std::size_t i = 0; i < e.unconj_.size(); ++i) {
          p.partner[e.unconj_[i]] = e.conj_[chosen[i]];
          p.partner[e.conj_[chosen[i]]] = e.unconj_[i];
        }
        out.maximal.push_back(std::move(p));
      }
    }

    void descend(std::size_t i) {
      if (leading_only) {
        // Every loop still to close uses at least one open strand.
        const int bound = loops + e.net_.free_loops +
                          static_cast<int>(e.net_.edges.size() - glued);
        if (bound < out.best) return;
      }
      if (i == e.unconj_.size()) {
        leaf();
        return;
      }
      for (std::size_t j : e.choices_[i]) {
        if (used[j]) continue;
        pair(i, j);
        descend(i + 1);
        unpair(i, j);
      }
    }
  };

  const ClosedNetwork& net_;
  EndpointTable table_;
  std::vector<std::size_t> unconj_;
  std::vector<std::size_t> conj_;
  std::vector<std::vector<std::size_t>> choices_;
};

}  // namespace detail

/// Sums N^C(pi) over all admissible pairings of a closed network. The
/// independent ensemble only pairs occurrences of the same base vertex
/// within the same product factor.
/// Work is partitioned by the match of the first unconjugated node.
inline MomentPolynomial enumerate_closed(const ClosedNetwork& n, Ensemble ensemble,
                                         const EnumerationOptions& opts = {}) {
  const detail::PairingEnumerator en(n, ensemble);
  const std::uint64_t count = en.count_pairings();
  if (count > opts.budget)
    throw BudgetExceeded("enumeration of " + n.origin + " needs " +
                         (count == std::numeric_limits<std::uint64_t>::max()
                              ? std::string("too many")
                              : std::to_string(count)) +
                         " pairings, budget is " + std::to_string(opts.budget) +
                         "; use the Monte-Carlo estimator instead");
  detail::PairingEnumerator::Partial all;
  const std::size_t parts = en.first_choices();
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(parts)));
  if (en.size() == 0 || jobs == 1) {
    all = en.run_all(opts.leading_only, opts.collect_maximal);
  } else {
    std::vector<detail::PairingEnumerator::Partial> results(parts);
    std::atomic<std::size_t> next{0};
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
          for (std::size_t f = next++; f < parts; f = next++)
            results[f] = en.run(f, opts.leading_only, opts.collect_maximal);
        });
    }
    for (auto& r : results) detail::PairingEnumerator::merge(all, std::move(r));
  }
  MomentPolynomial poly;
  poly.ensemble = ensemble;
  poly.network = n.origin;
  poly.complete = !opts.leading_only;
  poly.coefficients = std::move(all.counts);
  if (opts.leading_only && !poly.coefficients.empty()) {
    const int top = poly.coefficients.rbegin()->first;
    const auto c = poly.coefficients.rbegin()->second;
    poly.coefficients = {{top, c}};
  }
  poly.maximal = std::move(all.maximal);
  return poly;
}

/// Exact E[tr((L^dagger L)^k)] as a polynomial in N.
inline MomentPolynomial enumerate_moment(const TensorNetworkGraph& g, int k, Ensemble ensemble,
                                         const EnumerationOptions& opts = {}) {
  MomentPolynomial poly = enumerate_closed(build_closed_network(g, k), ensemble, opts);
  poly.k = k;
  poly.network = g.name();
  return poly;
}

struct CutPairing {
  Pairing pairing;
  int loops = 0;
  /// Whether the cut had minimal size; only then does `loops` reach C_max.
  bool minimal = false;
};

/// Pairing induced by a cut, on build_closed_network(g, k): input-side
/// vertices pair (v;sigma) with (v;sigma+1) for odd sigma, like input edges,
/// and output-side vertices do so for even sigma. Yields k|E| - (k-1)|cut|
/// loops.
inline CutPairing build_cut_pairing(const TensorNetworkGraph& g, const Cut& c, int k) {
  if (!is_valid_cut(g, c)) throw ValidationError("invalid cut");
  const ClosedNetwork n = build_closed_network(g, k);
  const std::size_t nv = g.num_vertices();
  const int copies = 2 * k;
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t v = 0; v < nv; ++v)
    for (int sigma = 1; sigma <= copies; sigma += 2) {
      const int other = c.sbar[v] ? sigma + 1 : (sigma == 1 ? copies : sigma - 1);
      matches.push_back({static_cast<std::size_t>(sigma - 1) * nv + v,
                         static_cast<std::size_t>(other - 1) * nv + v});
    }
  CutPairing out;
  out.pairing = make_pairing(n, matches);
  out.loops = count_loops(n, out.pairing);
  out.minimal = static_cast<int>(c.size()) == min_cut(g).mc;
  return out;
}

struct Reduction {
  ClosedNetwork network;
  int created = 0;
};

/// True when v (unconjugated) and w (conjugated) share an edge occupying the
/// same slot at both ends.
inline bool admissible_pair(const ClosedNetwork& n, std::size_t v, std::size_t w) {
  if (v >= n.nodes.size() || w >= n.nodes.size()) return false;
  if (n.nodes[v].conjugate || !n.nodes[w].conjugate) return false;
  if (n.nodes[v].degree != n.nodes[w].degree) return false;
  for (const auto& e : n.edges)
    if ((e.a.node == v && e.b.node == w && e.a.slot == e.b.slot) ||
        (e.a.node == w && e.b.node == v && e.a.slot == e.b.slot))
      return true;
  return false;
}

/// One-step direct subnetwork made by pairing v with w: both nodes go away,
/// strands through them are spliced slot by slot, and strands that close
/// on themselves are counted as created loops.
inline Reduction reduce_one_step(const ClosedNetwork& n, std::size_t v, std::size_t w) {
  if (!admissible_pair(n, v, w))
    throw ValidationError("no admissible edge between " +
                          (v < n.nodes.size() ? n.label(v) : std::string("?")) + " and " +
                          (w < n.nodes.size() ? n.label(w) : std::string("?")));
  const detail::EndpointTable table(n);
  auto inside = [&](std::size_t endpoint) {
    const std::size_t node = table.node(endpoint);
    return node == v || node == w;
  };
  auto glue = [&](std::size_t endpoint) {
    const std::size_t node = table.node(endpoint);
    return table.id({node == v ? w : v, table.slot(endpoint)});
  };
  std::vector<std::size_t> index(n.nodes.size());
  Reduction out;
  for (std::size_t i = 0; i < n.nodes.size(); ++i) {
    if (i == v || i == w) continue;
    index[i] = out.network.nodes.size();
    out.network.nodes.push_back(n.nodes[i]);
  }
  auto relabel = [&](std::size_t endpoint) {
    return NodeSlot{index[table.node(endpoint)], table.slot(endpoint)};
  };
  std::vector<bool> visited(n.edges.size(), false);
  for (std::size_t e = 0; e < n.edges.size(); ++e) {
    if (visited[e]) continue;
    const std::size_t a = table.id(n.edges[e].a), b = table.id(n.edges[e].b);
    if (inside(a) && inside(b)) continue;
    visited[e] = true;
    if (!inside(a) && !inside(b)) {
      out.network.edges.push_back({relabel(a), relabel(b)});
      continue;
    }
    // Walk from the outer end through the removed pair to the next outer end.
    std::size_t outer = inside(a) ? b : a;
    std::size_t cur = table.other[outer];
    while (true) {
      const std::size_t next = glue(cur);
      visited[table.edge_of[next]] = true;
      cur = table.other[next];
      if (!inside(cur)) break;
    }
    out.network.edges.push_back({relabel(outer), relabel(cur)});
  }
  for (std::size_t e = 0; e < n.edges.size(); ++e) {
    if (visited[e]) continue;
    ++out.created;
    const std::size_t start = table.id(n.edges[e].a);
    std::size_t cur = start;
    do {
      visited[table.edge_of[cur]] = true;
      cur = glue(table.other[cur]);
    } while (cur != start);
  }
  out.network.free_loops = n.free_loops;
  out.network.origin = n.origin;
  return out;
}

namespace detail {

inline std::unordered_map<std::size_t, std::size_t> partner_keys(const ClosedNetwork& n,
                                                                 const Pairing& p) {
  std::unordered_map<std::size_t, std::size_t> keys;
  for (std::size_t i = 0; i < n.nodes.size(); ++i)
    keys[n.nodes[i].key] = n.nodes[p.partner[i]].key;
  return keys;
}

}  // namespace detail

/// Whether some matched pair of `p` can be reduced in one step right now.
inline bool admits_one_step_reduction(const ClosedNetwork& n, const Pairing& p) {
  detail::check_pairing(n, p);
  for (std::size_t i = 0; i < n.nodes.size(); ++i)
    if (!n.nodes[i].conjugate && admissible_pair(n, i, p.partner[i])) return true;
  return false;
}

/// Reduces `p` greedily, one admissible matched pair at a time. Returns the
/// total number of loops created (free loops included) if the network
/// empties, or nothing if it gets stuck. Admissibility of a matched pair is
/// never destroyed by reducing another pair, so the order does not matter.
inline std::optional<int> direct_reduction(const ClosedNetwork& n, const Pairing& p) {
  detail::check_pairing(n, p);
  const auto keys = detail::partner_keys(n, p);
  ClosedNetwork cur = n;
  int created = n.free_loops;
  while (!cur.nodes.empty()) {
    bool progressed = false;
    for (std::size_t i = 0; i < cur.nodes.size() && !progressed; ++i) {
      if (cur.nodes[i].conjugate) continue;
      const auto j = cur.find_key(keys.at(cur.nodes[i].key));
      if (j && admissible_pair(cur, i, *j)) {
        auto step = reduce_one_step(cur, i, *j);
        created += step.created;
        cur = std::move(step.network);
        progressed = true;
      }
    }
    if (!progressed) return std::nullopt;
  }
  return created;
}

inline bool is_direct_pairing(const ClosedNetwork& n, const Pairing& p) {
  return direct_reduction(n, p).has_value();
}

struct CmaxReport {
  int k = 0;
  int mc = 0;
  int c_max = 0;
  int expected = 0;
  std::uint64_t n_max = 0;
  /// Maximal pairings checked for directness.
  std::size_t maximal_checked = 0;
  /// n_max <= 4^(k|V|): a rainbow-count bound per flow path, multiplied.
  bool within_envelope = true;
};

/// k|E| - (k-1) MC(G).
inline int cmax_formula(const TensorNetworkGraph& g, int k) {
  return k * static_cast<int>(g.num_edges()) - (k - 1) * min_cut(g).mc;
}

/// Checks C_max = k|E| - (k-1)MC(G) by enumeration and that every maximal
/// pairing is direct. Throws LemmaViolation naming the offending pairing.
inline CmaxReport verify_cmax_formula(const TensorNetworkGraph& g, int k,
                                      Ensemble ensemble = Ensemble::identical,
                                      EnumerationOptions opts = {}) {
  opts.leading_only = true;
  opts.collect_maximal = true;
  const ClosedNetwork n = build_closed_network(g, k);
  const MomentPolynomial poly = enumerate_closed(n, ensemble, opts);
  CmaxReport r;
  r.k = k;
  r.mc = min_cut(g).mc;
  r.c_max = poly.c_max();
  r.expected = cmax_formula(g, k);
  r.n_max = poly.n_max();
  if (r.c_max != r.expected)
    throw LemmaViolation(g.name() + ", k=" + std::to_string(k) + ": enumerated C_max " +
                         std::to_string(r.c_max) + " != k|E|-(k-1)MC = " +
                         std::to_string(r.expected) +
                         (poly.maximal.empty() ? "" : "; maximal pairing " +
                                                          describe(n, poly.maximal.front())));
  for (const auto& p : poly.maximal) {
    if (!is_direct_pairing(n, p))
      throw LemmaViolation(g.name() + ", k=" + std::to_string(k) +
                           ": maximal pairing is not direct: " + describe(n, p));
    ++r.maximal_checked;
  }
  const long double envelope =
      std::pow(4.0L, static_cast<long double>(k) * static_cast<long double>(g.num_vertices()));
  r.within_envelope = static_cast<long double>(r.n_max) <= envelope;
  return r;
}

/// c(G,k): the number of maximal pairings. Both ensembles must agree on
/// (C_max, n_max); disagreement throws LemmaViolation.
inline std::uint64_t coefficient_c(const TensorNetworkGraph& g, int k,
                                   EnumerationOptions opts = {}) {
  opts.leading_only = true;
  opts.collect_maximal = false;
  const auto same = enumerate_moment(g, k, Ensemble::identical, opts);
  const auto ind = enumerate_moment(g, k, Ensemble::independent, opts);
  if (same.c_max() != ind.c_max() || same.n_max() != ind.n_max())
    throw LemmaViolation(g.name() + ", k=" + std::to_string(k) +
                         ": identical ensemble gives (C_max, n_max) = (" +
                         std::to_string(same.c_max()) + ", " + std::to_string(same.n_max()) +
                         "), independent gives (" + std::to_string(ind.c_max()) + ", " +
                         std::to_string(ind.n_max()) + ")");
  return same.n_max();
}

}  // namespace qmf
