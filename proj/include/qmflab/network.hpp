#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qmflab/errors.hpp"

namespace qmf {

enum class EdgeKind { closed, input, output, identity };

inline std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::closed: return "closed";
    case EdgeKind::input: return "input";
    case EdgeKind::output: return "output";
    case EdgeKind::identity: return "identity";
  }
  return "?";
}

/// Attachment of an edge to a vertex. `slot` is 1-based and selects the
/// tensor index the edge occupies at that vertex.
struct Endpoint {
  std::size_t vertex = 0;
  int slot = 1;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// closed: two ends; input/output: one end (the other end is open);
/// identity: no ends (one open end on each side).
struct Edge {
  EdgeKind kind = EdgeKind::closed;
  std::vector<Endpoint> ends;

  static Edge closed(Endpoint a, Endpoint b) { return {EdgeKind::closed, {a, b}}; }
  static Edge input(Endpoint a) { return {EdgeKind::input, {a}}; }
  static Edge output(Endpoint a) { return {EdgeKind::output, {a}}; }
  static Edge identity() { return {EdgeKind::identity, {}}; }

  bool is_open() const { return kind != EdgeKind::closed; }
  bool has_input_end() const {
    return kind == EdgeKind::input || kind == EdgeKind::identity;
  }
  bool has_output_end() const {
    return kind == EdgeKind::output || kind == EdgeKind::identity;
  }

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Vertex {
  std::string id;
  int degree = 0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

/// A tensor network graph: vertices with ordered index slots, and edges that
/// are closed, input, output or identity. Edge ids are positions in
/// `edges()`; they fix the canonical order of open ends. Immutable once
/// constructed; the constructor validates every structural invariant.
class TensorNetworkGraph {
 public:
  TensorNetworkGraph() = default;

  TensorNetworkGraph(std::string name, std::vector<Vertex> vertices,
                     std::vector<Edge> edges)
      : name_(std::move(name)),
        vertices_(std::move(vertices)),
        edges_(std::move(edges)) {
    validate();
  }

  const std::string& name() const { return name_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertex& vertex(std::size_t v) const { return vertices_.at(v); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Edge occupying `slot` (1-based) of vertex `v`.
  std::size_t edge_at(std::size_t v, int slot) const {
    return slot_edge_.at(v).at(static_cast<std::size_t>(slot - 1));
  }

  std::optional<std::size_t> find_vertex(std::string_view id) const {
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (vertices_[v].id == id) return v;
    return std::nullopt;
  }

  /// Common degree of all vertices, if there is one (and at least one vertex).
  std::optional<int> uniform_degree() const {
    if (vertices_.empty()) return std::nullopt;
    for (const auto& v : vertices_)
      if (v.degree != vertices_.front().degree) return std::nullopt;
    return vertices_.front().degree;
  }

  /// Edge ids carrying an input open end (input and identity edges), sorted.
  std::vector<std::size_t> input_ends() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].has_input_end()) out.push_back(e);
    return out;
  }

  /// Edge ids carrying an output open end (output and identity edges), sorted.
  std::vector<std::size_t> output_ends() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].has_output_end()) out.push_back(e);
    return out;
  }

  /// |S| and |T|: number of input / output open ends.
  std::size_t num_inputs() const { return input_ends().size(); }
  std::size_t num_outputs() const { return output_ends().size(); }

  std::size_t count(EdgeKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        edges_.begin(), edges_.end(),
        [kind](const Edge& e) { return e.kind == kind; }));
  }

  /// Structural equality ignoring the name.
  bool same_structure(const TensorNetworkGraph& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_;
  }

 private:
  void validate() {
    slot_edge_.assign(vertices_.size(), {});
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
      if (vertices_[v].degree < 0)
        throw ValidationError("vertex '" + vertices_[v].id +
                              "' has negative degree");
      for (std::size_t w = 0; w < v; ++w)
        if (vertices_[w].id == vertices_[v].id)
          throw ValidationError("duplicate vertex id '" + vertices_[v].id + "'");
      slot_edge_[v].assign(static_cast<std::size_t>(vertices_[v].degree),
                           kNoEdge);
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      const std::size_t expected = edge.kind == EdgeKind::closed     ? 2
                                   : edge.kind == EdgeKind::identity ? 0
                                                                     : 1;
      if (edge.ends.size() != expected)
        throw ValidationError("edge " + std::to_string(e) + " (" +
                              std::string(to_string(edge.kind)) + ") has " +
                              std::to_string(edge.ends.size()) + " ends, expected " +
                              std::to_string(expected));
      if (edge.kind == EdgeKind::closed &&
          edge.ends[0].vertex == edge.ends[1].vertex)
        throw ValidationError("edge " + std::to_string(e) +
                              " is a self-loop; closed edges must join two "
                              "distinct vertices");
      for (const Endpoint& end : edge.ends) {
        if (end.vertex >= vertices_.size())
          throw ValidationError("edge " + std::to_string(e) +
                                " references an unknown vertex");
        const auto& vtx = vertices_[end.vertex];
        if (end.slot < 1 || end.slot > vtx.degree)
          throw ValidationError("edge " + std::to_string(e) + " uses slot " +
                                std::to_string(end.slot) + " of vertex '" +
                                vtx.id + "' with degree " +
                                std::to_string(vtx.degree));
        auto& cell = slot_edge_[end.vertex][static_cast<std::size_t>(end.slot - 1)];
        if (cell != kNoEdge)
          throw ValidationError("slot " + std::to_string(end.slot) +
                                " of vertex '" + vtx.id +
                                "' is used by more than one edge end");
        cell = e;
      }
    }
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      for (std::size_t s = 0; s < slot_edge_[v].size(); ++s)
        if (slot_edge_[v][s] == kNoEdge)
          throw ValidationError("slot " + std::to_string(s + 1) + " of vertex '" +
                                vertices_[v].id + "' is not attached to any edge");
  }

  static constexpr std::size_t kNoEdge = std::numeric_limits<std::size_t>::max();

  std::string name_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> slot_edge_;
};

/// A partition of the vertices. `sbar[v]` is true when v lies on the input
/// side. Input open ends always sit on the input side and output open ends on
/// the output side; `cut_set` lists every edge crossing the partition.
struct Cut {
  std::vector<bool> sbar;
  std::vector<std::size_t> cut_set;

  std::size_t size() const { return cut_set.size(); }
};

inline bool crosses(const Edge& edge, const std::vector<bool>& sbar) {
  switch (edge.kind) {
    case EdgeKind::closed:
      return sbar[edge.ends[0].vertex] != sbar[edge.ends[1].vertex];
    case EdgeKind::input: return !sbar[edge.ends[0].vertex];
    case EdgeKind::output: return sbar[edge.ends[0].vertex];
    case EdgeKind::identity: return true;
  }
  return false;
}

inline Cut make_cut(const TensorNetworkGraph& g, std::vector<bool> sbar) {
  if (sbar.size() != g.num_vertices())
    throw ValidationError("cut has " + std::to_string(sbar.size()) +
                          " side flags for " + std::to_string(g.num_vertices()) +
                          " vertices");
  Cut cut{std::move(sbar), {}};
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    if (crosses(g.edge(e), cut.sbar)) cut.cut_set.push_back(e);
  return cut;
}

inline bool is_valid_cut(const TensorNetworkGraph& g, const Cut& c) {
  if (c.sbar.size() != g.num_vertices()) return false;
  return make_cut(g, c.sbar).cut_set == c.cut_set;
}

/// One unit of flow: the edges from an input end to an output end, and the
/// vertices visited in between.
struct FlowPath {
  std::vector<std::size_t> edges;
  std::vector<std::size_t> vertices;
};

using FlowPaths = std::vector<FlowPath>;

struct MinCutResult {
  int mc = 0;
  Cut witness;
  FlowPaths paths;
};

namespace detail {

/// Unit-capacity max flow by BFS augmenting paths. Every network edge is an
/// undirected unit arc pair; open ends attach to the two terminal nodes.
class UnitFlow {
 public:
  static constexpr int kInfinite = 1 << 20;

  explicit UnitFlow(const TensorNetworkGraph& g)
      : nv_(g.num_vertices()), adj_(nv_ + 2) {
    edge_arc_.reserve(g.num_edges());
    for (const Edge& e : g.edges()) {
      std::size_t a = source(), b = sink();
      switch (e.kind) {
        case EdgeKind::closed: a = e.ends[0].vertex; b = e.ends[1].vertex; break;
        case EdgeKind::input: b = e.ends[0].vertex; break;
        case EdgeKind::output: a = e.ends[0].vertex; break;
        case EdgeKind::identity: break;
      }
      edge_arc_.push_back(add_arc(a, b, 1, 1));
    }
  }

  std::size_t source() const { return nv_; }
  std::size_t sink() const { return nv_ + 1; }

  /// Pins vertex v to the input (or output) side with an uncuttable arc.
  void force(std::size_t v, bool input_side) {
    if (input_side)
      add_arc(source(), v, kInfinite, 0);
    else
      add_arc(v, sink(), kInfinite, 0);
  }

  int run() {
    int total = 0;
    std::vector<std::size_t> via(adj_.size());
    while (true) {
      std::vector<bool> seen(adj_.size(), false);
      std::queue<std::size_t> queue;
      queue.push(source());
      seen[source()] = true;
      while (!queue.empty() && !seen[sink()]) {
        const std::size_t u = queue.front();
        queue.pop();
        for (std::size_t a : adj_[u]) {
          const Arc& arc = arcs_[a];
          if (seen[arc.to] || arc.cap - arc.flow <= 0) continue;
          seen[arc.to] = true;
          via[arc.to] = a;
          queue.push(arc.to);
        }
      }
      if (!seen[sink()]) break;
      int push = kInfinite;
      for (std::size_t v = sink(); v != source(); v = arcs_[via[v] ^ 1].to)
        push = std::min(push, arcs_[via[v]].cap - arcs_[via[v]].flow);
      for (std::size_t v = sink(); v != source(); v = arcs_[via[v] ^ 1].to) {
        arcs_[via[v]].flow += push;
        arcs_[via[v] ^ 1].flow -= push;
      }
      total += push;
      if (total >= kInfinite) break;
    }
    return total;
  }

  /// Nodes reachable from the source in the residual graph.
  std::vector<bool> residual_reachable() const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<std::size_t> stack{source()};
    seen[source()] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t a : adj_[u]) {
        const Arc& arc = arcs_[a];
        if (!seen[arc.to] && arc.cap - arc.flow > 0) {
          seen[arc.to] = true;
          stack.push_back(arc.to);
        }
      }
    }
    return seen;
  }

  /// Decomposes the integral flow on network edges into edge-disjoint
  /// terminal-to-terminal paths, discarding circulations.
  FlowPaths paths(const TensorNetworkGraph& g) const {
    struct Step {
      std::size_t edge;
      std::size_t to;
    };
    std::vector<std::vector<Step>> out(adj_.size());
    for (std::size_t e = 0; e < edge_arc_.size(); ++e) {
      const Arc& fwd = arcs_[edge_arc_[e]];
      const Arc& rev = arcs_[edge_arc_[e] ^ 1];
      if (fwd.flow > 0) out[rev.to].push_back({e, fwd.to});
      if (fwd.flow < 0) out[fwd.to].push_back({e, rev.to});
    }
    FlowPaths result;
    while (!out[source()].empty()) {
      std::vector<std::size_t> nodes{source()};
      std::vector<std::size_t> edges;
      std::vector<std::size_t> pos(adj_.size(), kUnvisited);
      pos[source()] = 0;
      while (nodes.back() != sink()) {
        auto& next = out[nodes.back()];
        if (next.empty())
          throw LemmaViolation("flow decomposition reached a dead end");
        const Step step = next.back();
        next.pop_back();
        if (pos[step.to] != kUnvisited) {
          // Circulation: drop the loop just closed.
          const std::size_t keep = pos[step.to];
          for (std::size_t i = keep + 1; i < nodes.size(); ++i)
            pos[nodes[i]] = kUnvisited;
          nodes.resize(keep + 1);
          edges.resize(keep);
          continue;
        }
        pos[step.to] = nodes.size();
        nodes.push_back(step.to);
        edges.push_back(step.edge);
      }
      FlowPath path;
      path.edges = std::move(edges);
      for (std::size_t n : nodes)
        if (n < g.num_vertices()) path.vertices.push_back(n);
      result.push_back(std::move(path));
    }
    return result;
  }

 private:
  struct Arc {
    std::size_t to;
    int cap;
    int flow;
  };
  static constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();

  std::size_t add_arc(std::size_t a, std::size_t b, int cap_ab, int cap_ba) {
    const std::size_t id = arcs_.size();
    arcs_.push_back({b, cap_ab, 0});
    arcs_.push_back({a, cap_ba, 0});
    adj_[a].push_back(id);
    adj_[b].push_back(id + 1);
    return id;
  }

  std::size_t nv_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Arc> arcs_;
  std::vector<std::size_t> edge_arc_;
};

}  // namespace detail

/// True iff every vertex reaches some open edge through closed edges.
inline bool is_connected_network(const TensorNetworkGraph& g) {
  std::vector<bool> reached(g.num_vertices(), false);
  std::vector<std::size_t> stack;
  for (const Edge& e : g.edges())
    if (e.kind == EdgeKind::input || e.kind == EdgeKind::output) {
      const std::size_t v = e.ends[0].vertex;
      if (!reached[v]) {
        reached[v] = true;
        stack.push_back(v);
      }
    }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (int s = 1; s <= g.vertex(v).degree; ++s) {
      const Edge& e = g.edge(g.edge_at(v, s));
      if (e.kind != EdgeKind::closed) continue;
      const std::size_t w =
          e.ends[0].vertex == v ? e.ends[1].vertex : e.ends[0].vertex;
      if (!reached[w]) {
        reached[w] = true;
        stack.push_back(w);
      }
    }
  }
  return std::all_of(reached.begin(), reached.end(), [](bool r) { return r; });
}

/// Minimum number of unit-capacity edges separating input from output ends.
/// The witness is the cut whose input side is the residual-reachable set of
/// a maximum flow, i.e. the minimal such side.
inline MinCutResult min_cut(const TensorNetworkGraph& g) {
  detail::UnitFlow flow(g);
  MinCutResult result;
  result.mc = flow.run();
  const auto reach = flow.residual_reachable();
  result.witness = make_cut(
      g, std::vector<bool>(reach.begin(), reach.begin() + g.num_vertices()));
  result.paths = flow.paths(g);
  return result;
}

/// Min-cut value with vertex `u` pinned to the input side and `w` pinned to
/// the output side.
inline int constrained_min_cut(const TensorNetworkGraph& g, std::size_t u,
                               std::size_t w) {
  detail::UnitFlow flow(g);
  flow.force(u, true);
  flow.force(w, false);
  return flow.run();
}

enum class CaseLabel { splittable, case_i, case_ii, case_iii, none };

inline std::string_view to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::splittable: return "splittable";
    case CaseLabel::case_i: return "case_i";
    case CaseLabel::case_ii: return "case_ii";
    case CaseLabel::case_iii: return "case_iii";
    case CaseLabel::none: return "none";
  }
  return "?";
}

/// Returns a min cut leaving at least one vertex on each side, if any.
inline std::optional<Cut> find_splitting_min_cut(const TensorNetworkGraph& g) {
  const int mc = min_cut(g).mc;
  for (std::size_t u = 0; u < g.num_vertices(); ++u)
    for (std::size_t w = 0; w < g.num_vertices(); ++w) {
      if (u == w) continue;
      detail::UnitFlow flow(g);
      flow.force(u, true);
      flow.force(w, false);
      if (flow.run() != mc) continue;
      const auto reach = flow.residual_reachable();
      return make_cut(
          g, std::vector<bool>(reach.begin(), reach.begin() + g.num_vertices()));
    }
  return std::nullopt;
}

/// Splittable when a nontrivial min cut exists; otherwise compares |S|, |T|
/// against the min cut.
inline CaseLabel classify_case(const TensorNetworkGraph& g) {
  if (find_splitting_min_cut(g)) return CaseLabel::splittable;
  if (g.num_vertices() == 0) return CaseLabel::none;
  const auto mc = static_cast<std::size_t>(min_cut(g).mc);
  const std::size_t s = g.num_inputs(), t = g.num_outputs();
  if (s == mc && mc < t) return CaseLabel::case_i;
  if (t == mc && mc < s) return CaseLabel::case_ii;
  if (s == mc && t == mc) return CaseLabel::case_iii;
  return CaseLabel::none;
}

/// Cuts g along `c`. The first network maps the inputs to the cut set, the
/// second maps the cut set to the outputs; crossing edges with no vertex left
/// on a side become identity edges there. Original edge order is kept, so the
/// cut-set ends appear in the same order on both halves and L = L2 * L1.
inline std::pair<TensorNetworkGraph, TensorNetworkGraph> split_at_cut(
    const TensorNetworkGraph& g, const Cut& c) {
  if (!is_valid_cut(g, c)) throw ValidationError("invalid cut for network '" + g.name() + "'");
  std::vector<Vertex> v1, v2;
  std::vector<std::size_t> index(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    auto& side = c.sbar[v] ? v1 : v2;
    index[v] = side.size();
    side.push_back(g.vertex(v));
  }
  auto local = [&](Endpoint p) { return Endpoint{index[p.vertex], p.slot}; };
  std::vector<Edge> e1, e2;
  for (const Edge& e : g.edges()) {
    switch (e.kind) {
      case EdgeKind::closed: {
        const bool a = c.sbar[e.ends[0].vertex], b = c.sbar[e.ends[1].vertex];
        if (a && b) {
          e1.push_back(Edge::closed(local(e.ends[0]), local(e.ends[1])));
        } else if (!a && !b) {
          e2.push_back(Edge::closed(local(e.ends[0]), local(e.ends[1])));
        } else {
          const Endpoint in_side = a ? e.ends[0] : e.ends[1];
          const Endpoint out_side = a ? e.ends[1] : e.ends[0];
          e1.push_back(Edge::output(local(in_side)));
          e2.push_back(Edge::input(local(out_side)));
        }
        break;
      }
      case EdgeKind::input:
        if (c.sbar[e.ends[0].vertex]) {
          e1.push_back(Edge::input(local(e.ends[0])));
        } else {
          e1.push_back(Edge::identity());
          e2.push_back(Edge::input(local(e.ends[0])));
        }
        break;
      case EdgeKind::output:
        if (!c.sbar[e.ends[0].vertex]) {
          e2.push_back(Edge::output(local(e.ends[0])));
        } else {
          e1.push_back(Edge::output(local(e.ends[0])));
          e2.push_back(Edge::identity());
        }
        break;
      case EdgeKind::identity:
        e1.push_back(Edge::identity());
        e2.push_back(Edge::identity());
        break;
    }
  }
  return {TensorNetworkGraph(g.name() + ".in", std::move(v1), std::move(e1)),
          TensorNetworkGraph(g.name() + ".out", std::move(v2), std::move(e2))};
}

enum class Side { input, output };

/// Removes `v` "as input": v and its input edges disappear, its closed edges
/// become input edges at their other end, its output edges become identity
/// edges. Output removal is the mirror image.
inline TensorNetworkGraph remove_vertex(const TensorNetworkGraph& g,
                                        std::size_t v, Side side) {
  if (v >= g.num_vertices())
    throw ValidationError("unknown vertex index " + std::to_string(v));
  const EdgeKind dropped = side == Side::input ? EdgeKind::input : EdgeKind::output;
  const EdgeKind kept = side == Side::input ? EdgeKind::output : EdgeKind::input;
  std::vector<Vertex> vertices;
  std::vector<std::size_t> index(g.num_vertices());
  for (std::size_t u = 0; u < g.num_vertices(); ++u) {
    if (u == v) continue;
    index[u] = vertices.size();
    vertices.push_back(g.vertex(u));
  }
  auto local = [&](Endpoint p) { return Endpoint{index[p.vertex], p.slot}; };
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    const bool touches = std::any_of(e.ends.begin(), e.ends.end(),
                                     [v](Endpoint p) { return p.vertex == v; });
    if (!touches) {
      Edge copy = e;
      for (auto& p : copy.ends) p = local(p);
      edges.push_back(std::move(copy));
    } else if (e.kind == dropped) {
      continue;
    } else if (e.kind == kept) {
      edges.push_back(Edge::identity());
    } else {
      const Endpoint other = e.ends[0].vertex == v ? e.ends[1] : e.ends[0];
      edges.push_back(side == Side::input ? Edge::input(local(other))
                                          : Edge::output(local(other)));
    }
  }
  return TensorNetworkGraph(g.name() + "-" + g.vertex(v).id, std::move(vertices),
                            std::move(edges));
}

/// Disjoint union. Vertex ids are kept unless the two graphs share an id, in
/// which case every id is prefixed with "1." or "2.".
inline TensorNetworkGraph product_network(const TensorNetworkGraph& g1,
                                          const TensorNetworkGraph& g2) {
  bool clash = false;
  for (const auto& v : g2.vertices())
    if (g1.find_vertex(v.id)) clash = true;
  std::vector<Vertex> vertices;
  for (const auto& v : g1.vertices())
    vertices.push_back({clash ? "1." + v.id : v.id, v.degree});
  for (const auto& v : g2.vertices())
    vertices.push_back({clash ? "2." + v.id : v.id, v.degree});
  std::vector<Edge> edges = g1.edges();
  for (Edge e : g2.edges()) {
    for (auto& p : e.ends) p.vertex += g1.num_vertices();
    edges.push_back(std::move(e));
  }
  std::string name = g1.name().empty()   ? g2.name()
                     : g2.name().empty() ? g1.name()
                                         : g1.name() + "*" + g2.name();
  return TensorNetworkGraph(std::move(name), std::move(vertices), std::move(edges));
}

/// Random connected network of `num_vertices` vertices of degree `degree`
/// with the given numbers of input and output edges: slot stubs are shuffled,
/// the first become inputs, the next outputs, the rest are paired into closed
/// edges. Draws with self-loops or disconnected vertices are rejected.
template <typename Rng>
TensorNetworkGraph random_network(Rng& rng, std::size_t num_vertices, int degree,
                                  std::size_t num_inputs, std::size_t num_outputs,
                                  int max_attempts = 10000) {
  const std::size_t stubs = num_vertices * static_cast<std::size_t>(degree);
  if (num_inputs + num_outputs > stubs || (stubs - num_inputs - num_outputs) % 2 != 0)
    throw ValidationError("no degree-" + std::to_string(degree) +
                          " network with these open-edge counts");
  std::vector<Vertex> vertices;
  for (std::size_t v = 0; v < num_vertices; ++v)
    vertices.push_back({"v" + std::to_string(v), degree});
  std::vector<Endpoint> pool;
  for (std::size_t v = 0; v < num_vertices; ++v)
    for (int s = 1; s <= degree; ++s) pool.push_back({v, s});
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (std::size_t i = pool.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(pool[i - 1], pool[pick(rng)]);
    }
    std::vector<Edge> edges;
    std::size_t i = 0;
    for (; i < num_inputs; ++i) edges.push_back(Edge::input(pool[i]));
    for (; i < num_inputs + num_outputs; ++i) edges.push_back(Edge::output(pool[i]));
    bool self_loop = false;
    for (; i < pool.size(); i += 2) {
      if (pool[i].vertex == pool[i + 1].vertex) self_loop = true;
      edges.push_back(Edge::closed(pool[i], pool[i + 1]));
    }
    if (self_loop) continue;
    TensorNetworkGraph g("random", vertices, std::move(edges));
    if (is_connected_network(g)) return g;
  }
  throw ValidationError("random_network: no connected draw found");
}

}  // namespace qmf
