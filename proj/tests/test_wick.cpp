#include <gtest/gtest.h>

#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "fixture_path.hpp"
#include "qmflab/wick.hpp"

using namespace qmf;

namespace {

// Loops = connected components of the graph on slot endpoints whose links
// are the network edges and the slot-wise gluing of paired nodes.
int union_find_loops(const ClosedNetwork& n, const Pairing& p) {
  std::map<std::pair<std::size_t, int>, int> id;
  for (std::size_t v = 0; v < n.nodes.size(); ++v)
    for (int s = 1; s <= n.nodes[v].degree; ++s) id[{v, s}] = static_cast<int>(id.size());
  std::vector<int> parent(id.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const auto& e : n.edges) unite(id[{e.a.node, e.a.slot}], id[{e.b.node, e.b.slot}]);
  for (std::size_t v = 0; v < n.nodes.size(); ++v)
    for (int s = 1; s <= n.nodes[v].degree; ++s) unite(id[{v, s}], id[{p.partner[v], s}]);
  int roots = 0;
  for (int x = 0; x < static_cast<int>(parent.size()); ++x) roots += find(x) == x;
  return roots + n.free_loops;
}

Pairing random_pairing(const ClosedNetwork& n, std::mt19937_64& rng, Ensemble ens) {
  // Shuffle conjugated nodes within each class of admissible partners.
  std::map<std::string, std::vector<std::size_t>> t, tb;
  for (std::size_t i = 0; i < n.nodes.size(); ++i) {
    const std::string cls = ens == Ensemble::identical
                                ? std::to_string(n.nodes[i].degree)
                                : n.nodes[i].base + "|" + std::to_string(n.nodes[i].factor);
    (n.nodes[i].conjugate ? tb : t)[cls].push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> m;
  for (auto& [cls, group] : tb) {
    std::shuffle(group.begin(), group.end(), rng);
    for (std::size_t i = 0; i < group.size(); ++i) m.push_back({t[cls][i], group[i]});
  }
  return make_pairing(n, m);
}

Pairing restrict_pairing(const ClosedNetwork& from, const Pairing& p, const ClosedNetwork& to) {
  Pairing out{std::vector<std::size_t>(to.nodes.size())};
  for (std::size_t i = 0; i < to.nodes.size(); ++i) {
    const auto old = *from.find_key(to.nodes[i].key);
    out.partner[i] = *to.find_key(from.nodes[p.partner[old]].key);
  }
  return out;
}

std::map<int, std::uint64_t> poly(std::initializer_list<std::pair<const int, std::uint64_t>> c) {
  return c;
}

}  // namespace

TEST(ClosedNetwork, EdgeAndNodeCounts) {
  auto g = fixture("figconn");
  for (int k = 1; k <= 3; ++k) {
    auto n = build_closed_network(g, k);
    EXPECT_EQ(n.nodes.size(), 2u * 2 * k);
    EXPECT_EQ(n.num_unconjugated(), 2u * k);
    // each open edge appears k times, each closed edge 2k times
    EXPECT_EQ(n.edges.size(), 6u * k);
  }
  auto f = fixture("fignocut");
  EXPECT_EQ(build_closed_network(f, 2).edges.size(), 2u * 4 + 1u * 4);
  EXPECT_THROW(build_closed_network(f, 0), ValidationError);
}

TEST(ClosedNetwork, OpenEdgesJoinNeighbouringCopies) {
  auto g = fixture("chain_d2");
  auto n = build_closed_network(g, 2);
  // input edge at slot 1 joins copies 1-2 and 3-4, output edge at slot 2
  // joins 2-3 and 4-1.
  std::set<std::pair<int, int>> in, out;
  for (const auto& e : n.edges) {
    auto pr = std::minmax(n.nodes[e.a.node].copy, n.nodes[e.b.node].copy);
    (e.a.slot == 1 ? in : out).insert(pr);
  }
  EXPECT_EQ(in, (std::set<std::pair<int, int>>{{1, 2}, {3, 4}}));
  EXPECT_EQ(out, (std::set<std::pair<int, int>>{{2, 3}, {1, 4}}));
}

TEST(CountLoops, AgreesWithUnionFind) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    auto g = draw_network(rng, 2 + trial % 4, 3 + trial % 2, 1 + trial % 2, 1 + trial % 2);
    const int k = 1 + trial % 3;
    auto n = build_closed_network(g, k);
    const auto ens = trial % 2 ? Ensemble::identical : Ensemble::independent;
    auto p = random_pairing(n, rng, ens);
    EXPECT_EQ(count_loops(n, p), union_find_loops(n, p));
  }
}

TEST(CountLoops, RejectsNonMatching) {
  auto n = build_closed_network(fixture("figconn"), 1);
  Pairing p{std::vector<std::size_t>(n.nodes.size(), 0)};
  EXPECT_THROW(count_loops(n, p), ValidationError);
}

TEST(Enumerate, FigconnFirstMoment) {
  auto g = fixture("figconn");
  auto same = enumerate_moment(g, 1, Ensemble::identical);
  EXPECT_EQ(same.coefficients, poly({{6, 1}, {3, 1}}));
  auto ind = enumerate_moment(g, 1, Ensemble::independent);
  EXPECT_EQ(ind.coefficients, poly({{6, 1}}));
  EXPECT_DOUBLE_EQ(static_cast<double>(same.evaluate(3)), 756.0);
  EXPECT_DOUBLE_EQ(static_cast<double>(ind.evaluate(3)), 729.0);
}

TEST(Enumerate, GaussianMatrixMoments) {
  auto g = fixture("chain_d2");
  EXPECT_EQ(enumerate_moment(g, 1, Ensemble::identical).coefficients, poly({{2, 1}}));
  EXPECT_EQ(enumerate_moment(g, 2, Ensemble::identical).coefficients, poly({{3, 2}}));
  EXPECT_EQ(enumerate_moment(g, 3, Ensemble::identical).coefficients, poly({{4, 5}, {2, 1}}));
  EXPECT_DOUBLE_EQ(static_cast<double>(enumerate_moment(g, 2, Ensemble::identical).evaluate(5)),
                   250.0);
}

TEST(Enumerate, TotalIsNumberOfPairings) {
  auto g = fixture("figSlessT");
  for (int k = 1; k <= 2; ++k) {
    auto p = enumerate_moment(g, k, Ensemble::identical);
    std::uint64_t fact = 1;
    for (int i = 2; i <= 3 * k; ++i) fact *= i;
    EXPECT_EQ(p.total(), fact);
    auto q = enumerate_moment(g, k, Ensemble::independent);
    std::uint64_t kf = 1;
    for (int i = 2; i <= k; ++i) kf *= i;
    EXPECT_EQ(q.total(), kf * kf * kf);
  }
}

TEST(Enumerate, IdentityEdgeScalesByN) {
  auto g = fixture("figSlessT");
  std::vector<Edge> edges = g.edges();
  edges.push_back(Edge::identity());
  TensorNetworkGraph with_id("with_identity", g.vertices(), edges);
  for (int k = 1; k <= 2; ++k)
    for (auto ens : {Ensemble::identical, Ensemble::independent}) {
      auto a = enumerate_moment(g, k, ens), b = enumerate_moment(with_id, k, ens);
      std::map<int, std::uint64_t> shifted;
      for (auto [e, c] : a.coefficients) shifted[e + 1] = c;
      EXPECT_EQ(b.coefficients, shifted);
    }
  auto id = fixture("identity");
  EXPECT_EQ(enumerate_moment(id, 3, Ensemble::identical).coefficients, poly({{1, 1}}));
}

TEST(Enumerate, ParallelMatchesSerial) {
  auto g = fixture("fignum_candidate");
  EnumerationOptions serial, parallel;
  parallel.jobs = 4;
  parallel.collect_maximal = serial.collect_maximal = true;
  auto a = enumerate_moment(g, 2, Ensemble::identical, serial);
  auto b = enumerate_moment(g, 2, Ensemble::identical, parallel);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.maximal, b.maximal);
}

TEST(Enumerate, LeadingOnlyMatchesFull) {
  for (const char* name : {"figconn", "fignocut", "figSlessT", "fignum_candidate"}) {
    auto g = fixture(name);
    EnumerationOptions lead;
    lead.leading_only = true;
    auto full = enumerate_moment(g, 2, Ensemble::identical);
    auto top = enumerate_moment(g, 2, Ensemble::identical, lead);
    EXPECT_EQ(top.c_max(), full.c_max()) << name;
    EXPECT_EQ(top.n_max(), full.n_max()) << name;
    EXPECT_FALSE(top.complete);
  }
}

TEST(Enumerate, BudgetIsEnforced) {
  EnumerationOptions tiny;
  tiny.budget = 5;
  EXPECT_THROW(enumerate_moment(fixture("figSlessT"), 1, Ensemble::identical, tiny),
               BudgetExceeded);
  EXPECT_NO_THROW(enumerate_moment(fixture("figSlessT"), 1, Ensemble::independent, tiny));
}

TEST(Enumerate, ProductNetworkFactorizes) {
  auto a = fixture("chain_d2"), b = fixture("figSlessT");
  auto na = build_closed_network(a, 1), nb = build_closed_network(b, 1);
  auto prod = build_product_closed_network({na, nb});
  auto pa = enumerate_closed(na, Ensemble::independent);
  auto pb = enumerate_closed(nb, Ensemble::independent);
  auto pp = enumerate_closed(prod, Ensemble::independent);
  std::map<int, std::uint64_t> expected;
  for (auto [e1, c1] : pa.coefficients)
    for (auto [e2, c2] : pb.coefficients) expected[e1 + e2] += c1 * c2;
  EXPECT_EQ(pp.coefficients, expected);
}

TEST(CutPairing, LoopCountForEveryCut) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    auto g = draw_network(rng, 2 + trial % 4, 4, 2, 2);
    const int k = 1 + trial % 3;
    const std::size_t nv = g.num_vertices();
    for (std::size_t mask = 0; mask < (std::size_t{1} << nv); ++mask) {
      std::vector<bool> sbar(nv);
      for (std::size_t v = 0; v < nv; ++v) sbar[v] = (mask >> v) & 1;
      auto c = make_cut(g, sbar);
      auto cp = build_cut_pairing(g, c, k);
      const int expected = k * static_cast<int>(g.num_edges()) - (k - 1) * static_cast<int>(c.size());
      EXPECT_EQ(cp.loops, expected);
      EXPECT_EQ(cp.minimal, static_cast<int>(c.size()) == min_cut(g).mc);
      if (cp.minimal) {
        EXPECT_TRUE(is_direct_pairing(build_closed_network(g, k), cp.pairing));
      }
    }
  }
}

TEST(CutPairing, FignocutMinCut) {
  auto g = fixture("fignocut");
  auto cp = build_cut_pairing(g, min_cut(g).witness, 2);
  EXPECT_EQ(cp.loops, 8);
  EXPECT_TRUE(cp.minimal);
}

TEST(Reduce, RejectsInadmissiblePair) {
  auto n = build_closed_network(fixture("fignocut"), 1);
  const auto u1 = n.node_of("u", 1), l2 = n.node_of("l", 2), u2 = n.node_of("u", 2);
  EXPECT_THROW(reduce_one_step(n, u1, l2), ValidationError);
  EXPECT_THROW(reduce_one_step(n, u2, u1), ValidationError);
  EXPECT_NO_THROW(reduce_one_step(n, u1, u2));
}

TEST(Reduce, CreatedLoopsBoundedByConnectingEdges) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto g = draw_network(rng, 3, 4, 2, 2);
    auto n = build_closed_network(g, 1 + trial % 2);
    for (std::size_t v = 0; v < n.nodes.size(); ++v)
      for (std::size_t w = 0; w < n.nodes.size(); ++w) {
        if (!admissible_pair(n, v, w)) continue;
        int between = 0, matched = 0;
        for (const auto& e : n.edges)
          if ((e.a.node == v && e.b.node == w) || (e.a.node == w && e.b.node == v)) {
            ++between;
            matched += e.a.slot == e.b.slot;
          }
        auto r = reduce_one_step(n, v, w);
        EXPECT_LE(r.created, between);
        if (matched == between) {
          EXPECT_EQ(r.created, between);
        }
        // each remaining slot keeps exactly one edge
        const int slots = std::accumulate(r.network.nodes.begin(), r.network.nodes.end(), 0,
                                          [](int s, const ClosedNode& x) { return s + x.degree; });
        EXPECT_EQ(2 * static_cast<int>(r.network.edges.size()), slots);
        ++checked;
      }
  }
  EXPECT_GT(checked, 100);
}

TEST(Properties, CreateAdditivity) {
  std::mt19937_64 rng(33);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto g = draw_network(rng, 2 + trial % 3, 3 + trial % 2, 1 + trial % 2, 1 + trial % 2);
    auto n = build_closed_network(g, 1 + trial % 3);
    auto p = random_pairing(n, rng, Ensemble::identical);
    for (std::size_t v = 0; v < n.nodes.size(); ++v) {
      if (n.nodes[v].conjugate || !admissible_pair(n, v, p.partner[v])) continue;
      auto r = reduce_one_step(n, v, p.partner[v]);
      auto rest = restrict_pairing(n, p, r.network);
      EXPECT_EQ(count_loops(n, p), r.created + count_loops(r.network, rest));
      ++checked;
    }
    if (auto total = direct_reduction(n, p)) {
      EXPECT_EQ(*total, count_loops(n, p));
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(Properties, NoReductionMeansFewLoops) {
  std::mt19937_64 rng(44);
  int stuck = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto g = draw_network(rng, 2 + trial % 4, 3 + trial % 3, 1 + trial % 2,
                            1 + trial % 2);
    auto n = build_closed_network(g, 1 + trial % 3);
    auto p = random_pairing(n, rng, trial % 2 ? Ensemble::identical : Ensemble::independent);
    if (admits_one_step_reduction(n, p)) continue;
    ++stuck;
    EXPECT_LE(2 * (count_loops(n, p) - n.free_loops), static_cast<int>(n.edges.size()));
  }
  EXPECT_GT(stuck, 100);
}

TEST(Cmax, FormulaOnFixtures) {
  EXPECT_EQ(cmax_formula(fixture("figconn"), 2), 10);
  for (const char* name : {"figconn", "fignocut", "figSlessT", "chain_d2", "fignum_candidate"}) {
    auto g = fixture(name);
    for (int k = 1; k <= 3; ++k) {
      if (g.num_vertices() * k > 10) continue;
      for (auto ens : {Ensemble::identical, Ensemble::independent}) {
        auto r = verify_cmax_formula(g, k, ens);
        EXPECT_EQ(r.c_max, r.expected) << name << " k=" << k;
        EXPECT_TRUE(r.within_envelope);
        if (k == 1) {
          EXPECT_EQ(r.n_max, 1u) << name;
        }
      }
    }
  }
}

TEST(Cmax, RandomNetworks) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    auto g = draw_network(rng, 2 + trial % 3, 4, 1 + trial % 3, 1 + trial % 3);
    for (int k = 1; k <= 2; ++k) EXPECT_NO_THROW(verify_cmax_formula(g, k)) << trial;
  }
}

TEST(Coefficient, CaseValues) {
  auto s = fixture("figSlessT");
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(coefficient_c(s, k), 1u);
  const std::uint64_t catalan[] = {1, 1, 2, 5};
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(coefficient_c(fixture("chain_d2"), k), catalan[k]);
  for (int k = 1; k <= 2; ++k) EXPECT_EQ(coefficient_c(fixture("fignocut"), k), catalan[k]);
}
