#include <gtest/gtest.h>

#include <random>

#include "fixture_path.hpp"
#include "qmflab/network.hpp"
#include "qmflab/network_io.hpp"

using namespace qmf;

namespace {

// Exhaustive minimum over every input-side vertex set.
int brute_force_min_cut(const TensorNetworkGraph& g) {
  const std::size_t nv = g.num_vertices();
  int best = std::numeric_limits<int>::max();
  for (std::size_t mask = 0; mask < (std::size_t{1} << nv); ++mask) {
    std::vector<bool> sbar(nv);
    for (std::size_t v = 0; v < nv; ++v) sbar[v] = (mask >> v) & 1;
    best = std::min(best, static_cast<int>(make_cut(g, sbar).size()));
  }
  return best;
}

const char* kFixtures[] = {"figconn", "fignocut", "figSlessT", "chain_d2",
                           "fignum_candidate", "chain_d4_x3", "identity",
                           "scalars_disconnected"};

}  // namespace

TEST(Load, FixtureSummaries) {
  auto g = fixture("figconn");
  EXPECT_EQ(g.num_vertices(), 2u);
  EXPECT_EQ(g.num_edges(), 6u);
  EXPECT_EQ(g.num_inputs(), 3u);
  EXPECT_EQ(g.num_outputs(), 3u);
  EXPECT_EQ(fixture("fignocut").num_edges(), 5u);
  EXPECT_EQ(fixture("figSlessT").num_edges(), 7u);
  EXPECT_EQ(fixture("fignum_candidate").num_edges(), 8u);
  EXPECT_EQ(fixture("fignum_candidate").uniform_degree(), 3);
}

TEST(Load, RejectsDuplicateSlot) {
  EXPECT_THROW(fixture("bad_duplicate_slot"), ValidationError);
}

TEST(Load, SyntaxErrorCarriesLine) {
  try {
    load_network("{\n\"vertices\": [\n,]\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Load, MissingFieldNamesLocation) {
  try {
    load_network(R"({"vertices":[{"id":"v","degree":1}],"edges":[{"kind":"input","end":{"vertex":"v"}}]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[0].end"), std::string::npos) << e.what();
  }
}

TEST(Load, RejectsBadStructure) {
  // unknown vertex
  EXPECT_THROW(load_network(R"({"vertices":[],"edges":[{"kind":"input","end":{"vertex":"x","slot":1}}]})"),
               ValidationError);
  // slot out of range
  EXPECT_THROW(load_network(R"({"vertices":[{"id":"v","degree":1}],"edges":[{"kind":"input","end":{"vertex":"v","slot":2}}]})"),
               ValidationError);
  // unused slot
  EXPECT_THROW(load_network(R"({"vertices":[{"id":"v","degree":2}],"edges":[{"kind":"input","end":{"vertex":"v","slot":1}}]})"),
               ValidationError);
  // duplicate id
  EXPECT_THROW(load_network(R"({"vertices":[{"id":"v","degree":0},{"id":"v","degree":0}],"edges":[]})"),
               ValidationError);
  EXPECT_THROW(load_network(R"({"vertices":[],"edges":[{"kind":"loop"}]})"), ParseError);
}

TEST(Load, JsonRoundTrip) {
  for (const char* name : kFixtures) {
    auto g = fixture(name);
    auto again = load_network(network_to_json(g).dump());
    EXPECT_TRUE(g.same_structure(again)) << name;
    EXPECT_EQ(g.name(), again.name());
  }
}

TEST(MinCut, FixtureValues) {
  EXPECT_EQ(min_cut(fixture("figconn")).mc, 2);
  EXPECT_EQ(min_cut(fixture("fignocut")).mc, 2);
  EXPECT_EQ(min_cut(fixture("figSlessT")).mc, 1);
  EXPECT_EQ(min_cut(fixture("chain_d2")).mc, 1);
  EXPECT_EQ(min_cut(fixture("fignum_candidate")).mc, 2);
  EXPECT_EQ(min_cut(fixture("chain_d4_x3")).mc, 2);
  EXPECT_EQ(min_cut(fixture("identity")).mc, 1);
  EXPECT_EQ(min_cut(fixture("scalars_disconnected")).mc, 0);
}

TEST(MinCut, AgreesWithExhaustiveSearch) {
  for (const char* name : kFixtures) {
    auto g = fixture(name);
    EXPECT_EQ(min_cut(g).mc, brute_force_min_cut(g)) << name;
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nv = 2 + trial % 6;
    const int degree = 3 + trial % 3;
    const std::size_t open = 2 * (1 + trial % 3);
    if ((nv * degree - open) % 2) continue;
    auto g = draw_network(rng, nv, degree, open / 2, open / 2);
    EXPECT_EQ(min_cut(g).mc, brute_force_min_cut(g));
  }
}

TEST(MinCut, WitnessAndPathsAreConsistent) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = draw_network(rng, 6, 4, 3, 3);
    const auto r = min_cut(g);
    EXPECT_TRUE(is_valid_cut(g, r.witness));
    EXPECT_EQ(static_cast<int>(r.witness.size()), r.mc);
    ASSERT_EQ(static_cast<int>(r.paths.size()), r.mc);
    std::vector<int> uses(g.num_edges(), 0);
    for (const auto& p : r.paths) {
      ASSERT_FALSE(p.edges.empty());
      EXPECT_TRUE(g.edge(p.edges.front()).has_input_end());
      EXPECT_TRUE(g.edge(p.edges.back()).has_output_end());
      for (auto e : p.edges) ++uses[e];
    }
    for (int u : uses) EXPECT_LE(u, 1);
    // every path crosses the witness cut exactly once
    for (const auto& p : r.paths) {
      int crossing = 0;
      for (auto e : p.edges) crossing += crosses(g.edge(e), r.witness.sbar);
      EXPECT_EQ(crossing, 1);
    }
  }
}

TEST(Cases, FixtureLabels) {
  EXPECT_EQ(classify_case(fixture("figconn")), CaseLabel::splittable);
  EXPECT_EQ(classify_case(fixture("fignocut")), CaseLabel::case_iii);
  EXPECT_EQ(classify_case(fixture("figSlessT")), CaseLabel::case_i);
  EXPECT_EQ(classify_case(fixture("chain_d2")), CaseLabel::case_iii);
  EXPECT_EQ(classify_case(fixture("fignum_candidate")), CaseLabel::case_iii);
  EXPECT_EQ(classify_case(fixture("scalars_disconnected")), CaseLabel::splittable);
}

TEST(Cases, MirrorSwapsCaseIAndII) {
  auto g = fixture("figSlessT");
  std::vector<Edge> edges;
  for (Edge e : g.edges()) {
    if (e.kind == EdgeKind::input) e.kind = EdgeKind::output;
    else if (e.kind == EdgeKind::output) e.kind = EdgeKind::input;
    edges.push_back(e);
  }
  TensorNetworkGraph mirror("mirror", g.vertices(), edges);
  EXPECT_EQ(classify_case(mirror), CaseLabel::case_ii);
}

TEST(Split, FigconnHalves) {
  auto g = fixture("figconn");
  auto cut = find_splitting_min_cut(g);
  ASSERT_TRUE(cut);
  auto [g1, g2] = split_at_cut(g, *cut);
  EXPECT_EQ(g1.num_vertices() + g2.num_vertices(), 2u);
  EXPECT_EQ(g1.num_edges() + g2.num_edges(), g.num_edges() + 2);
  EXPECT_EQ(g1.count(EdgeKind::identity), 1u);
  EXPECT_EQ(g2.count(EdgeKind::identity), 1u);
  EXPECT_EQ(g1.num_outputs(), 2u);
  EXPECT_EQ(g2.num_inputs(), 2u);
}

TEST(Split, EdgeConservationOnRandomNetworks) {
  std::mt19937_64 rng(3);
  int split = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto g = draw_network(rng, 2 + trial % 7, 3 + 2 * (trial % 2), 2 + trial % 2,
                          2 + trial % 2);
    auto cut = find_splitting_min_cut(g);
    if (!cut) continue;
    ++split;
    const auto mc = static_cast<std::size_t>(min_cut(g).mc);
    auto [g1, g2] = split_at_cut(g, *cut);
    EXPECT_EQ(g1.num_edges() + g2.num_edges(), g.num_edges() + mc);
    EXPECT_EQ(g1.num_outputs(), mc);
    EXPECT_EQ(g2.num_inputs(), mc);
    EXPECT_EQ(g1.num_inputs(), g.num_inputs());
    EXPECT_EQ(g2.num_outputs(), g.num_outputs());
  }
  EXPECT_GT(split, 20);
}

TEST(Split, RejectsInvalidCut) {
  auto g = fixture("figconn");
  Cut bogus{{true, false}, {}};
  EXPECT_THROW(split_at_cut(g, bogus), ValidationError);
}

TEST(RemoveVertex, InputAndOutputSides) {
  auto g = fixture("fignocut");
  const auto u = *g.find_vertex("u");
  auto as_input = remove_vertex(g, u, Side::input);
  EXPECT_EQ(as_input.num_vertices(), 1u);
  // in u1 dropped, closed u3-l3 becomes an input at l, out u2 becomes identity
  EXPECT_EQ(as_input.num_edges(), 4u);
  EXPECT_EQ(as_input.count(EdgeKind::identity), 1u);
  EXPECT_EQ(as_input.count(EdgeKind::input), 2u);
  auto as_output = remove_vertex(g, u, Side::output);
  EXPECT_EQ(as_output.count(EdgeKind::output), 2u);
  EXPECT_EQ(as_output.count(EdgeKind::identity), 1u);
  EXPECT_THROW(remove_vertex(g, 7, Side::input), ValidationError);
}

TEST(Product, MinCutsAdd) {
  auto a = fixture("figSlessT"), b = fixture("fignocut");
  auto p = product_network(a, b);
  EXPECT_EQ(p.num_vertices(), a.num_vertices() + b.num_vertices());
  EXPECT_EQ(min_cut(p).mc, min_cut(a).mc + min_cut(b).mc);
  auto self = product_network(b, b);
  EXPECT_TRUE(self.find_vertex("1.u"));
  EXPECT_TRUE(self.find_vertex("2.u"));
  EXPECT_EQ(min_cut(self).mc, 4);
}

TEST(Random, ProducesConnectedNetworks) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto g = draw_network(rng, 5, 4, 2, 2);
    EXPECT_TRUE(is_connected_network(g));
    EXPECT_EQ(g.num_inputs(), 2u);
    EXPECT_EQ(g.num_outputs(), 2u);
    EXPECT_EQ(g.count(EdgeKind::closed), 8u);
  }
  EXPECT_THROW(random_network(rng, 3, 3, 1, 1), ValidationError);
}
