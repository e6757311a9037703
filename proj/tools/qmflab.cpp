// qmflab: command-line front end for the network, Wick and numeric layers.
// JSON results and CSV series go to --out or standard output; progress and
// diagnostics go to standard error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmflab/contract.hpp"
#include "qmflab/errors.hpp"
#include "qmflab/io.hpp"
#include "qmflab/montecarlo.hpp"
#include "qmflab/network.hpp"
#include "qmflab/network_io.hpp"
#include "qmflab/spectrum.hpp"
#include "qmflab/tensor.hpp"
#include "qmflab/wick.hpp"

using nlohmann::json;
using namespace qmf;

namespace {

struct Options {
  std::string network;
  int k = 1;
  int N = 0;
  std::string n_range;
  std::size_t samples = 1;
  std::string ensemble = "identical";
  std::uint64_t seed = 0;
  double abs_floor = 0.0;
  double rel_floor = kDefaultRelFloor;
  unsigned jobs = 1;
  std::string out;
  bool no_timestamp = false;
  std::string product;
  bool leading_only = false;
  bool compare_exact = false;
  std::string normalization = "K";
  int chgue = 0;
  int n1 = 2;
  int n2 = 2;
};

/// Writes `text` to --out, or stdout when no path was given.
void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw std::runtime_error("cannot write '" + o.out + "'");
  f << text;
}

void emit_json(const Options& o, const json& j) { emit(o, j.dump(2) + "\n"); }

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad integer '" + item + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int n = parse_int_list(s).at(0);
    return {n, n};
  }
  const int a = parse_int_list(s.substr(0, dots)).at(0);
  const int b = parse_int_list(s.substr(dots + 2)).at(0);
  if (a < 1 || b < a) throw ValidationError("bad N range '" + s + "'");
  return {a, b};
}

json config_echo(const std::string& command, const Options& o) {
  json c{{"command", command}, {"network", o.network}};
  if (command == "moments-exact") {
    c["k"] = o.k;
    c["ensemble"] = o.ensemble;
    if (!o.product.empty()) c["product"] = o.product;
  } else if (command == "moments-mc") {
    c.update({{"k", o.k}, {"N", o.N}, {"samples", o.samples}, {"ensemble", o.ensemble},
              {"seed", o.seed}});
  } else if (command == "kron-check") {
    c.update({{"N1", o.n1}, {"N2", o.n2}, {"seed", o.seed}});
  }
  return c;
}

TensorNetworkGraph load(const Options& o) {
  if (o.network.empty()) throw ValidationError("--network is required");
  return load_network_file(o.network);
}

int cmd_validate(const Options& o) {
  const auto g = load(o);
  const bool connected = is_connected_network(g);
  json r{{"network", g.name()},
         {"valid", true},
         {"connected", connected},
         {"vertices", g.num_vertices()},
         {"edges", g.num_edges()},
         {"inputs", g.num_inputs()},
         {"outputs", g.num_outputs()}};
  if (!connected) {
    const std::string warning =
        "not connected: some vertex has no path to an open edge (a connected network "
        "requires every vertex to reach some open edge)";
    r["warnings"] = {warning};
    std::cerr << "qmflab: " << g.name() << ": " << warning << "\n";
  }
  emit_json(o, r);
  return connected ? 0 : static_cast<int>(ExitCode::validation);
}

int cmd_mincut(const Options& o) {
  const auto g = load(o);
  const auto r = min_cut(g);
  json in_side = json::array(), out_side = json::array(), paths = json::array();
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    (r.witness.sbar[v] ? in_side : out_side).push_back(g.vertex(v).id);
  for (const auto& p : r.paths) {
    json verts = json::array();
    for (auto v : p.vertices) verts.push_back(g.vertex(v).id);
    paths.push_back({{"edges", p.edges}, {"vertices", verts}});
  }
  emit_json(o, {{"network", g.name()},
                {"mc", r.mc},
                {"cut", {{"input_side", in_side}, {"output_side", out_side},
                         {"edges", r.witness.cut_set}}},
                {"paths", paths},
                {"case", std::string(to_string(classify_case(g)))}});
  return 0;
}

EnumerationOptions enumeration_options(const Options& o) {
  EnumerationOptions e;
  e.budget = default_pair_budget();
  e.jobs = o.jobs;
  e.leading_only = o.leading_only;
  return e;
}

int cmd_moments_exact(const Options& o) {
  const auto g = load(o);
  const Ensemble ens = parse_ensemble(o.ensemble);
  const auto opts = enumeration_options(o);
  MomentPolynomial p;
  if (o.product.empty()) {
    p = enumerate_moment(g, o.k, ens, opts);
  } else {
    std::vector<ClosedNetwork> parts;
    for (int k : parse_int_list(o.product)) parts.push_back(build_closed_network(g, k));
    p = enumerate_closed(build_product_closed_network(parts), ens, opts);
    p.network = g.name();
    p.k = 0;
  }
  json j = polynomial_to_json(p);
  if (!o.product.empty()) j["product"] = parse_int_list(o.product);
  j["config"] = config_echo("moments-exact", o);
  emit_json(o, j);
  return 0;
}

int cmd_moments_mc(const Options& o) {
  const auto g = load(o);
  if (o.N < 1) throw ValidationError("--N must be at least 1");
  const Ensemble ens = parse_ensemble(o.ensemble);
  const auto e = mc_moment(g, o.k, o.N, o.samples, ens, o.seed, o.jobs);
  json j{{"network", g.name()}, {"k", o.k}, {"N", o.N}, {"ensemble", o.ensemble},
         {"samples", e.samples}, {"mean", e.mean}, {"stderr", e.stderr_mean}};
  if (o.compare_exact) {
    const auto p = enumerate_moment(g, o.k, ens, enumeration_options(o));
    const double exact = static_cast<double>(p.evaluate(o.N));
    j["exact"] = exact;
    j["z"] = e.stderr_mean > 0 ? (e.mean - exact) / e.stderr_mean : 0.0;
  }
  j["config"] = config_echo("moments-mc", o);
  emit_json(o, j);
  return 0;
}

Normalization parse_normalization(const std::string& s) {
  if (s == "raw") return Normalization::raw;
  if (s == "K") return Normalization::K;
  throw ValidationError("unknown normalization '" + s + "' (raw or K)");
}

int cmd_spectrum(const Options& o) {
  std::ostringstream out;
  if (o.chgue > 0) {
    PhiloxStream rng(o.seed, Experiment::chgue);
    auto s = chgue_baseline(o.chgue, rng);
    s.seed = o.seed;
    s.ensemble = "chgue";
    write_spectrum_csv(out, s, {{"command", "spectrum"}}, !o.no_timestamp);
  } else {
    const auto g = load(o);
    if (o.N < 1) throw ValidationError("--N must be at least 1");
    const auto s = sample_spectrum(g, o.N, parse_ensemble(o.ensemble), o.seed,
                                   parse_normalization(o.normalization));
    write_spectrum_csv(out, s, {{"command", "spectrum"}, {"mc", std::to_string(min_cut(g).mc)}},
                       !o.no_timestamp);
  }
  emit(o, out.str());
  return 0;
}

int cmd_rank_scan(const Options& o) {
  const auto g = load(o);
  const auto [lo, hi] = o.n_range.empty() ? std::pair{o.N, o.N} : parse_range(o.n_range);
  if (lo < 1) throw ValidationError("give --N or --N-range with N >= 1");
  const Ensemble ens = parse_ensemble(o.ensemble);
  std::vector<std::pair<int, std::uint32_t>> points;
  for (int N = lo; N <= hi; ++N)
    for (std::size_t s = 0; s < o.samples; ++s) points.push_back({N, static_cast<std::uint32_t>(s)});
  std::atomic<std::size_t> done{0};
  auto rows = parallel_samples<RankScanRow>(points.size(), o.jobs, [&](std::size_t i) {
    auto row = rank_scan_point(g, points[i].first, o.seed, points[i].second, o.abs_floor,
                               o.rel_floor, ens);
    std::cerr << "rank-scan: N=" << row.N << " sample=" << row.sample
              << " deficit=" << row.deficit << " (" << ++done << "/" << points.size() << ")\n";
    return row;
  });
  const Metadata meta{{"command", "rank-scan"},
                      {"network", g.name()},
                      {"N_range", std::to_string(lo) + ".." + std::to_string(hi)},
                      {"samples", std::to_string(o.samples)},
                      {"seed", std::to_string(o.seed)},
                      {"ensemble", o.ensemble},
                      {"abs_floor", format_double(o.abs_floor)},
                      {"rel_floor", format_double(o.rel_floor)},
                      {"normalization", "K"}};
  std::ostringstream out;
  write_rank_scan_csv(out, rows, meta, !o.no_timestamp);
  emit(o, out.str());
  return 0;
}

int cmd_kron_check(const Options& o) {
  const auto g = load(o);
  const auto degree = g.uniform_degree();
  if (!degree) throw ValidationError("kron-check needs a network with one vertex degree");
  PhiloxStream r1(o.seed, Experiment::kron, 0, 1), r2(o.seed, Experiment::kron, 0, 2);
  const auto t1 = sample_tensor(o.n1, *degree, r1), t2 = sample_tensor(o.n2, *degree, r2);
  auto rank_of = [&](const DenseTensor& t, int N) {
    return numerical_rank(spectrum(contract_network(g, t, N)), o.abs_floor, o.rel_floor);
  };
  const auto a = rank_of(t1, o.n1), b = rank_of(t2, o.n2);
  const auto c = rank_of(kron_compose(t1, t2), o.n1 * o.n2);
  const int mc = min_cut(g).mc;
  emit_json(o, {{"network", g.name()},
                {"N1", o.n1},
                {"N2", o.n2},
                {"rank1", a.rank},
                {"rank2", b.rank},
                {"rank_composite", c.rank},
                {"product_of_ranks", a.rank * b.rank},
                {"holds", c.rank >= a.rank * b.rank},
                {"qmc_composite", std::pow(static_cast<double>(o.n1 * o.n2), mc)},
                {"verdicts", {a.verdict(), b.verdict(), c.verdict()}},
                {"config", config_echo("kron-check", o)}});
  return c.rank >= a.rank * b.rank ? 0 : static_cast<int>(ExitCode::assertion);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum max-flow / min-cut laboratory for random tensor networks"};
  app.require_subcommand(1);
  Options o;

  auto network = [&](CLI::App* c) {
    c->add_option("--network", o.network, "network JSON file")->check(CLI::ExistingFile);
  };
  auto output = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output file (default: standard output)");
  };
  auto ensemble = [&](CLI::App* c) {
    c->add_option("--ensemble", o.ensemble, "identical | independent")
        ->check(CLI::IsMember({"identical", "independent"}));
  };
  auto jobs = [&](CLI::App* c) {
    c->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "check a network file");
  network(validate);
  output(validate);

  auto* mincut = app.add_subcommand("mincut", "minimum cut, flow paths and case label");
  network(mincut);
  output(mincut);

  auto* exact = app.add_subcommand("moments-exact", "exact E[tr((L^dagger L)^k)] by Wick pairings");
  network(exact);
  exact->add_option("--k", o.k, "moment order")->check(CLI::PositiveNumber);
  ensemble(exact);
  exact->add_option("--product", o.product, "comma-separated k's: product of traces");
  exact->add_flag("--leading-only", o.leading_only, "only the leading coefficient");
  jobs(exact);
  output(exact);

  auto* mc = app.add_subcommand("moments-mc", "Monte-Carlo estimate of E[tr((L^dagger L)^k)]");
  network(mc);
  mc->add_option("--k", o.k, "moment order")->check(CLI::PositiveNumber);
  mc->add_option("--N", o.N, "bond dimension")->required();
  mc->add_option("--samples", o.samples, "number of draws")->check(CLI::PositiveNumber);
  ensemble(mc);
  mc->add_option("--seed", o.seed, "RNG seed");
  mc->add_flag("--compare-exact", o.compare_exact, "also report the exact value");
  jobs(mc);
  output(mc);

  auto* spec = app.add_subcommand("spectrum", "singular values of one sampled operator (CSV)");
  network(spec);
  spec->add_option("--N", o.N, "bond dimension");
  spec->add_option("--seed", o.seed, "RNG seed");
  ensemble(spec);
  spec->add_option("--normalization", o.normalization, "raw | K")
      ->check(CLI::IsMember({"raw", "K"}));
  spec->add_option("--chgue", o.chgue, "emit an n x n chiral GUE baseline instead");
  spec->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp comment");
  output(spec);

  auto* scan = app.add_subcommand("rank-scan", "numerical rank against N^MC over a range of N (CSV)");
  network(scan);
  scan->add_option("--N-range", o.n_range, "a..b");
  scan->add_option("--N", o.N, "single bond dimension");
  scan->add_option("--samples", o.samples, "samples per N")->check(CLI::PositiveNumber);
  scan->add_option("--seed", o.seed, "RNG seed");
  ensemble(scan);
  scan->add_option("--abs-floor", o.abs_floor, "absolute singular value floor");
  scan->add_option("--rel-floor", o.rel_floor, "floor relative to the largest value");
  scan->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp comment");
  jobs(scan);
  output(scan);

  auto* kron = app.add_subcommand("kron-check", "rank of a Kronecker-composed tensor");
  network(kron);
  kron->add_option("--N1", o.n1, "first bond dimension")->check(CLI::PositiveNumber);
  kron->add_option("--N2", o.n2, "second bond dimension")->check(CLI::PositiveNumber);
  kron->add_option("--seed", o.seed, "RNG seed");
  kron->add_option("--abs-floor", o.abs_floor, "absolute singular value floor");
  kron->add_option("--rel-floor", o.rel_floor, "floor relative to the largest value");
  output(kron);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*mincut) return cmd_mincut(o);
    if (*exact) return cmd_moments_exact(o);
    if (*mc) return cmd_moments_mc(o);
    if (*spec) return cmd_spectrum(o);
    if (*scan) return cmd_rank_scan(o);
    if (*kron) return cmd_kron_check(o);
  } catch (const ParseError& e) {
    std::cerr << "qmflab: parse error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::validation);
  } catch (const ValidationError& e) {
    std::cerr << "qmflab: invalid input: " << e.what() << "\n";
    return static_cast<int>(ExitCode::validation);
  } catch (const BudgetExceeded& e) {
    std::cerr << "qmflab: budget exceeded: " << e.what() << "\n";
    return static_cast<int>(ExitCode::budget);
  } catch (const LemmaViolation& e) {
    std::cerr << "qmflab: internal assertion failed: " << e.what() << "\n";
    return static_cast<int>(ExitCode::assertion);
  } catch (const std::exception& e) {
    std::cerr << "qmflab: " << e.what() << "\n";
    return static_cast<int>(ExitCode::failure);
  }
  return static_cast<int>(ExitCode::failure);
}
