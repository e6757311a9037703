#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <thread>
#include <vector>

#include "qmflab/contract.hpp"
#include "qmflab/network.hpp"
#include "qmflab/rng.hpp"
#include "qmflab/spectrum.hpp"
#include "qmflab/tensor.hpp"
#include "qmflab/wick.hpp"

namespace qmf {

/// Tensors for one sample. Identical ensemble: one tensor per distinct
/// degree, shared by all vertices of that degree; independent: one per vertex.
struct TensorDraw {
  std::vector<DenseTensor> storage;
  std::vector<const DenseTensor*> per_vertex;
};

inline TensorDraw draw_tensors(const TensorNetworkGraph& g, int N, Ensemble ensemble,
                               std::uint64_t seed, Experiment experiment, std::uint32_t sample) {
  TensorDraw d;
  std::vector<std::size_t> slot(g.num_vertices());
  std::map<int, std::size_t> by_degree;
  d.storage.reserve(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const int degree = g.vertex(v).degree;
    if (ensemble == Ensemble::identical) {
      auto [it, fresh] = by_degree.try_emplace(degree, d.storage.size());
      if (fresh) {
        PhiloxStream rng(seed, experiment, sample, 0x80000000u | static_cast<std::uint32_t>(degree));
        d.storage.push_back(sample_tensor(N, degree, rng));
      }
      slot[v] = it->second;
    } else {
      PhiloxStream rng(seed, experiment, sample, static_cast<std::uint32_t>(v));
      slot[v] = d.storage.size();
      d.storage.push_back(sample_tensor(N, degree, rng));
    }
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) d.per_vertex.push_back(&d.storage[slot[v]]);
  return d;
}

/// Runs f(sample) for sample = 0..count-1 on `jobs` threads; results land at
/// their sample index, so the output does not depend on scheduling.
template <typename T, typename F>
std::vector<T> parallel_samples(std::size_t count, unsigned jobs, F f) {
  std::vector<T> out(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = f(i);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return out;
}

struct MomentEstimate {
  double mean = 0;
  double stderr_mean = 0;
  std::size_t samples = 0;
};

inline MomentEstimate summarize(const std::vector<double>& values) {
  MomentEstimate e;
  e.samples = values.size();
  if (values.empty()) return e;
  double sum = 0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.stderr_mean = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                              static_cast<double>(values.size()));
  }
  return e;
}

/// Sample mean and standard error of tr((L^dagger L)^k) over fresh draws.
inline MomentEstimate mc_moment(const TensorNetworkGraph& g, int k, int N, std::size_t samples,
                                Ensemble ensemble, std::uint64_t seed, unsigned jobs = 1) {
  if (samples == 0) throw ValidationError("mc_moment needs at least one sample");
  const ContractionPlan plan(g, N);
  auto values = parallel_samples<double>(samples, jobs, [&](std::size_t s) {
    const auto draw =
        draw_tensors(g, N, ensemble, seed, Experiment::moment, static_cast<std::uint32_t>(s));
    return trace_power(plan.contract(draw.per_vertex).L, k);
  });
  return summarize(values);
}

/// One sampled operator and its spectrum.
inline SpectrumSample sample_spectrum(const TensorNetworkGraph& g, int N, Ensemble ensemble,
                                      std::uint64_t seed, Normalization norm,
                                      Experiment experiment = Experiment::spectrum,
                                      std::uint32_t sample = 0) {
  const auto draw = draw_tensors(g, N, ensemble, seed, experiment, sample);
  auto op = ContractionPlan(g, N).contract(draw.per_vertex);
  op.provenance = "seed " + std::to_string(seed) + ", sample " + std::to_string(sample);
  SpectrumSample s = spectrum(op, norm);
  s.seed = seed;
  s.ensemble = std::string(to_string(ensemble));
  return s;
}

struct RankScanRow {
  int N = 0;
  std::uint32_t sample = 0;
  std::uint64_t qmc = 0;
  std::size_t rank = 0;
  long long deficit = 0;
  /// Smallest and second-smallest of the largest qmc values, K-normalized
  /// (zero-padded).
  double min_sigma = 0;
  double next_sigma = 0;
  RankReport report;
};

/// Numerical rank of one identical-ensemble sample against N^MC.
inline RankScanRow rank_scan_point(const TensorNetworkGraph& g, int N, std::uint64_t seed,
                                   std::uint32_t sample, double abs_floor = 0.0,
                                   double rel_floor = kDefaultRelFloor,
                                   Ensemble ensemble = Ensemble::identical) {
  const auto s = sample_spectrum(g, N, ensemble, seed, Normalization::K, Experiment::rank_scan,
                                 sample);
  RankScanRow row;
  row.N = N;
  row.sample = sample;
  row.qmc = static_cast<std::uint64_t>(
      std::llround(std::pow(static_cast<double>(N), min_cut(g).mc)));
  row.report = numerical_rank(s, abs_floor, rel_floor);
  row.rank = row.report.rank;
  row.deficit = static_cast<long long>(row.qmc) - static_cast<long long>(row.rank);
  auto at = [&](std::uint64_t i) { return i < s.values.size() ? s.values[i] : 0.0; };
  row.min_sigma = row.qmc >= 1 ? at(row.qmc - 1) : 0.0;
  row.next_sigma = row.qmc >= 2 ? at(row.qmc - 2) : 0.0;
  return row;
}

}  // namespace qmf
