#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qmflab/contract.hpp"
#include "qmflab/errors.hpp"
#include "qmflab/rng.hpp"

namespace qmf {

enum class Normalization { raw, K, baseline };

inline std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::raw: return "raw";
    case Normalization::K: return "K";
    case Normalization::baseline: return "chgue";
  }
  return "?";
}

struct SpectrumSample {
  /// Descending.
  std::vector<double> values;
  Normalization normalization = Normalization::raw;
  /// Raw singular values were divided by this.
  double divisor = 1.0;
  std::string network;
  int N = 0;
  std::uint64_t seed = 0;
  std::string ensemble;
};

/// sqrt(N^(|E| - MC)), the scale that maps L to K.
inline double k_divisor(std::size_t num_edges, int mc, int N) {
  return std::sqrt(std::pow(static_cast<double>(N), static_cast<double>(num_edges) - mc));
}

inline std::vector<double> singular_values(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return {};
  if (!m.allFinite()) throw std::runtime_error("singular values requested of a non-finite matrix");
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  if (svd.info() != Eigen::Success) throw std::runtime_error("SVD did not converge");
  const Eigen::VectorXd& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline SpectrumSample spectrum(const OperatorMatrix& op, Normalization norm = Normalization::raw) {
  SpectrumSample s;
  try {
    s.values = singular_values(op.L);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " (" + op.network + ", N=" +
                             std::to_string(op.N) + ", " + op.provenance + ")");
  }
  s.normalization = norm;
  s.network = op.network;
  s.N = op.N;
  if (norm == Normalization::K) {
    s.divisor = k_divisor(op.num_edges, op.mc, op.N);
    for (double& v : s.values) v /= s.divisor;
  }
  return s;
}

struct RankReport {
  std::size_t rank = 0;
  double threshold = 0;
  /// Smallest value counted, and largest value below the threshold (0 if none).
  double kept_min = 0;
  double dropped_max = 0;
  /// kept_min / dropped_max, or kept_min / threshold when nothing was dropped.
  double gap_ratio = 0;
  bool confident = false;
  /// Largest ratio between neighbouring nonzero values, and the index of the
  /// value above it.
  double largest_gap = 0;
  std::size_t largest_gap_index = 0;

  std::string verdict() const { return confident ? "confident" : "ambiguous"; }
};

inline constexpr double kDefaultRelFloor = 1e-10;
inline constexpr double kConfidentGap = 1e6;

/// Counts values >= max(abs_floor, rel_floor * max value).
inline RankReport numerical_rank(const SpectrumSample& s, double abs_floor = 0.0,
                                 double rel_floor = kDefaultRelFloor) {
  RankReport r;
  const double top = s.values.empty() ? 0.0 : s.values.front();
  r.threshold = std::max(abs_floor, rel_floor * top);
  for (double v : s.values) {
    if (v >= r.threshold && v > 0) {
      ++r.rank;
      r.kept_min = v;
    } else {
      r.dropped_max = std::max(r.dropped_max, v);
    }
  }
  if (r.rank > 0) {
    const double below = r.dropped_max > 0 ? r.dropped_max : r.threshold;
    r.gap_ratio = below > 0 ? r.kept_min / below : std::numeric_limits<double>::infinity();
  }
  r.confident = r.rank == 0 ? top == 0.0 : r.gap_ratio >= kConfidentGap;
  for (std::size_t i = 0; i + 1 < s.values.size() && s.values[i] > 0; ++i) {
    const double ratio = s.values[i + 1] > 0 ? s.values[i] / s.values[i + 1]
                                             : std::numeric_limits<double>::infinity();
    if (ratio > r.largest_gap) {
      r.largest_gap = ratio;
      r.largest_gap_index = i;
    }
  }
  return r;
}

/// tr((M^dagger M)^k), through the smaller Gram matrix.
inline double trace_power(const Eigen::MatrixXcd& m, int k) {
  if (k < 1) throw ValidationError("trace_power needs k >= 1");
  const Eigen::MatrixXcd gram =
      m.rows() < m.cols() ? Eigen::MatrixXcd(m * m.adjoint()) : Eigen::MatrixXcd(m.adjoint() * m);
  if (k == 1) return gram.trace().real();
  if (k == 2) return gram.squaredNorm();
  Eigen::MatrixXcd half = gram;
  for (int i = 1; i < k / 2; ++i) half = half * gram;
  // tr(G^k) = |G^(k/2)|_F^2 for even k, tr(G^(k/2) G G^(k/2)) for odd k
  if (k % 2 == 0) return half.squaredNorm();
  return (half.adjoint() * gram * half).trace().real();
}

/// (tr(L^dagger L)^k / tr((L^dagger L)^k))^(1/(k-1)) <= rank(L), for k > 1.
inline double rank_lower_bound(const Eigen::MatrixXcd& m, int k) {
  if (k < 2) throw ValidationError("rank_lower_bound needs k > 1");
  const double num = std::pow(trace_power(m, 1), k);
  const double den = trace_power(m, k);
  if (!(den > 0)) throw ValidationError("rank_lower_bound of a zero operator");
  return std::pow(num / den, 1.0 / (k - 1));
}

/// Singular values of an n x n matrix of unit-variance complex Gaussians,
/// divided by sqrt(n) so that they fill the quarter circle on [0, 2].
inline SpectrumSample chgue_baseline(int n, PhiloxStream& rng) {
  if (n < 1) throw ValidationError("chgue_baseline needs n >= 1");
  Eigen::MatrixXcd m(n, n);
  // row-major fill, for a stream layout independent of Eigen's storage order
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.gaussian();
  SpectrumSample s;
  s.values = singular_values(m);
  s.normalization = Normalization::baseline;
  s.divisor = std::sqrt(static_cast<double>(n));
  for (double& v : s.values) v /= s.divisor;
  s.network = "chgue";
  s.N = n;
  return s;
}

/// 1 on [0,1], 0 on [2,inf), smooth cubic step in between.
inline double smooth_cutoff(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double t = x - 1.0;
  return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
}

/// Average of smooth_cutoff(sigma/eps) over the largest `qmc` values, with
/// missing values counting as zeros.
inline double small_sv_fraction(const SpectrumSample& s, double eps, std::size_t qmc) {
  if (!(eps > 0)) throw ValidationError("small_sv_fraction needs eps > 0");
  if (qmc == 0) throw ValidationError("small_sv_fraction needs a positive length");
  double sum = 0;
  for (std::size_t i = 0; i < qmc; ++i)
    sum += smooth_cutoff(i < s.values.size() ? s.values[i] / eps : 0.0);
  return sum / static_cast<double>(qmc);
}

/// av((K^dagger K)^k): the sum of sigma^(2k) over `qmc`.
inline double normalized_moment(const SpectrumSample& s, int k, std::size_t qmc) {
  double sum = 0;
  for (double v : s.values) sum += std::pow(v, 2 * k);
  return sum / static_cast<double>(qmc);
}

struct ProductSvReport {
  std::size_t r_a = 0;
  std::size_t r_b = 0;
  std::size_t inner = 0;
  long long bound = 0;
  std::size_t observed = 0;
  bool holds = true;
};

/// AB has at least r_A + r_B - N2 singular values >= epsA * epsB, where r_A,
/// r_B count values >= epsA, epsB and N2 is the inner dimension.
inline ProductSvReport check_product_sv_count(const Eigen::MatrixXcd& a,
                                              const Eigen::MatrixXcd& b, double eps_a,
                                              double eps_b) {
  if (a.cols() != b.rows())
    throw ValidationError("check_product_sv_count: inner dimensions " +
                          std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  // Values computed in floating point sit within a few ulps of the exact ones.
  constexpr double slack = 1e-12;
  auto count_at_least = [&](const std::vector<double>& s, double eps) {
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [&](double v) { return v >= eps * (1 - slack); }));
  };
  ProductSvReport r;
  r.r_a = count_at_least(singular_values(a), eps_a);
  r.r_b = count_at_least(singular_values(b), eps_b);
  r.inner = static_cast<std::size_t>(a.cols());
  r.bound = static_cast<long long>(r.r_a + r.r_b) - static_cast<long long>(r.inner);
  r.observed = count_at_least(singular_values(a * b), eps_a * eps_b);
  r.holds = static_cast<long long>(r.observed) >= r.bound;
  return r;
}

/// CDF of the quarter-circle law sqrt(4 - x^2)/pi on [0, 2].
inline double quarter_circle_cdf(double x) {
  if (x <= 0) return 0.0;
  if (x >= 2) return 1.0;
  return (x * std::sqrt(4 - x * x) / 2 + 2 * std::asin(x / 2)) / std::numbers::pi;
}

/// sup |F_a - F_b| of the two empirical distributions.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_two_sample of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// sup |F_sample - cdf|.
inline double ks_against_cdf(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ValidationError("ks_against_cdf of an empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace qmf
