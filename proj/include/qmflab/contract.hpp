#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qmflab/errors.hpp"
#include "qmflab/network.hpp"
#include "qmflab/tensor.hpp"

namespace qmf {

/// The contracted operator L: rows are indexed by the output ends, columns by
/// the input ends, each sorted by edge id with the first end most
/// significant.
struct OperatorMatrix {
  Eigen::MatrixXcd L;
  std::string network;
  int N = 0;
  std::size_t num_edges = 0;
  int mc = 0;
  std::string provenance;
};

namespace detail {

using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp--) r *= base;
  return r;
}

/// Transposes a row-major tensor with all extents n: output axis a is input
/// axis perm[a].
inline std::vector<cplx> permute(const std::vector<cplx>& in, std::size_t n,
                                 const std::vector<int>& perm) {
  const std::size_t rank = perm.size();
  bool trivial = true;
  for (std::size_t a = 0; a < rank; ++a) trivial &= perm[a] == static_cast<int>(a);
  if (trivial) return in;
  std::vector<std::size_t> in_stride(rank);
  for (std::size_t a = rank, s = 1; a-- > 0; s *= n) in_stride[a] = s;
  std::vector<std::size_t> step(rank);
  for (std::size_t a = 0; a < rank; ++a) step[a] = in_stride[perm[a]];
  std::vector<cplx> out(in.size());
  std::vector<std::size_t> digit(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = in[offset];
    for (std::size_t a = rank; a-- > 0;) {
      offset += step[a];
      if (++digit[a] < n) break;
      offset -= step[a] * n;
      digit[a] = 0;
    }
  }
  return out;
}

struct Labeled {
  std::vector<int> labels;
  std::vector<cplx> data;
};

/// Sums over the labels the two tensors share; the result's labels are A's
/// remaining labels followed by B's.
inline Labeled contract_pair(const Labeled& a, const Labeled& b, std::size_t n) {
  std::vector<int> shared, free_a, free_b, perm_a, perm_b;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (std::find(b.labels.begin(), b.labels.end(), a.labels[i]) != b.labels.end())
      shared.push_back(a.labels[i]);
    else
      free_a.push_back(a.labels[i]);
  }
  for (int l : b.labels)
    if (std::find(shared.begin(), shared.end(), l) == shared.end()) free_b.push_back(l);
  auto pos = [](const std::vector<int>& labels, int l) {
    return static_cast<int>(std::find(labels.begin(), labels.end(), l) - labels.begin());
  };
  for (int l : free_a) perm_a.push_back(pos(a.labels, l));
  for (int l : shared) perm_a.push_back(pos(a.labels, l));
  for (int l : shared) perm_b.push_back(pos(b.labels, l));
  for (int l : free_b) perm_b.push_back(pos(b.labels, l));
  const auto ra = static_cast<Eigen::Index>(ipow(n, free_a.size()));
  const auto inner = static_cast<Eigen::Index>(ipow(n, shared.size()));
  const auto cb = static_cast<Eigen::Index>(ipow(n, free_b.size()));
  const std::vector<cplx> pa = permute(a.data, n, perm_a), pb = permute(b.data, n, perm_b);
  Labeled out;
  out.labels = free_a;
  out.labels.insert(out.labels.end(), free_b.begin(), free_b.end());
  out.data.resize(static_cast<std::size_t>(ra * cb));
  Eigen::Map<const RowMajor> ma(pa.data(), ra, inner), mb(pb.data(), inner, cb);
  Eigen::Map<RowMajor> mc(out.data.data(), ra, cb);
  mc.noalias() = ma * mb;
  return out;
}

}  // namespace detail

/// Pairwise contraction order for a network's vertices. Up to eight tensors
/// the order minimizing the largest intermediate (then total multiply count)
/// is found by dynamic programming over subsets; beyond that the pair with the
/// smallest result is contracted first. Identity edges are applied only when
/// L is assembled.
class ContractionPlan {
 public:
  ContractionPlan(const TensorNetworkGraph& g, int N,
                  std::uint64_t bytes = default_byte_budget())
      : g_(g), n_(static_cast<std::size_t>(N)), bytes_(bytes) {
    if (N < 1) throw ValidationError("bond dimension N must be at least 1");
    const std::size_t nv = g.num_vertices();
    for (std::size_t v = 0; v < nv; ++v) {
      std::vector<int> labels;
      for (int s = 1; s <= g.vertex(v).degree; ++s)
        labels.push_back(static_cast<int>(g.edge_at(v, s)));
      leaf_labels_.push_back(std::move(labels));
    }
    if (nv > 0 && nv <= 8)
      plan_exhaustive();
    else if (nv > 8)
      plan_greedy();
    checked_volume(N, peak_, bytes_, "contraction of " + g.name());
    mc_ = min_cut(g).mc;
    const std::size_t rows = g.num_outputs(), cols = g.num_inputs();
    checked_volume(N, static_cast<int>(rows + cols), bytes_, "operator of " + g.name());
  }

  int peak_rank() const { return peak_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& steps() const { return steps_; }

  OperatorMatrix contract(const std::vector<const DenseTensor*>& tensors) const {
    const std::size_t nv = g_.num_vertices();
    if (tensors.size() != nv)
      throw ValidationError("expected " + std::to_string(nv) + " tensors, got " +
                            std::to_string(tensors.size()));
    std::vector<detail::Labeled> items;
    for (std::size_t v = 0; v < nv; ++v) {
      const DenseTensor& t = *tensors[v];
      if (t.degree != g_.vertex(v).degree || static_cast<std::size_t>(t.extent) != n_)
        throw ValidationError("tensor for vertex '" + g_.vertex(v).id + "' has degree " +
                              std::to_string(t.degree) + " and extent " +
                              std::to_string(t.extent) + ", expected " +
                              std::to_string(g_.vertex(v).degree) + " and " +
                              std::to_string(n_));
      items.push_back({leaf_labels_[v], t.data});
    }
    for (auto [a, b] : steps_) {
      items.push_back(detail::contract_pair(items[a], items[b], n_));
      std::vector<cplx>().swap(items[a].data);
      std::vector<cplx>().swap(items[b].data);
    }
    const detail::Labeled scalar{{}, {cplx{1.0}}};
    return assemble(items.empty() ? scalar : items.back());
  }

 private:
  /// Labels left open by a subset of vertices.
  std::vector<int> open_labels(std::uint32_t subset) const {
    std::vector<int> all;
    for (std::size_t v = 0; v < leaf_labels_.size(); ++v)
      if (subset >> v & 1) all.insert(all.end(), leaf_labels_[v].begin(), leaf_labels_[v].end());
    std::vector<int> out;
    for (int l : all)
      if (std::count(all.begin(), all.end(), l) == 1) out.push_back(l);
    return out;
  }

  void plan_exhaustive() {
    const std::size_t nv = leaf_labels_.size();
    const std::uint32_t full = (1u << nv) - 1;
    struct Best {
      int peak = std::numeric_limits<int>::max();
      double flops = 0;
      std::uint32_t left = 0;
    };
    std::vector<Best> best(full + 1);
    std::vector<int> rank(full + 1);
    for (std::uint32_t s = 1; s <= full; ++s) rank[s] = static_cast<int>(open_labels(s).size());
    auto pw = [&](int e) { return std::pow(static_cast<double>(n_), e); };
    for (std::uint32_t s = 1; s <= full; ++s) {
      if ((s & (s - 1)) == 0) {
        best[s] = {rank[s], 0.0, 0};
        continue;
      }
      const std::uint32_t low = s & (~s + 1);
      for (std::uint32_t a = (s - 1) & s; a > 0; a = (a - 1) & s) {
        if (!(a & low)) continue;
        const std::uint32_t b = s ^ a;
        // multiply count: every index of A and B, shared ones once
        const int joint = (rank[a] + rank[b] + rank[s]) / 2;
        const int peak = std::max({best[a].peak, best[b].peak, rank[s]});
        const double flops = best[a].flops + best[b].flops + pw(joint);
        if (peak < best[s].peak || (peak == best[s].peak && flops < best[s].flops))
          best[s] = {peak, flops, a};
      }
    }
    peak_ = best[full].peak;
    emit(full, best);
  }

  template <typename Best>
  std::size_t emit(std::uint32_t s, const std::vector<Best>& best) {
    if ((s & (s - 1)) == 0) return static_cast<std::size_t>(std::countr_zero(s));
    const std::size_t a = emit(best[s].left, best);
    const std::size_t b = emit(s ^ best[s].left, best);
    steps_.push_back({a, b});
    return leaf_labels_.size() + steps_.size() - 1;
  }

  void plan_greedy() {
    std::vector<std::pair<std::size_t, std::vector<int>>> live;
    for (std::size_t v = 0; v < leaf_labels_.size(); ++v) {
      live.push_back({v, leaf_labels_[v]});
      peak_ = std::max(peak_, static_cast<int>(leaf_labels_[v].size()));
    }
    while (live.size() > 1) {
      std::size_t bi = 0, bj = 1;
      int best_rank = std::numeric_limits<int>::max(), best_shared = -1;
      std::vector<int> best_labels;
      for (std::size_t i = 0; i < live.size(); ++i)
        for (std::size_t j = i + 1; j < live.size(); ++j) {
          std::vector<int> merged;
          int shared = 0;
          for (int l : live[i].second)
            if (std::find(live[j].second.begin(), live[j].second.end(), l) ==
                live[j].second.end())
              merged.push_back(l);
            else
              ++shared;
          for (int l : live[j].second)
            if (std::find(live[i].second.begin(), live[i].second.end(), l) ==
                live[i].second.end())
              merged.push_back(l);
          const int r = static_cast<int>(merged.size());
          // Outer products only once nothing shares an index.
          const bool better = (shared > 0) != (best_shared > 0)
                                  ? shared > 0
                                  : r < best_rank || (r == best_rank && shared > best_shared);
          if (better) {
            bi = i;
            bj = j;
            best_rank = r;
            best_shared = shared;
            best_labels = std::move(merged);
          }
        }
      steps_.push_back({live[bi].first, live[bj].first});
      peak_ = std::max(peak_, best_rank);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
      live[bi] = {leaf_labels_.size() + steps_.size() - 1, std::move(best_labels)};
    }
  }

  OperatorMatrix assemble(const detail::Labeled& x) const {
    const auto rows_e = g_.output_ends(), cols_e = g_.input_ends();
    const std::size_t n = n_;
    std::vector<std::size_t> stride(g_.num_edges(), 0);
    for (std::size_t a = x.labels.size(), s = 1; a-- > 0; s *= n)
      stride[static_cast<std::size_t>(x.labels[a])] = s;
    // Per row (column): offset into x and the digits on identity edges.
    auto index_side = [&](const std::vector<std::size_t>& ends) {
      const std::size_t count = detail::ipow(n, ends.size());
      std::vector<std::size_t> offset(count, 0), ident(count, 0);
      for (std::size_t r = 0; r < count; ++r) {
        std::size_t rest = r;
        for (std::size_t a = ends.size(); a-- > 0;) {
          const std::size_t digit = rest % n;
          rest /= n;
          if (g_.edge(ends[a]).kind == EdgeKind::identity)
            ident[r] = ident[r] * n + digit;
          else
            offset[r] += digit * stride[ends[a]];
        }
      }
      return std::pair{offset, ident};
    };
    const auto [row_off, row_id] = index_side(rows_e);
    const auto [col_off, col_id] = index_side(cols_e);
    OperatorMatrix op;
    op.L = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(row_off.size()),
                                  static_cast<Eigen::Index>(col_off.size()));
    for (std::size_t c = 0; c < col_off.size(); ++c)
      for (std::size_t r = 0; r < row_off.size(); ++r)
        if (row_id[r] == col_id[c])
          op.L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              x.data[row_off[r] + col_off[c]];
    op.network = g_.name();
    op.N = static_cast<int>(n_);
    op.num_edges = g_.num_edges();
    op.mc = mc_;
    return op;
  }

  TensorNetworkGraph g_;
  std::size_t n_;
  std::uint64_t bytes_;
  std::vector<std::vector<int>> leaf_labels_;
  std::vector<std::pair<std::size_t, std::size_t>> steps_;
  int peak_ = 0;
  int mc_ = 0;
};

/// Identical ensemble: the same tensor at every vertex.
inline OperatorMatrix contract_network(const TensorNetworkGraph& g, const DenseTensor& t, int N) {
  const std::vector<const DenseTensor*> per_vertex(g.num_vertices(), &t);
  return ContractionPlan(g, N).contract(per_vertex);
}

/// Independent assignment: tensors[v] at vertex v.
inline OperatorMatrix contract_network(const TensorNetworkGraph& g,
                                       const std::vector<DenseTensor>& tensors, int N) {
  std::vector<const DenseTensor*> per_vertex;
  for (const auto& t : tensors) per_vertex.push_back(&t);
  return ContractionPlan(g, N).contract(per_vertex);
}

}  // namespace qmf
