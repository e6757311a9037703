#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "qmflab/errors.hpp"
#include "qmflab/rng.hpp"

namespace qmf {

using cplx = std::complex<double>;

/// Byte budget for dense tensors and intermediates, from QMFLAB_BUDGET_BYTES
/// (default 4 GiB).
inline std::uint64_t default_byte_budget() {
  if (const char* env = std::getenv("QMFLAB_BUDGET_BYTES")) {
    char* end = nullptr;
    const auto value = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return value;
  }
  return std::uint64_t{4} << 30;
}

/// N^d, throwing BudgetExceeded if that many complex entries exceed `bytes`.
inline std::size_t checked_volume(int extent, int rank, std::uint64_t bytes,
                                  const std::string& what) {
  long double volume = 1;
  for (int i = 0; i < rank; ++i) volume *= extent;
  if (volume * sizeof(cplx) > static_cast<long double>(bytes))
    throw BudgetExceeded(what + " needs " + std::to_string(extent) + "^" +
                         std::to_string(rank) + " complex entries, over the " +
                         std::to_string(bytes) + "-byte budget");
  return static_cast<std::size_t>(volume);
}

/// Tensor with `degree` axes of extent `extent`, row-major; axis j is slot j+1.
struct DenseTensor {
  int extent = 1;
  int degree = 0;
  std::vector<cplx> data{cplx{1.0}};
  std::string provenance;

  DenseTensor() = default;
  DenseTensor(int n, int d, std::uint64_t bytes = default_byte_budget())
      : extent(n), degree(d), data(checked_volume(n, d, bytes, "tensor")) {}

  std::size_t size() const { return data.size(); }

  cplx& at(const std::vector<int>& index) { return data[flat(index)]; }
  const cplx& at(const std::vector<int>& index) const { return data[flat(index)]; }

  std::size_t flat(const std::vector<int>& index) const {
    std::size_t i = 0;
    for (int j : index) i = i * static_cast<std::size_t>(extent) + static_cast<std::size_t>(j);
    return i;
  }
};

/// N^d i.i.d. complex Gaussians with E|z|^2 = 1.
inline DenseTensor sample_tensor(int N, int d, PhiloxStream& rng,
                                 std::uint64_t bytes = default_byte_budget()) {
  if (N < 1 || d < 0) throw ValidationError("sample_tensor needs N >= 1 and d >= 0");
  DenseTensor t(N, d, bytes);
  for (auto& z : t.data) z = rng.gaussian();
  t.provenance = "gaussian N=" + std::to_string(N) + " d=" + std::to_string(d);
  return t;
}

/// Tensor of extent N1*N2 whose entry at combined indices (i_j * N2 + k_j)
/// is t1[i] * t2[k].
inline DenseTensor kron_compose(const DenseTensor& t1, const DenseTensor& t2) {
  if (t1.degree != t2.degree)
    throw ValidationError("kron_compose: degree " + std::to_string(t1.degree) + " vs " +
                          std::to_string(t2.degree));
  const int d = t1.degree;
  DenseTensor out(t1.extent * t2.extent, d);
  std::vector<int> i1(d, 0), i2(d, 0), joint(d, 0);
  for (std::size_t a = 0; a < t1.size(); ++a) {
    // decode a into i1
    std::size_t rest = a;
    for (int j = d - 1; j >= 0; --j) {
      i1[j] = static_cast<int>(rest % static_cast<std::size_t>(t1.extent));
      rest /= static_cast<std::size_t>(t1.extent);
    }
    for (std::size_t b = 0; b < t2.size(); ++b) {
      rest = b;
      for (int j = d - 1; j >= 0; --j) {
        i2[j] = static_cast<int>(rest % static_cast<std::size_t>(t2.extent));
        rest /= static_cast<std::size_t>(t2.extent);
      }
      for (int j = 0; j < d; ++j) joint[j] = i1[j] * t2.extent + i2[j];
      out.at(joint) = t1.data[a] * t2.data[b];
    }
  }
  out.provenance = "kron(" + t1.provenance + ", " + t2.provenance + ")";
  return out;
}

}  // namespace qmf
