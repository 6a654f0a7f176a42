#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mtp2/matcore.hpp"

namespace mtp2 {

using Seed = std::uint64_t;

/// Stream seed for replication `replication` of a run seeded with `base`.
constexpr Seed stream_seed(Seed base, std::uint64_t replication) noexcept { return base ^ replication; }

/// xoshiro256** seeded through splitmix64. Normal variates use the
/// Box-Muller transform, both outputs of each pair consumed in order.
class Rng {
 public:
  explicit Rng(Seed seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// n observations of dimension p, row-major.
class DataMatrix {
 public:
  DataMatrix(std::size_t n, std::size_t p, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * p_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * p_, p_);
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Copy with column j multiplied by d[j].
  DataMatrix scaled_columns(std::span<const double> d) const;

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<double> values_;
};

/// Rows are L z with L = chol(covariance), z i.i.d. standard normal drawn
/// row by row from Rng(seed).
DataMatrix sample_gaussian(const SymmetricMatrix& covariance, std::size_t n, Seed seed);

/// S = X^T X / n, no centering.
SymmetricMatrix sample_covariance(const DataMatrix& x);

/// D^{-1/2} S D^{-1/2}; throws ZeroVariance for a nonpositive diagonal entry.
SymmetricMatrix correlation_matrix(const SymmetricMatrix& s);

/// max_{j,k} |S_jk - Sigma_jk|.
double max_deviation(const SymmetricMatrix& s, const SymmetricMatrix& sigma);

/// 2 sup (sqrt(2 t log p / n) + t log p / n); exceeded with probability at most 2 / p^(t-2).
double bernstein_bound(double p, double n, double t, double sup_entry);

// Data files: header line "n p", then n comma-separated rows.
DataMatrix read_data_csv(std::istream& in);
DataMatrix read_data_csv_file(const std::string& path);
void write_data_csv(std::ostream& out, const DataMatrix& x);
void write_data_csv_file(const std::string& path, const DataMatrix& x);

}  // namespace mtp2
