#pragma once

// Ground-truth precision models.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mtp2/losses.hpp"
#include "mtp2/matcore.hpp"
#include "mtp2/sampling.hpp"

namespace mtp2 {

struct DiagonalSpec {
  std::vector<double> d;
};

struct EquicorrelationSpec {
  std::size_t p = 0;
  double x = 0.0;
};

struct CaiBlockSpec {
  std::size_t p = 0;
  std::size_t k = 1;
  double eps = -0.1;
  /// Row mask of length ceil(p/2); empty means all ones.
  std::vector<int> b;
  Seed seed = 0;
};

struct RandomLaplacianSpec {
  std::size_t p = 0;
  double edge_prob = 0.1;
  double weight_lo = 0.1;
  double weight_hi = 1.0;
  double delta = 1.0;
  Seed seed = 0;
};

using ModelSpec = std::variant<DiagonalSpec, EquicorrelationSpec, CaiBlockSpec, RandomLaplacianSpec>;

std::size_t model_dim(const ModelSpec& spec);
std::string model_kind(const ModelSpec& spec);

/// Copy of `spec` resized to dimension p. A diagonal vector is tiled cyclically.
ModelSpec with_dim(const ModelSpec& spec, std::size_t p);

SymmetricMatrix build_model(const ModelSpec& spec);

SymmetricMatrix diagonal_model(std::span<const double> d);

/// (1 - x) I + x 11^T; throws OutOfPsdRange unless x in [-1/(p-1), 1].
SymmetricMatrix equicorrelation(std::size_t p, double x);

/// Binary rows x cols pattern, row-major.
struct BinaryPattern {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> cells;

  int operator()(std::size_t r, std::size_t c) const noexcept { return cells[r * cols + c]; }
  std::size_t row_count(std::size_t r) const;
  std::size_t col_count(std::size_t c) const;
};

/// Uniform random pattern with k ones per row and at most 2k per column.
BinaryPattern cai_pattern(std::size_t rows, std::size_t cols, std::size_t k, Seed seed);

/// [[I, eps (b (x) e) o A], [eps ((b (x) e) o A)^T, I]] for an explicit pattern.
SymmetricMatrix cai_block_from_pattern(const BinaryPattern& a, double eps, std::span<const int> b);

/// The two-block perturbation family with a seeded admissible pattern.
SymmetricMatrix cai_block(std::size_t p, std::size_t k, double eps, std::span<const int> b, Seed seed);

struct NeumannCheck {
  double max_corr = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// Compares the largest off-diagonal correlation of theta^{-1} against
/// 2k|eps| / (1 - (2k eps)^2).
NeumannCheck neumann_correlation_bound(const SymmetricMatrix& theta, std::size_t k, double eps);

/// Weighted Erdos-Renyi Laplacian plus delta I.
SymmetricMatrix random_laplacian_mmatrix(std::size_t p, double edge_prob, double weight_lo, double weight_hi,
                                         double delta, Seed seed);

GammaValue gamma_of_model(const ModelSpec& spec);

// JSON representation, e.g. {"kind":"equicorrelation","p":5,"x":-0.1}.
ModelSpec parse_model_spec(std::string_view json);
std::string model_spec_to_json(const ModelSpec& spec);

}  // namespace mtp2
