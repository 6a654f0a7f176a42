#pragma once

// Dense symmetric linear algebra shared by every other module.
//
// Matrices are small-to-moderate (p up to a few thousand) and stored densely
// in row-major order. `SymmetricMatrix` enforces exact symmetry: every write
// goes through `set`, which updates both triangles.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mtp2 {

inline constexpr double kRelTolChol = 1e-10;
inline constexpr double kRelTolInv = 1e-10;
inline constexpr double kRelTolEig = 1e-8;
inline constexpr double kAsymmetryTol = 1e-10;
inline constexpr double kPivotFloor = 1e-12;

/// General dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t dim) : dim_(dim), values_(dim * dim, 0.0) {}
  Matrix(std::size_t dim, std::vector<double> row_major);

  static Matrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t j, std::size_t k) const noexcept { return values_[j * dim_ + k]; }
  double& operator()(std::size_t j, std::size_t k) noexcept { return values_[j * dim_ + k]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  Matrix transposed() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  /// Zero matrix of the given dimension.
  explicit SymmetricMatrix(std::size_t dim);

  /// Builds from a row-major array. Asymmetry above kAsymmetryTol * max|M|
  /// throws AsymmetricInput; smaller asymmetry is averaged away.
  static SymmetricMatrix from_row_major(std::size_t dim, std::span<const double> row_major);
  static SymmetricMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static SymmetricMatrix from_matrix(const Matrix& m);
  static SymmetricMatrix identity(std::size_t dim);
  static SymmetricMatrix diagonal(std::span<const double> d);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t j, std::size_t k) const noexcept { return values_[j * dim_ + k]; }
  void set(std::size_t j, std::size_t k, double v) noexcept {
    values_[j * dim_ + k] = v;
    values_[k * dim_ + j] = v;
  }

  /// Full row-major storage (both triangles).
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t j) const noexcept {
    return std::span<const double>(values_).subspan(j * dim_, dim_);
  }

  std::vector<double> diag() const;
  /// Entrywise max-abs norm max_{j,k} |M_jk|.
  double max_abs() const noexcept;
  double max_diagonal() const noexcept;
  double trace() const noexcept;
  /// Entrywise l1 norm sum_{j,k} |M_jk|.
  double l1_norm() const noexcept;

  Matrix to_matrix() const { return Matrix(dim_, values_); }

  SymmetricMatrix& operator+=(const SymmetricMatrix& other);
  SymmetricMatrix& operator-=(const SymmetricMatrix& other);
  SymmetricMatrix& operator*=(double scale) noexcept;

  friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

 private:
  SymmetricMatrix(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {}

  std::size_t dim_ = 0;
  std::vector<double> values_;
};

SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b);
SymmetricMatrix operator-(SymmetricMatrix a, const SymmetricMatrix& b);
SymmetricMatrix operator*(double scale, SymmetricMatrix a);

/// Lower-triangular L with positive diagonal and L * L^T = M.
class CholeskyFactor {
 public:
  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t j, std::size_t k) const noexcept { return lower_[j * dim_ + k]; }
  /// L * L^T as a symmetric matrix.
  SymmetricMatrix reconstruct() const;

 private:
  friend CholeskyFactor cholesky(const SymmetricMatrix& m);
  CholeskyFactor(std::size_t dim, std::vector<double> lower) : dim_(dim), lower_(std::move(lower)) {}

  std::size_t dim_ = 0;
  std::vector<double> lower_;
};

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column i pairs with eigenvalues[i]

  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
  SymmetricMatrix reconstruct() const;
};

/// Throws NotPositiveDefinite(j) when pivot j is <= kPivotFloor * max diagonal.
CholeskyFactor cholesky(const SymmetricMatrix& m);
/// Non-throwing probe; true iff `cholesky` would succeed.
bool is_positive_definite(const SymmetricMatrix& m);

double log_det(const CholeskyFactor& f);
SymmetricMatrix inverse_psd(const CholeskyFactor& f);

/// Full symmetric eigendecomposition, eigenvalues ascending.
SpectralDecomposition sym_eigen(const SymmetricMatrix& m);
/// Eigenvalues only (ascending); cheaper when vectors are not needed.
std::vector<double> sym_eigenvalues(const SymmetricMatrix& m);

/// V f(Lambda) V^T for a scalar function applied to the spectrum.
template <typename F>
SymmetricMatrix spectral_function(const SpectralDecomposition& d, F&& f);

double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b);
SymmetricMatrix positive_part(const SymmetricMatrix& m);
/// diag(d) * M * diag(d); d must be strictly positive.
SymmetricMatrix congruence(std::span<const double> d, const SymmetricMatrix& m);
/// P^T * M * P for a general square P.
SymmetricMatrix congruence(const Matrix& p, const SymmetricMatrix& m);

/// max_{j,k} |(A B - I)_{jk}|.
double identity_residual(const SymmetricMatrix& a, const SymmetricMatrix& b);
/// max_{j,k} |A_jk - B_jk|.
double max_abs_diff(const SymmetricMatrix& a, const SymmetricMatrix& b);

// dense-csv: first line p, then p comma-separated rows of p values.
SymmetricMatrix read_dense_csv(std::istream& in);
SymmetricMatrix read_dense_csv_file(const std::string& path);
void write_dense_csv(std::ostream& out, const SymmetricMatrix& m);
void write_dense_csv_file(const std::string& path, const SymmetricMatrix& m);

/// Parses one comma-separated row of decimal literals (scientific notation allowed).
std::vector<double> parse_csv_row(const std::string& line);

template <typename F>
SymmetricMatrix spectral_function(const SpectralDecomposition& d, F&& f) {
  const std::size_t p = d.eigenvalues.size();
  std::vector<double> fl(p);
  for (std::size_t i = 0; i < p; ++i) fl[i] = f(d.eigenvalues[i]);
  std::vector<double> out(p * p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) acc += d.eigenvectors(j, i) * fl[i] * d.eigenvectors(k, i);
      out[j * p + k] = acc;
      out[k * p + j] = acc;
    }
  }
  return SymmetricMatrix::from_row_major(p, out);
}

}  // namespace mtp2
