#include "mtp2/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mtp2/errors.hpp"

namespace mtp2 {

Matrix::Matrix(std::size_t dim, std::vector<double> row_major) : dim_(dim), values_(std::move(row_major)) {
  if (values_.size() != dim_ * dim_) throw DimensionMismatch(values_.size(), dim_ * dim_);
}

Matrix Matrix::identity(std::size_t dim) {
  Matrix m(dim);
  for (std::size_t j = 0; j < dim; ++j) m(j, j) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(dim_);
  for (std::size_t j = 0; j < dim_; ++j)
    for (std::size_t k = 0; k < dim_; ++k) t(k, j) = (*this)(j, k);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  const std::size_t p = a.dim();
  Matrix c(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < p; ++i) {
      const double aji = a(j, i);
      if (aji == 0.0) continue;
      for (std::size_t k = 0; k < p; ++k) c(j, k) += aji * b(i, k);
    }
  return c;
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim) : dim_(dim), values_(dim * dim, 0.0) {}

SymmetricMatrix SymmetricMatrix::from_row_major(std::size_t dim, std::span<const double> row_major) {
  if (dim == 0) throw InvalidArgument("matrix dimension must be at least 1");
  if (row_major.size() != dim * dim) throw DimensionMismatch(row_major.size(), dim * dim);
  double scale = 0.0;
  double asym = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = row_major[j * dim + k];
      if (!std::isfinite(v)) throw InvalidArgument("matrix entries must be finite");
      scale = std::max(scale, std::abs(v));
      asym = std::max(asym, std::abs(v - row_major[k * dim + j]));
    }
  }
  if (asym > kAsymmetryTol * scale) throw AsymmetricInput(asym);
  std::vector<double> values(row_major.begin(), row_major.end());
  if (asym > 0.0) {
    for (std::size_t j = 0; j < dim; ++j)
      for (std::size_t k = j + 1; k < dim; ++k) {
        const double avg = 0.5 * (values[j * dim + k] + values[k * dim + j]);
        values[j * dim + k] = avg;
        values[k * dim + j] = avg;
      }
  }
  return SymmetricMatrix(dim, std::move(values));
}

SymmetricMatrix SymmetricMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t p = rows.size();
  std::vector<double> flat;
  flat.reserve(p * p);
  for (const auto& r : rows) {
    if (r.size() != p) throw DimensionMismatch(r.size(), p);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return from_row_major(p, flat);
}

SymmetricMatrix SymmetricMatrix::from_matrix(const Matrix& m) { return from_row_major(m.dim(), m.values()); }

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim) {
  SymmetricMatrix m(dim);
  for (std::size_t j = 0; j < dim; ++j) m.set(j, j, 1.0);
  return m;
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> d) {
  SymmetricMatrix m(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) m.set(j, j, d[j]);
  return m;
}

std::vector<double> SymmetricMatrix::diag() const {
  std::vector<double> d(dim_);
  for (std::size_t j = 0; j < dim_; ++j) d[j] = (*this)(j, j);
  return d;
}

double SymmetricMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SymmetricMatrix::max_diagonal() const noexcept {
  double m = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) m = std::max(m, (*this)(j, j));
  return m;
}

double SymmetricMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) t += (*this)(j, j);
  return t;
}

double SymmetricMatrix::l1_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

SymmetricMatrix& SymmetricMatrix::operator+=(const SymmetricMatrix& other) {
  if (dim_ != other.dim_) throw DimensionMismatch(dim_, other.dim_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

SymmetricMatrix& SymmetricMatrix::operator-=(const SymmetricMatrix& other) {
  if (dim_ != other.dim_) throw DimensionMismatch(dim_, other.dim_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

SymmetricMatrix& SymmetricMatrix::operator*=(double scale) noexcept {
  for (double& v : values_) v *= scale;
  return *this;
}

SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) { return a += b; }
SymmetricMatrix operator-(SymmetricMatrix a, const SymmetricMatrix& b) { return a -= b; }
SymmetricMatrix operator*(double scale, SymmetricMatrix a) { return a *= scale; }

namespace {

// Returns the index of the failing pivot, or dim on success.
std::size_t factor_in_place(std::size_t p, std::vector<double>& a, double floor) {
  for (std::size_t j = 0; j < p; ++j) {
    double* rj = a.data() + j * p;
    double d = rj[j];
    for (std::size_t i = 0; i < j; ++i) d -= rj[i] * rj[i];
    if (!(d > floor)) return j;
    const double ljj = std::sqrt(d);
    rj[j] = ljj;
    const double inv = 1.0 / ljj;
    for (std::size_t k = j + 1; k < p; ++k) {
      double* rk = a.data() + k * p;
      double s = rk[j];
      for (std::size_t i = 0; i < j; ++i) s -= rk[i] * rj[i];
      rk[j] = s * inv;
    }
  }
  return p;
}

}  // namespace

CholeskyFactor cholesky(const SymmetricMatrix& m) {
  const std::size_t p = m.dim();
  std::vector<double> a(m.values().begin(), m.values().end());
  const std::size_t fail = factor_in_place(p, a, kPivotFloor * m.max_diagonal());
  if (fail != p) throw NotPositiveDefinite(fail);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) a[j * p + k] = 0.0;
  return CholeskyFactor(p, std::move(a));
}

bool is_positive_definite(const SymmetricMatrix& m) {
  std::vector<double> a(m.values().begin(), m.values().end());
  return factor_in_place(m.dim(), a, kPivotFloor * m.max_diagonal()) == m.dim();
}

SymmetricMatrix CholeskyFactor::reconstruct() const {
  const std::size_t p = dim_;
  std::vector<double> out(p * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k <= j; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i <= k; ++i) s += lower_[j * p + i] * lower_[k * p + i];
      out[j * p + k] = s;
      out[k * p + j] = s;
    }
  return SymmetricMatrix::from_row_major(p, out);
}

double log_det(const CholeskyFactor& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.dim(); ++j) s += std::log(f(j, j));
  return 2.0 * s;
}

SymmetricMatrix inverse_psd(const CholeskyFactor& f) {
  const std::size_t p = f.dim();
  // Column-major-by-row storage of L^{-1}: inv[i * p + j] = (L^{-1})_{ij}, lower triangular.
  std::vector<double> inv(p * p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    inv[j * p + j] = 1.0 / f(j, j);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += f(i, k) * inv[k * p + j];
      inv[i * p + j] = -s / f(i, i);
    }
  }
  // M^{-1} = L^{-T} L^{-1}; (j,k) = sum_{i >= max(j,k)} Linv(i,j) Linv(i,k).
  std::vector<double> out(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const double* ri = inv.data() + i * p;
    for (std::size_t j = 0; j <= i; ++j) {
      const double a = ri[j];
      if (a == 0.0) continue;
      double* oj = out.data() + j * p;
      for (std::size_t k = j; k <= i; ++k) oj[k] += a * ri[k];
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) out[k * p + j] = out[j * p + k];
  return SymmetricMatrix::from_row_major(p, out);
}

namespace {

Eigen::MatrixXd to_eigen(const SymmetricMatrix& m) {
  const auto p = static_cast<Eigen::Index>(m.dim());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(m.values().data(),
                                                                                                  p, p);
}

}  // namespace

SpectralDecomposition sym_eigen(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(m), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver did not converge");
  const std::size_t p = m.dim();
  SpectralDecomposition d;
  d.eigenvalues.resize(p);
  d.eigenvectors = Matrix(p);
  for (std::size_t i = 0; i < p; ++i) {
    d.eigenvalues[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < p; ++j)
      d.eigenvectors(j, i) = solver.eigenvectors()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
  }
  return d;
}

std::vector<double> sym_eigenvalues(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(m), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver did not converge");
  const auto& ev = solver.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

SymmetricMatrix SpectralDecomposition::reconstruct() const {
  return spectral_function(*this, [](double l) { return l; });
}

double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

SymmetricMatrix positive_part(const SymmetricMatrix& m) {
  std::vector<double> v(m.values().begin(), m.values().end());
  for (double& x : v) x = std::max(x, 0.0);
  return SymmetricMatrix::from_row_major(m.dim(), v);
}

SymmetricMatrix congruence(std::span<const double> d, const SymmetricMatrix& m) {
  if (d.size() != m.dim()) throw DimensionMismatch(d.size(), m.dim());
  for (double x : d)
    if (!(x > 0.0)) throw NonpositiveScale("congruence scale must be strictly positive");
  const std::size_t p = m.dim();
  std::vector<double> v(p * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k) v[j * p + k] = d[j] * m(j, k) * d[k];
  return SymmetricMatrix::from_row_major(p, v);
}

SymmetricMatrix congruence(const Matrix& p_mat, const SymmetricMatrix& m) {
  if (p_mat.dim() != m.dim()) throw DimensionMismatch(p_mat.dim(), m.dim());
  const Matrix prod = p_mat.transposed() * m.to_matrix() * p_mat;
  const std::size_t p = m.dim();
  std::vector<double> v(p * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      const double avg = 0.5 * (prod(j, k) + prod(k, j));
      v[j * p + k] = avg;
      v[k * p + j] = avg;
    }
  return SymmetricMatrix::from_row_major(p, v);
}

double identity_residual(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  const std::size_t p = a.dim();
  double r = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const auto aj = a.row(j);
    for (std::size_t k = 0; k < p; ++k) {
      const auto bk = b.row(k);  // symmetric: column k of B equals row k
      double s = 0.0;
      for (std::size_t i = 0; i < p; ++i) s += aj[i] * bk[i];
      r = std::max(r, std::abs(s - (j == k ? 1.0 : 0.0)));
    }
  }
  return r;
}

double max_abs_diff(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  double r = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) r = std::max(r, std::abs(av[i] - bv[i]));
  return r;
}

std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    const std::size_t end = comma == std::string::npos ? line.size() : comma;
    std::string field = line.substr(pos, end - pos);
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    if (first == std::string::npos) throw ParseError("empty csv field");
    field = field.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + field + "'");
    }
    if (used != field.size()) throw ParseError("trailing characters in '" + field + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

namespace {

bool next_nonblank_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

SymmetricMatrix read_dense_csv(std::istream& in) {
  std::string line;
  if (!next_nonblank_line(in, line)) throw ParseError("dense-csv: missing dimension line");
  std::size_t p = 0;
  {
    std::istringstream hs(line);
    long long parsed = 0;
    if (!(hs >> parsed) || parsed < 1) throw ParseError("dense-csv: bad dimension line '" + line + "'");
    std::string rest;
    if (hs >> rest) throw ParseError("dense-csv: bad dimension line '" + line + "'");
    p = static_cast<std::size_t>(parsed);
  }
  std::vector<double> flat;
  flat.reserve(p * p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!next_nonblank_line(in, line)) throw ParseError("dense-csv: expected " + std::to_string(p) + " rows");
    const auto row = parse_csv_row(line);
    if (row.size() != p) throw ParseError("dense-csv: row " + std::to_string(j) + " has wrong length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return SymmetricMatrix::from_row_major(p, flat);
}

SymmetricMatrix read_dense_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_dense_csv(in);
}

void write_dense_csv(std::ostream& out, const SymmetricMatrix& m) {
  const auto old = out.precision(17);
  out << m.dim() << '\n';
  for (std::size_t j = 0; j < m.dim(); ++j) {
    for (std::size_t k = 0; k < m.dim(); ++k) {
      if (k) out << ',';
      out << m(j, k);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_dense_csv_file(const std::string& path, const SymmetricMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  write_dense_csv(out, m);
}

}  // namespace mtp2
