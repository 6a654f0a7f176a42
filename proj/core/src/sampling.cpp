#include "mtp2/sampling.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mtp2/errors.hpp"

namespace mtp2 {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(Seed seed) noexcept {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(angle);
  has_cached_ = true;
  return r * std::cos(angle);
}

DataMatrix::DataMatrix(std::size_t n, std::size_t p, std::vector<double> values)
    : n_(n), p_(p), values_(std::move(values)) {
  if (n_ < 1 || p_ < 1) throw InvalidArgument("data matrix needs n >= 1 and p >= 1");
  if (values_.size() != n_ * p_) throw DimensionMismatch(values_.size(), n_ * p_);
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("data entries must be finite");
}

DataMatrix DataMatrix::scaled_columns(std::span<const double> d) const {
  if (d.size() != p_) throw DimensionMismatch(d.size(), p_);
  std::vector<double> v = values_;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < p_; ++j) v[i * p_ + j] *= d[j];
  return DataMatrix(n_, p_, std::move(v));
}

DataMatrix sample_gaussian(const SymmetricMatrix& covariance, std::size_t n, Seed seed) {
  if (n < 1) throw InvalidArgument("sample_gaussian needs n >= 1");
  const CholeskyFactor l = cholesky(covariance);
  const std::size_t p = covariance.dim();
  Rng rng(seed);
  std::vector<double> values(n * p);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& zi : z) zi = rng.normal();
    double* out = values.data() + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += l(j, k) * z[k];
      out[j] = s;
    }
  }
  return DataMatrix(n, p, std::move(values));
}

SymmetricMatrix sample_covariance(const DataMatrix& x) {
  const std::size_t n = x.n();
  const std::size_t p = x.p();
  std::vector<double> s(p * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      const double rj = r[j];
      double* sj = s.data() + j * p;
      for (std::size_t k = j; k < p; ++k) sj[k] += rj * r[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      s[j * p + k] *= inv_n;
      s[k * p + j] = s[j * p + k];
    }
  return SymmetricMatrix::from_row_major(p, s);
}

SymmetricMatrix correlation_matrix(const SymmetricMatrix& s) {
  const std::size_t p = s.dim();
  std::vector<double> inv_sd(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!(s(j, j) > 0.0)) throw ZeroVariance(j);
    inv_sd[j] = 1.0 / std::sqrt(s(j, j));
  }
  std::vector<double> r(p * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k) r[j * p + k] = j == k ? 1.0 : s(j, k) * inv_sd[j] * inv_sd[k];
  return SymmetricMatrix::from_row_major(p, r);
}

double max_deviation(const SymmetricMatrix& s, const SymmetricMatrix& sigma) { return max_abs_diff(s, sigma); }

double bernstein_bound(double p, double n, double t, double sup_entry) {
  if (!(t > 2.0)) throw InvalidT(t);
  if (!(n >= 1.0)) throw InvalidArgument("bernstein_bound needs n >= 1");
  if (!(p >= 1.0)) throw InvalidArgument("bernstein_bound needs p >= 1");
  const double tl = t * std::log(p) / n;
  return 2.0 * sup_entry * (std::sqrt(2.0 * tl) + tl);
}

DataMatrix read_data_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  std::istringstream hs(line);
  long long n = 0;
  long long p = 0;
  if (!(hs >> n >> p) || n < 1 || p < 1) throw ParseError("data csv: bad header '" + line + "'");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * p));
  for (long long i = 0; i < n; ++i) {
    do {
      if (!std::getline(in, line)) throw ParseError("data csv: expected " + std::to_string(n) + " rows");
    } while (line.find_first_not_of(" \t\r") == std::string::npos);
    const auto row = parse_csv_row(line);
    if (row.size() != static_cast<std::size_t>(p)) throw ParseError("data csv: row has wrong length");
    values.insert(values.end(), row.begin(), row.end());
  }
  return DataMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(p), std::move(values));
}

DataMatrix read_data_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_data_csv(in);
}

void write_data_csv(std::ostream& out, const DataMatrix& x) {
  const auto old = out.precision(17);
  out << x.n() << ' ' << x.p() << '\n';
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < x.p(); ++j) {
      if (j) out << ',';
      out << x(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_data_csv_file(const std::string& path, const DataMatrix& x) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  write_data_csv(out, x);
}

}  // namespace mtp2
