#include "mtp2/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_detail.hpp"
#include "mtp2/errors.hpp"

namespace mtp2 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kPatternAttempts = 1000;

}  // namespace

std::size_t model_dim(const ModelSpec& spec) {
  return std::visit(overloaded{[](const DiagonalSpec& s) { return s.d.size(); },
                               [](const EquicorrelationSpec& s) { return s.p; },
                               [](const CaiBlockSpec& s) { return s.p; },
                               [](const RandomLaplacianSpec& s) { return s.p; }},
                    spec);
}

std::string model_kind(const ModelSpec& spec) {
  return std::visit(overloaded{[](const DiagonalSpec&) { return std::string("diagonal"); },
                               [](const EquicorrelationSpec&) { return std::string("equicorrelation"); },
                               [](const CaiBlockSpec&) { return std::string("cai_block"); },
                               [](const RandomLaplacianSpec&) { return std::string("random_laplacian"); }},
                    spec);
}

ModelSpec with_dim(const ModelSpec& spec, std::size_t p) {
  return std::visit(overloaded{[p](DiagonalSpec s) -> ModelSpec {
                                 if (s.d.empty()) s.d = {1.0};
                                 std::vector<double> d(p);
                                 for (std::size_t j = 0; j < p; ++j) d[j] = s.d[j % s.d.size()];
                                 return DiagonalSpec{std::move(d)};
                               },
                               [p](EquicorrelationSpec s) -> ModelSpec {
                                 s.p = p;
                                 return s;
                               },
                               [p](CaiBlockSpec s) -> ModelSpec {
                                 if (!s.b.empty() && s.b.size() != (p + 1) / 2) s.b.clear();
                                 s.p = p;
                                 return s;
                               },
                               [p](RandomLaplacianSpec s) -> ModelSpec {
                                 s.p = p;
                                 return s;
                               }},
                    spec);
}

SymmetricMatrix build_model(const ModelSpec& spec) {
  return std::visit(
      overloaded{[](const DiagonalSpec& s) { return diagonal_model(s.d); },
                 [](const EquicorrelationSpec& s) { return equicorrelation(s.p, s.x); },
                 [](const CaiBlockSpec& s) { return cai_block(s.p, s.k, s.eps, s.b, s.seed); },
                 [](const RandomLaplacianSpec& s) {
                   return random_laplacian_mmatrix(s.p, s.edge_prob, s.weight_lo, s.weight_hi, s.delta, s.seed);
                 }},
      spec);
}

SymmetricMatrix diagonal_model(std::span<const double> d) {
  if (d.empty()) throw InvalidArgument("diagonal model needs at least one entry");
  for (double v : d)
    if (!(v > 0.0)) throw NonpositiveEntry("diagonal model entries must be positive");
  return SymmetricMatrix::diagonal(d);
}

SymmetricMatrix equicorrelation(std::size_t p, double x) {
  if (p < 2) throw InvalidArgument("equicorrelation needs p >= 2");
  const double lo = -1.0 / static_cast<double>(p - 1);
  if (x < lo || x > 1.0) throw OutOfPsdRange("equicorrelation x outside [-1/(p-1), 1]");
  SymmetricMatrix m(p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) m.set(j, k, j == k ? 1.0 : x);
  return m;
}

std::size_t BinaryPattern::row_count(std::size_t r) const {
  return static_cast<std::size_t>(std::count(cells.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                             cells.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols), 1));
}

std::size_t BinaryPattern::col_count(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows; ++r) n += cells[r * cols + c] == 1 ? 1 : 0;
  return n;
}

BinaryPattern cai_pattern(std::size_t rows, std::size_t cols, std::size_t k, Seed seed) {
  if (k < 1 || k > cols) throw InfeasiblePattern("need 1 <= k <= number of columns");
  Rng rng(seed);
  const std::size_t cap = 2 * k;
  BinaryPattern a{rows, cols, std::vector<int>(rows * cols, 0)};
  std::vector<std::size_t> load(cols);
  std::vector<std::size_t> open;
  open.reserve(cols);
  for (int attempt = 0; attempt < kPatternAttempts; ++attempt) {
    std::fill(a.cells.begin(), a.cells.end(), 0);
    std::fill(load.begin(), load.end(), 0);
    bool ok = true;
    for (std::size_t r = 0; r < rows && ok; ++r) {
      open.clear();
      for (std::size_t c = 0; c < cols; ++c)
        if (load[c] < cap) open.push_back(c);
      if (open.size() < k) {
        ok = false;
        break;
      }
      // Partial Fisher-Yates: k distinct columns among those with capacity.
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t pick = i + rng.below(open.size() - i);
        std::swap(open[i], open[pick]);
        a.cells[r * cols + open[i]] = 1;
        ++load[open[i]];
      }
    }
    if (ok) return a;
  }
  throw InfeasiblePattern("no admissible pattern found");
}

SymmetricMatrix cai_block_from_pattern(const BinaryPattern& a, double eps, std::span<const int> b) {
  if (!(eps < 0.0)) throw InvalidEps("eps must be negative");
  if (!b.empty() && b.size() != a.rows) throw DimensionMismatch(b.size(), a.rows);
  std::size_t k = 0;
  for (std::size_t r = 0; r < a.rows; ++r) k = std::max(k, a.row_count(r));
  if (!(2.0 * static_cast<double>(k) * std::abs(eps) < 1.0)) throw InvalidEps("need 2k|eps| < 1");
  const std::size_t p = a.rows + a.cols;
  SymmetricMatrix theta = SymmetricMatrix::identity(p);
  for (std::size_t r = 0; r < a.rows; ++r) {
    if (!b.empty() && b[r] == 0) continue;
    for (std::size_t c = 0; c < a.cols; ++c)
      if (a(r, c) == 1) theta.set(r, a.rows + c, eps);
  }
  return theta;
}

SymmetricMatrix cai_block(std::size_t p, std::size_t k, double eps, std::span<const int> b, Seed seed) {
  if (p < 2) throw InvalidArgument("cai_block needs p >= 2");
  if (!(eps < 0.0)) throw InvalidEps("eps must be negative");
  if (!(2.0 * static_cast<double>(k) * std::abs(eps) < 1.0)) throw InvalidEps("need 2k|eps| < 1");
  const std::size_t rows = (p + 1) / 2;
  const std::size_t cols = p / 2;
  return cai_block_from_pattern(cai_pattern(rows, cols, k, seed), eps, b);
}

NeumannCheck neumann_correlation_bound(const SymmetricMatrix& theta, std::size_t k, double eps) {
  const SymmetricMatrix sigma = inverse_psd(cholesky(theta));
  NeumannCheck c;
  const std::size_t p = sigma.dim();
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = j + 1; l < p; ++l)
      c.max_corr = std::max(c.max_corr, sigma(j, l) / std::sqrt(sigma(j, j) * sigma(l, l)));
  const double t = 2.0 * static_cast<double>(k) * eps;
  c.bound = std::abs(t) / (1.0 - t * t);
  c.holds = c.max_corr <= c.bound + 1e-10;
  return c;
}

SymmetricMatrix random_laplacian_mmatrix(std::size_t p, double edge_prob, double weight_lo, double weight_hi,
                                         double delta, Seed seed) {
  if (p < 1) throw InvalidArgument("random_laplacian needs p >= 1");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw InvalidArgument("edge_prob must lie in [0, 1]");
  if (!(weight_lo > 0.0 && weight_lo <= weight_hi)) throw InvalidArgument("need 0 < weight_lo <= weight_hi");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  Rng rng(seed);
  SymmetricMatrix theta(p);
  std::vector<double> degree(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) {
      if (rng.uniform() >= edge_prob) continue;
      const double w = rng.uniform(weight_lo, weight_hi);
      theta.set(j, k, -w);
      degree[j] += w;
      degree[k] += w;
    }
  for (std::size_t j = 0; j < p; ++j) theta.set(j, j, degree[j] + delta);
  return theta;
}

GammaValue gamma_of_model(const ModelSpec& spec) { return gamma(inverse_psd(cholesky(build_model(spec)))); }

namespace detail {

ModelSpec model_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "diagonal") {
      DiagonalSpec s;
      if (j.contains("d")) s.d = j.at("d").get<std::vector<double>>();
      if (j.contains("p")) {
        const auto p = j.at("p").get<std::size_t>();
        return with_dim(s, p);
      }
      return s;  // empty d: unit diagonal sized by the caller
    }
    if (kind == "equicorrelation") {
      return EquicorrelationSpec{j.value("p", std::size_t{0}), j.at("x").get<double>()};
    }
    if (kind == "cai_block") {
      CaiBlockSpec s;
      s.p = j.value("p", std::size_t{0});
      s.k = j.value("k", std::size_t{1});
      s.eps = j.at("eps").get<double>();
      if (j.contains("b")) s.b = j.at("b").get<std::vector<int>>();
      s.seed = j.value("seed", Seed{0});
      return s;
    }
    if (kind == "random_laplacian") {
      RandomLaplacianSpec s;
      s.p = j.value("p", std::size_t{0});
      s.edge_prob = j.value("edge_prob", s.edge_prob);
      s.weight_lo = j.value("weight_lo", s.weight_lo);
      s.weight_hi = j.value("weight_hi", s.weight_hi);
      s.delta = j.value("delta", s.delta);
      s.seed = j.value("seed", Seed{0});
      return s;
    }
    throw ParseError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model spec: ") + e.what());
  }
}

nlohmann::json model_to_json(const ModelSpec& spec) {
  return std::visit(overloaded{[](const DiagonalSpec& s) {
                                 return nlohmann::json{{"kind", "diagonal"}, {"d", s.d}};
                               },
                               [](const EquicorrelationSpec& s) {
                                 return nlohmann::json{{"kind", "equicorrelation"}, {"p", s.p}, {"x", s.x}};
                               },
                               [](const CaiBlockSpec& s) {
                                 nlohmann::json j{{"kind", "cai_block"}, {"p", s.p}, {"k", s.k}, {"eps", s.eps},
                                                  {"seed", s.seed}};
                                 if (!s.b.empty()) j["b"] = s.b;
                                 return j;
                               },
                               [](const RandomLaplacianSpec& s) {
                                 return nlohmann::json{{"kind", "random_laplacian"}, {"p", s.p},
                                                       {"edge_prob", s.edge_prob}, {"weight_lo", s.weight_lo},
                                                       {"weight_hi", s.weight_hi}, {"delta", s.delta},
                                                       {"seed", s.seed}};
                               }},
                    spec);
}

}  // namespace detail

ModelSpec parse_model_spec(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model spec: ") + e.what());
  }
  return detail::model_from_json(j);
}

std::string model_spec_to_json(const ModelSpec& spec) { return detail::model_to_json(spec).dump(); }

}  // namespace mtp2
