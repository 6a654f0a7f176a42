#include "support_newton.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mtp2::detail {

namespace {

constexpr int kNewtonMaxIter = 200;
constexpr int kActiveSetRounds = 200;
constexpr double kDecrementStop = 1e-24;

struct Coord {
  std::size_t a;
  std::size_t b;
  double c;  // 1/2 on the diagonal, 1 off it
};

std::vector<Coord> coordinates(std::size_t p, const std::vector<Edge>& edges) {
  std::vector<Coord> x;
  x.reserve(p + edges.size());
  for (std::size_t a = 0; a < p; ++a) x.push_back({a, a, 0.5});
  for (const Edge& e : edges) x.push_back({e.j, e.k, 1.0});
  return x;
}

// Theta^{-1} followed by refinement steps whose residual I - Theta Sigma is
// accumulated in extended precision.
SymmetricMatrix refined_inverse(const SymmetricMatrix& theta) {
  const std::size_t p = theta.dim();
  SymmetricMatrix sigma = inverse_psd(cholesky(theta));
  std::vector<double> r(p * p);
  std::vector<double> next(p * p);
  for (int step = 0; step < 2; ++step) {
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        long double acc = a == b ? 1.0L : 0.0L;
        for (std::size_t c = 0; c < p; ++c)
          acc -= static_cast<long double>(theta(a, c)) * static_cast<long double>(sigma(c, b));
        r[a * p + b] = static_cast<double>(acc);
      }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        long double acc = sigma(a, b);
        for (std::size_t c = 0; c < p; ++c)
          acc += static_cast<long double>(sigma(a, c)) * static_cast<long double>(r[c * p + b]);
        next[a * p + b] = static_cast<double>(acc);
      }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a + 1; b < p; ++b)
        next[a * p + b] = next[b * p + a] = 0.5 * (next[a * p + b] + next[b * p + a]);
    sigma = SymmetricMatrix::from_row_major(p, next);
  }
  return sigma;
}

bool edge_less(const Edge& l, const Edge& r) { return l.j != r.j ? l.j < r.j : l.k < r.k; }

// Extended-precision finish. Near-singular inputs give Theta entries of order
// 1e7, where a double Theta and a double Sigma cannot be both stationary and
// mutually inverse to the certificate's tolerance. A few Newton steps in long
// double, with inverses refined against a quad-precision residual, shrink the
// stationarity gap far below what rounding the result back to double costs.
using Ld = long double;
using LdMatrix = Eigen::Matrix<Ld, Eigen::Dynamic, Eigen::Dynamic>;
using LdVector = Eigen::Matrix<Ld, Eigen::Dynamic, 1>;

constexpr int kExtendedMaxIter = 8;

std::optional<LdMatrix> ld_inverse(const LdMatrix& theta) {
  const Eigen::Index p = theta.rows();
  const Eigen::LLT<LdMatrix> llt(theta);
  if (llt.info() != Eigen::Success) return std::nullopt;
  LdMatrix sigma = llt.solve(LdMatrix::Identity(p, p));
  LdMatrix r(p, p);
  for (int step = 0; step < 2; ++step) {
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) {
        __float128 acc = a == b ? 1 : 0;
        for (Eigen::Index c = 0; c < p; ++c)
          acc -= static_cast<__float128>(theta(a, c)) * static_cast<__float128>(sigma(c, b));
        r(a, b) = static_cast<Ld>(acc);
      }
    sigma += sigma * r;
    sigma = (0.5L * (sigma + sigma.transpose())).eval();
  }
  return sigma;
}

struct ExtendedPair {
  SymmetricMatrix theta;
  SymmetricMatrix sigma;
};

std::optional<ExtendedPair> extended_finish(const SymmetricMatrix& s, const std::vector<Edge>& edges,
                                            const SymmetricMatrix& start) {
  const std::size_t p = s.dim();
  const auto pi = static_cast<Eigen::Index>(p);
  const std::vector<Coord> x = coordinates(p, edges);
  const auto m = static_cast<Eigen::Index>(x.size());
  LdMatrix theta = LdMatrix::Zero(pi, pi);
  for (const Coord& c : x) theta(c.a, c.b) = theta(c.b, c.a) = start(c.a, c.b);

  std::optional<LdMatrix> sigma = ld_inverse(theta);
  if (!sigma) return std::nullopt;
  Ld last = std::numeric_limits<Ld>::infinity();
  for (int iter = 0; iter < kExtendedMaxIter; ++iter) {
    LdMatrix h(m, m);
    LdVector g(m);
    const LdMatrix& w = *sigma;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto [a, b, ci] = x[static_cast<std::size_t>(i)];
      g(i) = 2.0L * ci * (static_cast<Ld>(s(a, b)) - w(a, b));
      for (Eigen::Index l = i; l < m; ++l) {
        const auto [c, d, cl] = x[static_cast<std::size_t>(l)];
        h(i, l) = h(l, i) = 2.0L * ci * cl * (w(b, c) * w(a, d) + w(b, d) * w(a, c));
      }
    }
    const Eigen::LLT<LdMatrix> llt(h);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const LdVector dir = llt.solve(-g);
    const Ld decrement = -g.dot(dir);
    if (!std::isfinite(decrement) || decrement < 0) return std::nullopt;
    if (decrement == 0 || decrement > 0.5L * last) break;
    last = decrement;
    LdMatrix next = theta;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Coord& c = x[static_cast<std::size_t>(i)];
      next(c.a, c.b) += dir(i);
      if (c.a != c.b) {
        if (next(c.a, c.b) >= 0) return std::nullopt;
        next(c.b, c.a) = next(c.a, c.b);
      }
    }
    std::optional<LdMatrix> next_sigma = ld_inverse(next);
    if (!next_sigma) return std::nullopt;
    theta = std::move(next);
    sigma = std::move(next_sigma);
  }

  ExtendedPair out{SymmetricMatrix(p), SymmetricMatrix(p)};
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      const auto ai = static_cast<Eigen::Index>(a);
      const auto bi = static_cast<Eigen::Index>(b);
      out.theta.set(a, b, static_cast<double>(theta(ai, bi)));
      out.sigma.set(a, b, static_cast<double>((*sigma)(ai, bi)));
    }
  return out;
}

}  // namespace

std::optional<SupportSolution> newton_on_support(const SymmetricMatrix& s, std::vector<Edge> edges,
                                                 const SymmetricMatrix& start) {
  const std::size_t p = s.dim();

  SymmetricMatrix theta(p);
  for (std::size_t a = 0; a < p; ++a) theta.set(a, a, start(a, a));
  for (const Edge& e : edges) theta.set(e.j, e.k, std::min(0.0, start(e.j, e.k)));
  if (!is_positive_definite(theta)) {
    theta = SymmetricMatrix(p);
    for (std::size_t a = 0; a < p; ++a) theta.set(a, a, 1.0 / s(a, a));
  }

  double last_decrement = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
    if (!is_positive_definite(theta)) return std::nullopt;
    const SymmetricMatrix sigma = refined_inverse(theta);
    const std::vector<Coord> x = coordinates(p, edges);
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd h(m, m);
    Eigen::VectorXd g(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto [a, b, ci] = x[static_cast<std::size_t>(i)];
      g(i) = 2.0 * ci * (s(a, b) - sigma(a, b));
      for (Eigen::Index l = i; l < m; ++l) {
        const auto [c, d, cl] = x[static_cast<std::size_t>(l)];
        h(i, l) = h(l, i) = 2.0 * ci * cl * (sigma(b, c) * sigma(a, d) + sigma(b, d) * sigma(a, c));
      }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    const Eigen::VectorXd dir = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(-g))
                                                             : Eigen::VectorXd(h.ldlt().solve(-g));
    const double decrement = -g.dot(dir);
    if (!std::isfinite(decrement) || decrement < 0.0) return std::nullopt;
    // Stop at the target or once full steps no longer contract the decrement.
    if (decrement <= kDecrementStop || (decrement < 1e-12 && decrement > 0.5 * last_decrement))
      return SupportSolution{theta, sigma, std::move(edges), 0.0};
    last_decrement = decrement;

    // Self-concordance: a step of 1 / (1 + lambda) stays feasible and
    // decreases the objective; for lambda < 1/4 the full step is taken.
    const double lambda = std::sqrt(decrement);
    double t = lambda < 0.25 ? 1.0 : 1.0 / (1.0 + lambda);
    std::optional<std::size_t> blocking;
    for (std::size_t i = p; i < x.size(); ++i) {
      const double di = dir(static_cast<Eigen::Index>(i));
      if (di <= 0.0) continue;
      const double reach = -theta(x[i].a, x[i].b) / di;
      if (reach < t) {
        t = reach;
        blocking = i;
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i)
      theta.set(x[i].a, x[i].b, theta(x[i].a, x[i].b) + t * dir(static_cast<Eigen::Index>(i)));
    if (blocking) {
      const Coord& c = x[*blocking];
      theta.set(c.a, c.b, 0.0);
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(*blocking - p));
      last_decrement = std::numeric_limits<double>::infinity();
    }
  }
  return std::nullopt;
}

std::optional<SupportSolution> polish_on_support(const SymmetricMatrix& s, std::vector<Edge> edges,
                                                 const SymmetricMatrix& start, double kkt_target,
                                                 std::size_t max_dim) {
  const std::size_t p = s.dim();
  SymmetricMatrix warm = start;
  std::vector<char> in(p * p);
  for (int round = 0; round < kActiveSetRounds; ++round) {
    if (p + edges.size() > max_dim) return std::nullopt;
    std::optional<SupportSolution> sol = newton_on_support(s, std::move(edges), warm);
    if (!sol) return std::nullopt;

    std::fill(in.begin(), in.end(), 0);
    for (const Edge& e : sol->edges) in[e.j * p + e.k] = 1;
    double worst = kkt_target;
    std::optional<Edge> enter;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j + 1; k < p; ++k) {
        const double gap = s(j, k) - sol->sigma(j, k);
        if (!in[j * p + k] && gap > worst) {
          worst = gap;
          enter = Edge{j, k};
        }
      }

    if (!enter) {
      if (std::optional<ExtendedPair> ext = extended_finish(s, sol->edges, sol->theta)) {
        sol->theta = std::move(ext->theta);
        sol->sigma = std::move(ext->sigma);
      }
      // Sigma solves the stationarity equations S = Sigma on the support to
      // the gap below; the returned Sigma carries S there exactly.
      double gap = 0.0;
      for (std::size_t a = 0; a < p; ++a) {
        gap = std::max(gap, std::abs(sol->sigma(a, a) - s(a, a)));
        sol->sigma.set(a, a, s(a, a));
      }
      for (const Edge& e : sol->edges) {
        gap = std::max(gap, std::abs(sol->sigma(e.j, e.k) - s(e.j, e.k)));
        sol->sigma.set(e.j, e.k, s(e.j, e.k));
      }
      sol->stationarity = gap;
      if (gap > kkt_target || !is_positive_definite(sol->sigma)) return std::nullopt;
      if (!kkt_residuals(sol->theta, sol->sigma, s).passes(kkt_target)) return std::nullopt;
      return sol;
    }

    edges = std::move(sol->edges);
    edges.push_back(*enter);
    std::sort(edges.begin(), edges.end(), edge_less);
    warm = std::move(sol->theta);
  }
  return std::nullopt;
}

}  // namespace mtp2::detail
