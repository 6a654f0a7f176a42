#include "mtp2/mmle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtp2/sampling.hpp"
#include "support_newton.hpp"

namespace mtp2 {

namespace {

std::string describe(const ExistenceDiagnostic& d) {
  std::ostringstream os;
  os << "estimator does not exist: min diagonal " << d.min_diagonal << ", worst correlation " << d.worst_correlation
     << " at (" << d.worst_j << ", " << d.worst_k << ")";
  return os.str();
}

std::string describe(int sweeps, const KktResiduals& r) {
  std::ostringstream os;
  os << "no convergence after " << sweeps << " sweeps: primal_sign " << r.primal_sign << ", dual_feas "
     << r.dual_feas << ", diag_match " << r.diag_match << ", comp_slack " << r.comp_slack;
  return os.str();
}

}  // namespace

DoesNotExist::DoesNotExist(const ExistenceDiagnostic& d) : Error(describe(d)), diagnostic_(d) {}

NoConvergence::NoConvergence(int sweeps, const KktResiduals& residuals)
    : Error(describe(sweeps, residuals)), sweeps_(sweeps), residuals_(residuals) {}

void SolverConfig::validate() const {
  if (!(kkt_tol > 0.0) || max_sweeps <= 0 || !(inner_tol > 0.0) || inner_max_iter < 0 || polish_after < 0 ||
      polish_every <= 0)
    throw InvalidArgument("solver configuration values must be positive");
}

double KktResiduals::max() const noexcept { return std::max({primal_sign, dual_feas, diag_match, comp_slack}); }

ExistenceDiagnostic check_existence(const SymmetricMatrix& s) {
  const std::size_t p = s.dim();
  ExistenceDiagnostic d;
  d.min_diagonal = s(0, 0);
  for (std::size_t j = 0; j < p; ++j) d.min_diagonal = std::min(d.min_diagonal, s(j, j));
  if (!(d.min_diagonal > 0.0)) {
    d.exists = false;
    for (std::size_t j = 0; j < p; ++j)
      if (!(s(j, j) > 0.0)) {
        d.worst_j = d.worst_k = j;
        break;
      }
    return d;
  }
  d.worst_correlation = p > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) {
      const double c = s(j, k) / std::sqrt(s(j, j) * s(k, k));
      if (c > d.worst_correlation) {
        d.worst_correlation = c;
        d.worst_j = j;
        d.worst_k = k;
      }
    }
  d.exists = d.worst_correlation < 1.0;
  return d;
}

MMatrixCheck is_m_matrix(const SymmetricMatrix& m, double tol_sign, double tol_psd) {
  MMatrixCheck c;
  const std::size_t p = m.dim();
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) c.max_offdiag = std::max(c.max_offdiag, m(j, k));
  c.min_eigenvalue = sym_eigenvalues(m).front();
  c.is_m_matrix = (c.max_offdiag <= tol_sign) && (c.min_eigenvalue >= -tol_psd);
  return c;
}

double kkt_scale(const SymmetricMatrix& s) noexcept { return std::max(1.0, s.max_abs()); }

KktResiduals kkt_residuals(const SymmetricMatrix& theta, const SymmetricMatrix& sigma, const SymmetricMatrix& s) {
  if (theta.dim() != sigma.dim()) throw DimensionMismatch(theta.dim(), sigma.dim());
  if (theta.dim() != s.dim()) throw DimensionMismatch(theta.dim(), s.dim());
  KktResiduals r;
  const std::size_t p = s.dim();
  for (std::size_t j = 0; j < p; ++j) {
    r.diag_match = std::max(r.diag_match, std::abs(sigma(j, j) - s(j, j)));
    for (std::size_t k = 0; k < p; ++k) {
      if (j == k) continue;
      r.primal_sign = std::max(r.primal_sign, theta(j, k));
      r.dual_feas = std::max(r.dual_feas, s(j, k) - sigma(j, k));
      r.comp_slack = std::max(r.comp_slack, std::abs(theta(j, k) * (sigma(j, k) - s(j, k))));
    }
  }
  return r;
}

double primal_objective(const SymmetricMatrix& theta, const SymmetricMatrix& s) {
  return frobenius_inner(theta, s) - log_det(cholesky(theta));
}

namespace {

// Block coordinate ascent on the dual. `w_` holds the Sigma iterate as a full
// symmetric row-major array. Column j of the iterate is the minimizer of
// w^T K w over w >= S_{-j,j}, K = (W_{-j,-j})^{-1}. That program is solved
// through its Lagrange dual
//
//   min_{beta >= 0}  beta^T W_{-j,-j} beta - 2 beta^T S_{-j,j},
//
// whose solution gives w = W_{-j,-j} beta, Theta_{-j,j} = -Theta_jj beta and
// Theta_jj = 1 / (S_jj - w^T beta). beta is supported on the edges of
// column j, so each coordinate pass is cheap and K is never formed.
class DualSolver {
 public:
  DualSolver(const SymmetricMatrix& s, const SolverConfig& config)
      : s_(s),
        p_(s.dim()),
        config_(config),
        inner_max_iter_(config.inner_max_iter > 0 ? config.inner_max_iter : static_cast<int>(10 * p_)),
        scale_(kkt_scale(s)),
        beta_(p_ * p_, 0.0),
        theta_diag_(p_, 0.0),
        v_(p_, 0.0) {}

  EstimateResult run() {
    initialize();
    EstimateResult result;
    std::vector<std::size_t> order(p_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng(config_.order_seed);
    const double change_tol = config_.kkt_tol * (1.0 + s_.max_abs());
    const double kkt_target = config_.kkt_tol * scale_;

    SymmetricMatrix sigma;
    SymmetricMatrix theta;
    std::vector<double> d(p_);
    for (std::size_t j = 0; j < p_; ++j) d[j] = 1.0 / s_(j, j);
    primal_ = SymmetricMatrix::diagonal(d);
    primal_value_ = primal_objective(primal_, s_);
    for (int sweep = 1; sweep <= config_.max_sweeps; ++sweep) {
      if (config_.order == SweepOrder::kRandom) {
        for (std::size_t i = p_ - 1; i > 0; --i) std::swap(order[i], order[order_rng.below(i + 1)]);
      }
      double max_change = 0.0;
      for (std::size_t j : order) max_change = std::max(max_change, update_column(j));

      sigma = SymmetricMatrix::from_row_major(p_, w_);
      const CholeskyFactor chol = cholesky(sigma);
      theta = inverse_psd(chol);
      const double dual = log_det(chol);
      result.dual_objective.push_back(dual);
      result.primal_objective.push_back(advance_primal(theta));
      result.kkt = kkt_residuals(theta, sigma, s_);
      result.sweeps_used = sweep;
      if (max_change <= change_tol && result.kkt.passes(kkt_target)) {
        result.converged = true;
        break;
      }
      if (polish_due(sweep)) {
        if (auto sol = detail::polish_on_support(s_, multiplier_support(), theta, kkt_target, config_.polish_max_dim)) {
          result.kkt = kkt_residuals(sol->theta, sol->sigma, s_);
          result.converged = true;
          result.polished = true;
          result.consistency_residual = identity_residual(sol->theta, sol->sigma);
          result.theta_hat = std::move(sol->theta);
          result.sigma_hat = std::move(sol->sigma);
          return result;
        }
      }
    }
    if (!result.converged) throw NoConvergence(result.sweeps_used, result.kkt);
    result.consistency_residual = assembled_residual(theta);
    result.theta_hat = std::move(theta);
    result.sigma_hat = std::move(sigma);
    return result;
  }

 private:
  // The primal iterate is an M-matrix moved toward W^{-1} (off-diagonals
  // clamped to <= 0) by backtracking, so its objective never increases.
  double advance_primal(const SymmetricMatrix& theta) {
    SymmetricMatrix target = theta;
    for (std::size_t j = 0; j < p_; ++j)
      for (std::size_t k = j + 1; k < p_; ++k)
        if (target(j, k) > 0.0) target.set(j, k, 0.0);
    const SymmetricMatrix step = target - primal_;
    for (double alpha = 1.0; alpha >= 0x1p-12; alpha *= 0.5) {
      const SymmetricMatrix next = primal_ + alpha * step;
      double value = 0.0;
      try {
        value = frobenius_inner(next, s_) - log_det(cholesky(next));
      } catch (const NotPositiveDefinite&) {
        continue;
      }
      if (value <= primal_value_) {
        primal_ = next;
        primal_value_ = value;
        break;
      }
    }
    return primal_value_;
  }

  // Feasible starting point: the positive part S+ (diagonal S_jj) pulled
  // toward the equicorrelation anchor rho sqrt(S_jj S_kk), which is PD
  // whenever rho < 1 and dominates S entrywise off the diagonal.
  void initialize() {
    const ExistenceDiagnostic d = check_existence(s_);
    const double rho = std::max(0.0, d.worst_correlation);
    std::vector<double> plus(p_ * p_);
    std::vector<double> anchor(p_ * p_);
    for (std::size_t j = 0; j < p_; ++j)
      for (std::size_t k = 0; k < p_; ++k) {
        const double sjk = s_(j, k);
        plus[j * p_ + k] = j == k ? sjk : std::max(sjk, 0.0);
        anchor[j * p_ + k] = j == k ? sjk : rho * std::sqrt(s_(j, j) * s_(k, k));
      }
    w_.resize(p_ * p_);
    double weight = 0.0;  // weight on the anchor
    for (int attempt = 0;; ++attempt) {
      for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = (1.0 - weight) * plus[i] + weight * anchor[i];
      // Lower bounds are restored exactly against rounding in the blend.
      for (std::size_t j = 0; j < p_; ++j)
        for (std::size_t k = 0; k < p_; ++k)
          if (j != k) w_[j * p_ + k] = std::max(w_[j * p_ + k], s_(j, k));
      if (is_positive_definite(SymmetricMatrix::from_row_major(p_, w_))) break;
      if (attempt >= 60) throw NotPositiveDefinite(0);
      weight = attempt < 59 ? 1.0 - std::ldexp(1.0, -(attempt + 1)) : 1.0;
    }
    // Warm start: beta_j = max(0, -Theta_{-j,j} / Theta_jj) for Theta = W^{-1}.
    const SymmetricMatrix inv = inverse_psd(cholesky(SymmetricMatrix::from_row_major(p_, w_)));
    for (std::size_t j = 0; j < p_; ++j)
      for (std::size_t k = 0; k < p_; ++k)
        if (k != j) beta_[j * p_ + k] = std::max(0.0, -inv(j, k) / inv(j, j));
  }

  // Recomputes v = W_{-j,-j} beta from scratch.
  void refresh_v(std::size_t j, const double* beta) {
    std::fill(v_.begin(), v_.end(), 0.0);
    for (std::size_t k = 0; k < p_; ++k) {
      const double bk = beta[k];
      if (bk == 0.0) continue;
      const double* wk = w_.data() + k * p_;
      for (std::size_t a = 0; a < p_; ++a) v_[a] += bk * wk[a];
    }
    v_[j] = 0.0;
  }

  // One cyclic pass over `coords`; returns the largest |gradient| step.
  double pass(std::size_t j, double* beta, const std::vector<std::size_t>& coords) {
    double worst = 0.0;
    for (std::size_t k : coords) {
      const double* wk = w_.data() + k * p_;
      const double grad = v_[k] - s_(k, j);
      const double next = std::max(0.0, beta[k] - grad / wk[k]);
      const double delta = next - beta[k];
      if (delta == 0.0) continue;
      beta[k] = next;
      for (std::size_t a = 0; a < p_; ++a) v_[a] += delta * wk[a];
      v_[j] = 0.0;
      worst = std::max(worst, std::abs(delta) * wk[k]);
    }
    return worst;
  }

  // Exact minimization over the support of beta, W_FF beta_F = s_F,
  // truncated so no coordinate leaves the nonnegative orthant.
  void newton_on_support(std::size_t j, double* beta) {
    support_.clear();
    for (std::size_t k = 0; k < p_; ++k)
      if (k != j && beta[k] > 0.0) support_.push_back(k);
    const std::size_t m = support_.size();
    if (m == 0) return;
    wff_.resize(m * m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) wff_[a * m + b] = w_[support_[a] * p_ + support_[b]];
    const SymmetricMatrix wff = SymmetricMatrix::from_row_major(m, wff_);
    if (!is_positive_definite(wff)) return;
    const CholeskyFactor l = cholesky(wff);
    step_.resize(m);
    for (std::size_t a = 0; a < m; ++a) {
      double v = s_(support_[a], j) - v_[support_[a]];
      for (std::size_t b = 0; b < a; ++b) v -= l(a, b) * step_[b];
      step_[a] = v / l(a, a);
    }
    for (std::size_t a = m; a-- > 0;) {
      double v = step_[a];
      for (std::size_t b = a + 1; b < m; ++b) v -= l(b, a) * step_[b];
      step_[a] = v / l(a, a);
    }
    double alpha = 1.0;
    for (std::size_t a = 0; a < m; ++a)
      if (step_[a] < 0.0) alpha = std::min(alpha, -beta[support_[a]] / step_[a]);
    for (std::size_t a = 0; a < m; ++a) {
      const std::size_t k = support_[a];
      beta[k] = std::max(0.0, beta[k] + alpha * step_[a]);
    }
    refresh_v(j, beta);
  }

  // Replaces column j of W by the optimum of its subproblem; returns the
  // largest entry change.
  double update_column(std::size_t j) {
    double* beta = beta_.data() + j * p_;
    refresh_v(j, beta);
    const double tol = config_.inner_tol * (1.0 + s_.max_abs());

    all_.clear();
    for (std::size_t k = 0; k < p_; ++k)
      if (k != j) all_.push_back(k);
    for (int iter = 0; iter < inner_max_iter_; ++iter) {
      if (pass(j, beta, all_) <= tol) break;
      // Settle the current support before the next full pass.
      active_.clear();
      for (std::size_t k : all_)
        if (beta[k] > 0.0) active_.push_back(k);
      newton_on_support(j, beta);
      for (int inner = 0; inner < inner_max_iter_; ++inner)
        if (pass(j, beta, active_) <= tol) break;
    }

    double q = 0.0;
    for (std::size_t k = 0; k < p_; ++k) q += beta[k] * v_[k];
    const double schur = s_(j, j) - q;
    if (!(schur > 0.0)) throw NotPositiveDefinite(j);
    theta_diag_[j] = 1.0 / schur;

    double change = 0.0;
    for (std::size_t a = 0; a < p_; ++a) {
      if (a == j) continue;
      const double next = std::max(v_[a], s_(a, j));
      change = std::max(change, std::abs(w_[a * p_ + j] - next));
      w_[a * p_ + j] = next;
      w_[j * p_ + a] = next;
    }
    return change;
  }

  bool polish_due(int sweep) const {
    return config_.polish_after > 0 && sweep >= config_.polish_after &&
           (sweep - config_.polish_after) % config_.polish_every == 0;
  }

  // Pairs carrying a positive multiplier in either column.
  std::vector<Edge> multiplier_support() const {
    std::vector<Edge> edges;
    for (std::size_t j = 0; j < p_; ++j)
      for (std::size_t k = j + 1; k < p_; ++k)
        if (beta_[j * p_ + k] > 0.0 || beta_[k * p_ + j] > 0.0) edges.push_back({j, k});
    return edges;
  }

  // Largest gap between the column-wise assembled precision
  // (Theta_jj, -Theta_jj beta_j) and the final inverse.
  double assembled_residual(const SymmetricMatrix& theta) const {
    double r = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
      r = std::max(r, std::abs(theta_diag_[j] - theta(j, j)));
      for (std::size_t k = 0; k < p_; ++k)
        if (k != j) r = std::max(r, std::abs(-theta_diag_[j] * beta_[j * p_ + k] - theta(k, j)));
    }
    return r;
  }

  const SymmetricMatrix& s_;
  std::size_t p_;
  SolverConfig config_;
  int inner_max_iter_;
  double scale_;
  std::vector<double> w_;
  std::vector<double> beta_;  // row j holds the multipliers of column j
  std::vector<double> theta_diag_;
  std::vector<double> v_;
  std::vector<std::size_t> all_;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> support_;
  std::vector<double> wff_;
  std::vector<double> step_;
  SymmetricMatrix primal_;
  double primal_value_ = 0.0;
};

}  // namespace

EstimateResult estimate_mle(const SymmetricMatrix& s, const SolverConfig& config) {
  config.validate();
  const ExistenceDiagnostic d = check_existence(s);
  if (!d.exists || d.worst_correlation > 1.0 - kExistenceMargin) throw DoesNotExist(d);

  if (s.dim() == 1) {
    EstimateResult r;
    const double v = s(0, 0);
    r.theta_hat = SymmetricMatrix::identity(1);
    r.theta_hat.set(0, 0, 1.0 / v);
    r.sigma_hat = s;
    r.converged = true;
    r.kkt = kkt_residuals(r.theta_hat, r.sigma_hat, s);
    return r;
  }
  return DualSolver(s, config).run();
}

std::vector<Edge> support_graph(const SymmetricMatrix& theta, double edge_tol) {
  std::vector<Edge> edges;
  for (std::size_t j = 0; j < theta.dim(); ++j)
    for (std::size_t k = j + 1; k < theta.dim(); ++k)
      if (theta(j, k) < -edge_tol) edges.push_back({j, k});
  return edges;
}

EstimateResult attractive_part(const SymmetricMatrix& sigma_star, const SolverConfig& config) {
  return estimate_mle(sigma_star, config);
}

}  // namespace mtp2
