#pragma once

// Maximum-likelihood precision estimation over symmetric M-matrices.
//
// The estimator minimizes <Theta, S> - log det Theta subject to
// Theta_jk <= 0 for j != k. It is computed through the dual program
//
//   maximize log det Sigma   s.t.  Sigma_jj = S_jj,  Sigma_jk >= S_jk (j != k)
//
// by block coordinate ascent over the columns of Sigma. Each column update is
// a bound-constrained quadratic program, min w^T K w s.t. w >= s, solved
// through its Lagrange dual in the multipliers. When the sweeps stall, the
// support they have identified is handed to a Newton solve of the primal
// restricted to that support, whose answer is kept only if it certifies.
// Convergence is declared only once the KKT certificate of the returned pair
// (Theta, Sigma) passes.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mtp2/errors.hpp"
#include "mtp2/matcore.hpp"

namespace mtp2 {

struct MMatrixCheck {
  bool is_m_matrix = false;
  double max_offdiag = -std::numeric_limits<double>::infinity();
  double min_eigenvalue = 0.0;
};

struct ExistenceDiagnostic {
  bool exists = false;
  std::size_t worst_j = 0;
  std::size_t worst_k = 0;
  double worst_correlation = 0.0;
  double min_diagonal = 0.0;
};

enum class SweepOrder { kForward, kRandom };

struct SolverConfig {
  double kkt_tol = 1e-7;
  int max_sweeps = 500;
  double inner_tol = 1e-10;
  /// 0 selects 10 * p.
  int inner_max_iter = 0;
  SweepOrder order = SweepOrder::kForward;
  std::uint64_t order_seed = 0;
  /// First sweep after which a support-restricted Newton finish is tried,
  /// repeated every `polish_every` sweeps; 0 disables it.
  int polish_after = 20;
  int polish_every = 20;
  /// Largest p + |edges| for which the finish is attempted.
  std::size_t polish_max_dim = 1500;

  void validate() const;
};

struct KktResiduals {
  double primal_sign = 0.0;  // max(0, max_{j!=k} Theta_jk)
  double dual_feas = 0.0;    // max(0, max_{j!=k} S_jk - Sigma_jk)
  double diag_match = 0.0;   // max_j |Sigma_jj - S_jj|
  double comp_slack = 0.0;   // max_{j!=k} |Theta_jk (Sigma_jk - S_jk)|

  double max() const noexcept;
  bool passes(double tol) const noexcept { return max() <= tol; }
};

struct EstimateResult {
  SymmetricMatrix theta_hat;
  SymmetricMatrix sigma_hat;
  int sweeps_used = 0;
  bool converged = false;
  KktResiduals kkt;
  /// True when the support-restricted Newton finish produced the answer.
  bool polished = false;
  /// max |Theta_incremental - inverse(Sigma)| at termination; after a Newton
  /// finish, max |Theta Sigma - I| instead.
  double consistency_residual = 0.0;
  /// Dual objective log det Sigma after each sweep.
  std::vector<double> dual_objective;
  /// Primal objective <Theta, S> - log det Theta after each sweep, evaluated on
  /// an M-matrix iterate moved toward Sigma^{-1} by a non-increasing line search.
  std::vector<double> primal_objective;
};

class DoesNotExist : public Error {
 public:
  explicit DoesNotExist(const ExistenceDiagnostic& d);
  const ExistenceDiagnostic& diagnostic() const noexcept { return diagnostic_; }

 private:
  ExistenceDiagnostic diagnostic_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int sweeps, const KktResiduals& residuals);
  int sweeps() const noexcept { return sweeps_; }
  const KktResiduals& residuals() const noexcept { return residuals_; }

 private:
  int sweeps_;
  KktResiduals residuals_;
};

/// Inputs with a sample correlation above this are refused as ill-posed.
inline constexpr double kExistenceMargin = 1e-8;

ExistenceDiagnostic check_existence(const SymmetricMatrix& s);

MMatrixCheck is_m_matrix(const SymmetricMatrix& m, double tol_sign, double tol_psd);

/// KKT tolerance scale max(1, max|S|).
double kkt_scale(const SymmetricMatrix& s) noexcept;

KktResiduals kkt_residuals(const SymmetricMatrix& theta, const SymmetricMatrix& sigma, const SymmetricMatrix& s);

/// <Theta, S> - log det Theta; throws NotPositiveDefinite if Theta is not PD.
double primal_objective(const SymmetricMatrix& theta, const SymmetricMatrix& s);

/// Throws DoesNotExist or NoConvergence.
EstimateResult estimate_mle(const SymmetricMatrix& s, const SolverConfig& config = {});

struct Edge {
  std::size_t j;
  std::size_t k;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Pairs j < k with theta_jk < -edge_tol, lexicographically sorted.
std::vector<Edge> support_graph(const SymmetricMatrix& theta, double edge_tol);

/// Projection of a population covariance onto the M-matrix precision cone.
EstimateResult attractive_part(const SymmetricMatrix& sigma_star, const SolverConfig& config = {});

}  // namespace mtp2
