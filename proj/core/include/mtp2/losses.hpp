#pragma once

// Loss functionals between precision matrices. All Stein-family losses are
// normalized by the dimension p.

#include "mtp2/matcore.hpp"

namespace mtp2 {

struct LossReport {
  double stein = 0.0;
  double entropy = 0.0;
  double sym_stein = 0.0;
  double frobenius_sq_per_p = 0.0;
  double spectral_diff = 0.0;
};

/// (1/p)[<Theta, Sigma*> - log det Theta - log det Sigma*] - 1.
double stein_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star);
/// Stein loss with the arguments reversed.
double entropy_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star);
/// (1/2p) <Theta - Theta*, Sigma* - Sigma>.
double sym_stein_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star);
/// (1/p) sum_j (lambda_j - 1)^2 / (2 lambda_j) over the spectrum of Theta Sigma*.
double sym_stein_from_spectrum(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star);

struct GammaValue {
  double value = 1.0;
  /// Set when the maximal correlation reaches 1; value is then +inf.
  bool overflow = false;
};

/// (1 - max_{j!=k} Sigma_jk / sqrt(Sigma_jj Sigma_kk))^{-1}.
GammaValue gamma(const SymmetricMatrix& sigma);

/// Spectral norm of A - B.
double spectral_norm_diff(const SymmetricMatrix& a, const SymmetricMatrix& b);

LossReport loss_report(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star);

}  // namespace mtp2
