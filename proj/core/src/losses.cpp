#include "mtp2/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtp2/errors.hpp"

namespace mtp2 {

namespace {

void require_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
}

}  // namespace

double stein_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star) {
  require_same_dim(theta, theta_star);
  const CholeskyFactor star = cholesky(theta_star);
  const SymmetricMatrix sigma_star = inverse_psd(star);
  const double p = static_cast<double>(theta.dim());
  // log det Sigma* = -log det Theta*.
  return (frobenius_inner(theta, sigma_star) - log_det(cholesky(theta)) + log_det(star)) / p - 1.0;
}

double entropy_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star) {
  return stein_loss(theta_star, theta);
}

double sym_stein_loss(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star) {
  require_same_dim(theta, theta_star);
  const SymmetricMatrix sigma = inverse_psd(cholesky(theta));
  const SymmetricMatrix sigma_star = inverse_psd(cholesky(theta_star));
  const double p = static_cast<double>(theta.dim());
  return frobenius_inner(theta - theta_star, sigma_star - sigma) / (2.0 * p);
}

double sym_stein_from_spectrum(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star) {
  require_same_dim(theta, theta_star);
  cholesky(theta);  // PD precondition
  const SymmetricMatrix sigma_star = inverse_psd(cholesky(theta_star));
  const SpectralDecomposition sd = sym_eigen(sigma_star);
  const SymmetricMatrix root = spectral_function(sd, [](double l) { return std::sqrt(std::max(l, 0.0)); });
  // Sigma*^{1/2} Theta Sigma*^{1/2} is similar to Theta Sigma*.
  const SymmetricMatrix similar = SymmetricMatrix::from_matrix(root.to_matrix() * theta.to_matrix() * root.to_matrix());
  double acc = 0.0;
  for (double l : sym_eigenvalues(similar)) acc += (l - 1.0) * (l - 1.0) / (2.0 * l);
  return acc / static_cast<double>(theta.dim());
}

GammaValue gamma(const SymmetricMatrix& sigma) {
  const std::size_t p = sigma.dim();
  if (p < 2) throw InvalidArgument("gamma needs p >= 2");
  for (std::size_t j = 0; j < p; ++j)
    if (!(sigma(j, j) > 0.0)) throw ZeroVariance(j);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) worst = std::max(worst, sigma(j, k) / std::sqrt(sigma(j, j) * sigma(k, k)));
  // gamma >= 1 by definition, so negative correlations count as zero.
  worst = std::max(worst, 0.0);
  if (worst >= 1.0) return {std::numeric_limits<double>::infinity(), true};
  return {1.0 / (1.0 - worst), false};
}

double spectral_norm_diff(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  require_same_dim(a, b);
  const auto ev = sym_eigenvalues(a - b);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

LossReport loss_report(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star) {
  LossReport r;
  r.stein = stein_loss(theta, theta_star);
  r.entropy = entropy_loss(theta, theta_star);
  r.sym_stein = sym_stein_loss(theta, theta_star);
  const SymmetricMatrix diff = theta - theta_star;
  r.frobenius_sq_per_p = frobenius_inner(diff, diff) / static_cast<double>(theta.dim());
  r.spectral_diff = spectral_norm_diff(theta, theta_star);
  return r;
}

}  // namespace mtp2
