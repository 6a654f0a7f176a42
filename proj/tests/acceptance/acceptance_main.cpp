// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass a list of criterion numbers to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "mtp2/errors.hpp"
#include "mtp2/experiments.hpp"
#include "mtp2/losses.hpp"
#include "mtp2/matcore.hpp"
#include "mtp2/mmle.hpp"
#include "mtp2/models.hpp"
#include "mtp2/sampling.hpp"

using mtp2::SymmetricMatrix;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }
  operator std::string() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SymmetricMatrix inverse(const SymmetricMatrix& m) { return mtp2::inverse_psd(mtp2::cholesky(m)); }

// Theta* from generator g (0 diagonal, 1 equicorrelation, 2 cai_block, 3 random Laplacian).
SymmetricMatrix generator_theta(int g, std::size_t p, std::uint64_t seed) {
  oracle::TestRng rng(seed * 7919 + 13);
  switch (g) {
    case 0: {
      std::vector<double> d(p);
      for (double& v : d) v = rng.uniform(0.25, 4.0);
      return mtp2::diagonal_model(d);
    }
    case 1:
      return mtp2::equicorrelation(p, -rng.uniform(0.05, 0.9) / (static_cast<double>(p) - 1.0));
    case 2:
      return mtp2::cai_block(p, 1, -rng.uniform(0.05, 0.45), {}, seed);
    default:
      return mtp2::random_laplacian_mmatrix(p, rng.uniform(0.1, 0.6), 0.1, 1.0, 1.0, seed);
  }
}

const char* generator_name(int g) {
  static const char* names[] = {"diagonal", "equicorrelation", "cai_block", "random_laplacian"};
  return names[g];
}

// Gaussian sample covariance; redraws (counted) when the data fall outside
// the existence region or its refusal margin.
SymmetricMatrix draw_s(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed, int& redraws) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const SymmetricMatrix s = mtp2::sample_covariance(mtp2::sample_gaussian(sigma, n, seed + 1000003 * attempt));
    const auto d = mtp2::check_existence(s);
    if (d.exists && d.worst_correlation <= 1.0 - mtp2::kExistenceMargin) return s;
    ++redraws;
  }
}

// Recomputes the four residuals from the returned pair rather than trusting
// the solver's own report.
mtp2::KktResiduals independent_kkt(const SymmetricMatrix& theta, const SymmetricMatrix& sigma,
                                   const SymmetricMatrix& s) {
  mtp2::KktResiduals r;
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

Outcome criterion_kkt_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t ps[] = {5, 20, 50};
  const std::size_t ns[] = {2, 10, 200};
  int failures = 0, redraws = 0, polished = 0;
  double worst = 0.0;
  std::string first_failure;
  for (int i = 0; i < 200; ++i) {
    const int g = i % 4;
    const std::size_t p = ps[(i / 4) % 3];
    const std::size_t n = ns[(i / 12) % 3];
    const SymmetricMatrix sigma = inverse(generator_theta(g, p, static_cast<std::uint64_t>(i)));
    const SymmetricMatrix s = draw_s(sigma, n, 5000 + static_cast<std::uint64_t>(i), redraws);
    const double target = 1e-7 * mtp2::kkt_scale(s);
    try {
      const auto r = mtp2::estimate_mle(s);
      const auto k = independent_kkt(r.theta_hat, r.sigma_hat, s);
      worst = std::max(worst, k.max() / target);
      polished += r.polished ? 1 : 0;
      if (!r.converged || !k.passes(target)) {
        ++failures;
        if (first_failure.empty()) first_failure = Detail() << " first failure: instance " << i << " " << generator_name(g);
      }
    } catch (const mtp2::Error& e) {
      ++failures;
      if (first_failure.empty()) first_failure = Detail() << " first failure: instance " << i << " " << e.what();
    }
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 120.0,
          Detail() << "200 instances, " << failures << " failures, worst residual/target " << worst << ", "
                   << polished << " Newton-finished, " << redraws << " redraws outside the existence region, " << t
                   << " s (limit 120)" << first_failure};
}

Outcome criterion_unconstrained_agreement() {
  const auto t0 = std::chrono::steady_clock::now();
  int checked = 0, rejected = 0, redraws = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; checked < 50; ++i) {
    const std::size_t p = 2 + i % 7;
    const std::size_t n = p + 20 * (1 + i % 10);
    // Strongly attractive truths, so S^{-1} usually keeps the sign pattern.
    const SymmetricMatrix theta_star =
        i % 2 == 0 ? mtp2::equicorrelation(p, -0.6 / (static_cast<double>(p) - 1.0))
                   : mtp2::random_laplacian_mmatrix(p, 1.0, 0.3, 1.0, 0.5, i);
    const SymmetricMatrix s = draw_s(inverse(theta_star), n, 90000 + i, redraws);
    const SymmetricMatrix s_inv = oracle::inverse(s);
    if (!mtp2::is_m_matrix(s_inv, 0.0, 0.0).is_m_matrix) {
      ++rejected;
      continue;
    }
    ++checked;
    const auto r = mtp2::estimate_mle(s);
    worst = std::max(worst, oracle::max_abs_diff(r.theta_hat, s_inv));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 60.0, Detail() << "50 instances with S^{-1} an M-matrix (" << rejected
                                              << " draws skipped), max |Theta-hat - S^{-1}| = " << worst
                                              << " (limit 1e-6), " << t << " s"};
}

Outcome criterion_small_oracle() {
  double worst = 0.0;
  int count = 0;
  for (std::size_t p : {2u, 3u}) {
    oracle::TestRng rng(300 + p);
    for (int rep = 0; rep < 20; ++rep) {
      const SymmetricMatrix sigma = oracle::random_spd(p, rng, p + 1, 0.2);
      const SymmetricMatrix s = oracle::sample_cov(sigma, 2 + rng.index(8), rng);
      const auto d = mtp2::check_existence(s);
      if (!d.exists || d.worst_correlation > 0.999) {
        --rep;
        continue;
      }
      const auto r = mtp2::estimate_mle(s);
      worst = std::max(worst, oracle::max_abs_diff(r.theta_hat, oracle::projected_gradient_mle(s)));
      ++count;
    }
  }
  return {worst <= 1e-4, Detail() << count << " instances, max entrywise gap to projected gradient " << worst
                                  << " (limit 1e-4)"};
}

Outcome criterion_diagonal_bound() {
  int violations = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const std::size_t p = 2 + i % 49;
    const SymmetricMatrix theta = generator_theta(static_cast<int>(i % 4), p, i);
    if (!mtp2::is_m_matrix(theta, 0.0, 1e-10).is_m_matrix || theta.l1_norm() > 2 * theta.trace() + 1e-9) ++violations;
  }
  double worst_gap = 0.0;
  for (std::size_t p = 2; p <= 50; ++p) {
    const SymmetricMatrix a = mtp2::equicorrelation(p, -1.0 / (static_cast<double>(p) - 1.0));
    worst_gap = std::max(worst_gap, std::abs(a.l1_norm() - 2 * a.trace()));
  }
  return {violations == 0 && worst_gap <= 1e-9, Detail() << "1000 M-matrices, " << violations
                                                         << " violations; tightness gap on the edge family "
                                                         << worst_gap << " (limit 1e-9)"};
}

Outcome criterion_loss_invariance() {
  oracle::TestRng rng(500);
  double nonneg = 0, sym = 0, inv = 0, cong = 0, spec = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 1 + rng.index(50);
    const SymmetricMatrix a = oracle::random_spd(p, rng);
    const SymmetricMatrix b = oracle::random_spd(p, rng);
    const double l = mtp2::sym_stein_loss(a, b);
    nonneg = std::min(nonneg, l);
    sym = std::max(sym, std::abs(mtp2::sym_stein_loss(b, a) - l));
    inv = std::max(inv, std::abs(mtp2::sym_stein_loss(inverse(a), inverse(b)) - l));
    // P = Q diag(c), Q orthogonal from Gram-Schmidt.
    std::vector<std::vector<double>> q(p, std::vector<double>(p));
    for (auto& col : q)
      for (double& v : col) v = rng.normal();
    mtp2::Matrix pm(p);
    for (std::size_t c = 0; c < p; ++c) {
      for (std::size_t e = 0; e < c; ++e) {
        double dot = 0;
        for (std::size_t i = 0; i < p; ++i) dot += q[c][i] * q[e][i];
        for (std::size_t i = 0; i < p; ++i) q[c][i] -= dot * q[e][i];
      }
      double norm = 0;
      for (double v : q[c]) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : q[c]) v /= norm;
      const double scale = rng.uniform(0.5, 2.0);
      for (std::size_t i = 0; i < p; ++i) pm(i, c) = q[c][i] * scale;
    }
    cong = std::max(cong, std::abs(mtp2::sym_stein_loss(mtp2::congruence(pm, a), mtp2::congruence(pm, b)) - l));
    spec = std::max(spec, std::abs(mtp2::sym_stein_from_spectrum(a, b) - l));
  }
  const bool ok = nonneg >= 0.0 && sym <= 1e-10 && inv <= 1e-8 && cong <= 1e-7 && spec <= 1e-8;
  return {ok, Detail() << "200 pairs: min loss " << nonneg << ", symmetry " << sym << ", inversion " << inv
                       << ", congruence " << cong << ", spectrum " << spec};
}

std::string failed_checks(const mtp2::ExperimentReport& r) {
  std::string out;
  for (const auto& c : r.checks) out += Detail() << "; " << (c.passed ? "ok " : "FAILED ") << c.name << ": " << c.detail;
  return out;
}

Outcome criterion_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  mtp2::ExperimentConfig c;
  c.kind = mtp2::ExperimentKind::kRate;
  c.cells = {{25, 200}, {50, 200}, {100, 200}, {200, 200}, {400, 200}};
  c.replications = 20;
  c.seed = 2024;
  const auto r = mtp2::run_experiment(c);
  const double t = seconds_since(t0);
  const auto* slope = r.check("rate_slope");
  const bool ok = slope && slope->passed && r.invariants_hold() &&
                  r.cells.back().stat("sym_stein").mean < r.cells[2].stat("sym_stein").mean && t < 900.0;
  return {ok, Detail() << "slope " << r.fit->slope << " (target [-0.65, -0.35]), " << t << " s (limit 900)"
                       << failed_checks(r)};
}

Outcome criterion_spectral() {
  const auto t0 = std::chrono::steady_clock::now();
  mtp2::ExperimentConfig c;
  c.kind = mtp2::ExperimentKind::kSpectral;
  c.cells = {{100, 100}, {400, 400}};
  c.replications = 20;
  c.seed = 2025;
  const auto r = mtp2::run_experiment(c);
  const double t = seconds_since(t0);
  const double lam = r.cells.back().stat("lambda_max_s").mean;
  bool ok = r.invariants_hold() && lam >= 3.5 && lam <= 4.5 && t < 1200.0;
  for (const char* name : {"eigen_chain", "spectral_growth"}) ok = ok && r.check(name) && r.check(name)->passed;
  return {ok, Detail() << "mean lambda_max(S) at n=400 " << lam << ", " << t << " s (limit 1200)" << failed_checks(r)};
}

Outcome criterion_diag_risk() {
  mtp2::ExperimentConfig c;
  c.kind = mtp2::ExperimentKind::kDiagMinimax;
  c.cells = {{50, 10}};
  c.replications = 10000;
  c.seed = 2026;
  const auto r = mtp2::run_experiment(c);
  bool ok = r.invariants_hold();
  for (const char* name : {"risk_n50_c0", "risk_n50_c1"}) ok = ok && r.check(name) && r.check(name)->passed;
  return {ok, Detail() << "10000 replications" << failed_checks(r)};
}

Outcome criterion_misspec() {
  mtp2::ExperimentConfig c;
  c.kind = mtp2::ExperimentKind::kMisspec;
  c.side = mtp2::ModelSide::kCovariance;
  c.model = mtp2::EquicorrelationSpec{2, -0.5};  // padded with I_2
  c.cells = {{100, 4}, {400, 4}};
  c.replications = 200;
  c.seed = 2027;
  const auto r = mtp2::run_experiment(c);
  const double attractive_gap =
      mtp2::max_abs_diff(mtp2::attractive_part(mtp2::ground_truth(c, 4).sigma).theta_hat, SymmetricMatrix::identity(4));
  bool ok = r.invariants_hold() && attractive_gap <= 1e-8;
  for (const char* name : {"attractive_decay", "truth_plateau"}) ok = ok && r.check(name) && r.check(name)->passed;
  return {ok, Detail() << "Sigma* = [[1,-1/2],[-1/2,1]] (+) I_2, projection gap to I " << attractive_gap
                       << failed_checks(r)};
}

Outcome criterion_deviation() {
  mtp2::ExperimentConfig c;
  c.kind = mtp2::ExperimentKind::kDeviation;
  c.cells = {{400, 50}};
  c.replications = 500;
  c.t = 4;
  c.seed = 2028;
  const auto r = mtp2::run_experiment(c);
  const auto* check = r.check("tail_n400_p50");
  return {r.invariants_hold() && check && check->passed, Detail() << "500 replications" << failed_checks(r)};
}

Outcome criterion_existence() {
  bool ok = true;
  std::string detail;
  // Duplicated column.
  SymmetricMatrix s = mtp2::sample_covariance(mtp2::sample_gaussian(SymmetricMatrix::identity(6), 20, 1));
  std::vector<double> v(s.values().begin(), s.values().end());
  for (std::size_t k = 0; k < 6; ++k) v[5 * 6 + k] = v[k * 6 + 5] = v[0 * 6 + k];
  v[5 * 6 + 5] = v[0];
  v[5 * 6 + 0] = v[0 * 6 + 5] = v[0];
  const SymmetricMatrix dup = SymmetricMatrix::from_row_major(6, v);
  try {
    mtp2::estimate_mle(dup);
    ok = false;
    detail += "duplicated column accepted; ";
  } catch (const mtp2::DoesNotExist&) {
    detail += "duplicated column -> DoesNotExist; ";
  }
  SymmetricMatrix zero = SymmetricMatrix::identity(4);
  zero.set(2, 2, 0.0);
  try {
    mtp2::estimate_mle(zero);
    ok = false;
    detail += "zero variance accepted; ";
  } catch (const mtp2::DoesNotExist&) {
    detail += "zero variance -> DoesNotExist; ";
  }
  int redraws = 0;
  const SymmetricMatrix s2 = draw_s(SymmetricMatrix::identity(100), 2, 11, redraws);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto r = mtp2::estimate_mle(s2);
    const auto k = independent_kkt(r.theta_hat, r.sigma_hat, s2);
    bool finite = true;
    for (double x : r.theta_hat.values()) finite = finite && std::isfinite(x);
    const bool cert = r.converged && finite && k.passes(1e-7 * mtp2::kkt_scale(s2));
    ok = ok && cert;
    detail += Detail() << "n=2 p=100: converged " << r.converged << ", kkt max " << k.max() << ", max |Theta| "
                       << r.theta_hat.max_abs() << ", " << r.sweeps_used << " sweeps, " << seconds_since(t0) << " s, "
                       << redraws << " redraws";
  } catch (const mtp2::Error& e) {
    ok = false;
    detail += Detail() << "n=2 p=100 failed: " << e.what();
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"kkt_certificate_suite", criterion_kkt_suite},
      {"unconstrained_agreement", criterion_unconstrained_agreement},
      {"small_instance_oracle", criterion_small_oracle},
      {"l1_trace_bound", criterion_diagonal_bound},
      {"loss_invariance", criterion_loss_invariance},
      {"rate_slope", criterion_rate},
      {"spectral_inflation", criterion_spectral},
      {"diagonal_risk_closed_form", criterion_diag_risk},
      {"misspecification_target", criterion_misspec},
      {"deviation_tail", criterion_deviation},
      {"existence_edge_cases", criterion_existence},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, Detail() << "threw: " << e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
