// mtp2 command-line driver.
//
// Exit codes: 0 success, 1 library or I/O error, 2 estimator does not
// exist, 3 an experiment invariant failed.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "mtp2/errors.hpp"
#include "mtp2/experiments.hpp"
#include "mtp2/losses.hpp"
#include "mtp2/matcore.hpp"
#include "mtp2/mmle.hpp"
#include "mtp2/models.hpp"
#include "mtp2/sampling.hpp"

namespace {

using nlohmann::json;

constexpr int kExitError = 1;
constexpr int kExitDoesNotExist = 2;
constexpr int kExitInvariant = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mtp2::Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw mtp2::Error("cannot write " + out);
  f << text;
}

json row_major(const mtp2::SymmetricMatrix& m) {
  return json(std::vector<double>(m.values().begin(), m.values().end()));
}

json kkt_json(const mtp2::KktResiduals& r) {
  return {{"primal_sign", r.primal_sign}, {"dual_feas", r.dual_feas}, {"diag_match", r.diag_match},
          {"comp_slack", r.comp_slack}};
}

struct EstimateArgs {
  std::string input;
  std::string out;
  double kkt_tol = 1e-7;
  int max_sweeps = 500;
  std::string order = "forward";
  std::uint64_t order_seed = 0;
  double edge_tol = -1.0;
};

int run_estimate(const EstimateArgs& a) {
  const mtp2::SymmetricMatrix s = mtp2::read_dense_csv_file(a.input);
  mtp2::SolverConfig config;
  config.kkt_tol = a.kkt_tol;
  config.max_sweeps = a.max_sweeps;
  config.order = a.order == "random" ? mtp2::SweepOrder::kRandom : mtp2::SweepOrder::kForward;
  config.order_seed = a.order_seed;
  const mtp2::EstimateResult r = mtp2::estimate_mle(s, config);
  const double edge_tol = a.edge_tol >= 0.0 ? a.edge_tol : a.kkt_tol * mtp2::kkt_scale(s);
  json edges = json::array();
  for (const mtp2::Edge& e : mtp2::support_graph(r.theta_hat, edge_tol)) edges.push_back({e.j, e.k});
  const json j{{"p", s.dim()},
               {"theta_hat", row_major(r.theta_hat)},
               {"sigma_hat", row_major(r.sigma_hat)},
               {"kkt", kkt_json(r.kkt)},
               {"sweeps_used", r.sweeps_used},
               {"converged", r.converged},
               {"polished", r.polished},
               {"consistency_residual", r.consistency_residual},
               {"support_graph", edges}};
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

int run_loss(const std::string& theta, const std::string& theta_star) {
  const mtp2::LossReport r =
      mtp2::loss_report(mtp2::read_dense_csv_file(theta), mtp2::read_dense_csv_file(theta_star));
  const json j{{"stein", r.stein},
               {"entropy", r.entropy},
               {"sym_stein", r.sym_stein},
               {"frobenius_sq_per_p", r.frobenius_sq_per_p},
               {"spectral_diff", r.spectral_diff}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_model(const std::string& spec, std::size_t p, const std::string& out) {
  mtp2::ModelSpec m = mtp2::parse_model_spec(spec);
  if (p > 0) m = mtp2::with_dim(m, p);
  std::ostringstream os;
  mtp2::write_dense_csv(os, mtp2::build_model(m));
  emit(out, os.str());
  return 0;
}

struct SampleArgs {
  std::string spec;
  std::string side = "precision";
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  mtp2::ExperimentConfig c;
  c.model = mtp2::parse_model_spec(a.spec);
  c.side = a.side == "covariance" ? mtp2::ModelSide::kCovariance : mtp2::ModelSide::kPrecision;
  const std::size_t p = a.p > 0 ? a.p : mtp2::model_dim(c.model);
  if (p == 0) throw mtp2::InvalidArgument("sample needs --p for a model without a dimension");
  const mtp2::GroundTruth truth = mtp2::ground_truth(c, p);
  std::ostringstream os;
  mtp2::write_data_csv(os, mtp2::sample_gaussian(truth.sigma, a.n, a.seed));
  emit(a.out, os.str());
  return 0;
}

int run_covariance(const std::string& data, const std::string& out) {
  std::ostringstream os;
  mtp2::write_dense_csv(os, mtp2::sample_covariance(mtp2::read_data_csv_file(data)));
  emit(out, os.str());
  return 0;
}

struct ExperimentArgs {
  std::string kind;
  std::string config;
  bool has_seed = false;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "out";
};

int run_experiment_cmd(const ExperimentArgs& a) {
  mtp2::ExperimentConfig c = mtp2::parse_experiment_config(a.config.empty() ? "{}" : slurp(a.config));
  if (!a.kind.empty()) c.kind = mtp2::parse_experiment_kind(a.kind);
  if (a.has_seed) c.seed = a.seed;
  if (a.threads > 0) c.threads = a.threads;
  const mtp2::ExperimentReport r = mtp2::run_experiment(c);
  mtp2::write_report(r, c, a.out);
  for (const mtp2::CheckResult& check : r.checks)
    std::cout << (check.passed ? "PASS " : "FAIL ") << (check.invariant ? "[invariant] " : "[expectation] ")
              << check.name << ": " << check.detail << "\n";
  return r.invariants_hold() ? 0 : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-matrix constrained Gaussian precision estimation"};
  app.require_subcommand(1);

  EstimateArgs est;
  CLI::App* estimate = app.add_subcommand("estimate", "Estimate Theta-hat from a dense covariance CSV");
  estimate->add_option("--input", est.input, "Sample covariance (dense CSV)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--out", est.out, "Result JSON path (stdout when omitted)");
  estimate->add_option("--kkt-tol", est.kkt_tol, "KKT tolerance")->capture_default_str();
  estimate->add_option("--max-sweeps", est.max_sweeps, "Sweep budget")->capture_default_str();
  estimate->add_option("--order", est.order, "Sweep order")->check(CLI::IsMember({"forward", "random"}));
  estimate->add_option("--order-seed", est.order_seed, "Seed for the random sweep order");
  estimate->add_option("--edge-tol", est.edge_tol, "Support threshold (default kkt-tol * max(1, max|S|))");

  std::string theta;
  std::string theta_star;
  CLI::App* loss = app.add_subcommand("loss", "Loss report between two precision matrices");
  loss->add_option("--theta", theta, "Estimate (dense CSV)")->required()->check(CLI::ExistingFile);
  loss->add_option("--theta-star", theta_star, "Reference (dense CSV)")->required()->check(CLI::ExistingFile);

  std::string spec;
  std::size_t model_p = 0;
  std::string model_out;
  CLI::App* model = app.add_subcommand("model", "Build a ground-truth matrix from a JSON model spec");
  model->add_option("--spec", spec, "Model spec JSON")->required();
  model->add_option("--p", model_p, "Override the dimension");
  model->add_option("--out", model_out, "Dense CSV path (stdout when omitted)");

  SampleArgs smp;
  CLI::App* sample = app.add_subcommand("sample", "Draw Gaussian data for a model");
  sample->add_option("--spec", smp.spec, "Model spec JSON")->required();
  sample->add_option("--side", smp.side, "Whether the spec is a precision or covariance")
      ->check(CLI::IsMember({"precision", "covariance"}));
  sample->add_option("--n", smp.n, "Observations")->required()->check(CLI::PositiveNumber);
  sample->add_option("--p", smp.p, "Dimension (pads with identity)");
  sample->add_option("--seed", smp.seed, "Seed");
  sample->add_option("--out", smp.out, "Data CSV path (stdout when omitted)");

  std::string data;
  std::string cov_out;
  CLI::App* covariance = app.add_subcommand("covariance", "Uncentered sample covariance of a data CSV");
  covariance->add_option("--data", data, "Data CSV with an 'n p' header")->required()->check(CLI::ExistingFile);
  covariance->add_option("--out", cov_out, "Dense CSV path (stdout when omitted)");

  ExperimentArgs exp;
  CLI::App* experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  experiment->add_option("kind", exp.kind, "rate|diag_adaptation|spectral|misspec|diag_minimax|deviation");
  experiment->add_option("--config", exp.config, "Experiment config JSON")->check(CLI::ExistingFile);
  CLI::Option* seed_opt = experiment->add_option("--seed", exp.seed, "Base seed (overrides the config)");
  experiment->add_option("--threads", exp.threads, "Worker threads per cell");
  experiment->add_option("--out", exp.out, "Report directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) return run_estimate(est);
    if (*loss) return run_loss(theta, theta_star);
    if (*model) return run_model(spec, model_p, model_out);
    if (*sample) return run_sample(smp);
    if (*covariance) return run_covariance(data, cov_out);
    if (*experiment) {
      exp.has_seed = seed_opt->count() > 0;
      return run_experiment_cmd(exp);
    }
  } catch (const mtp2::DoesNotExist& e) {
    std::fprintf(stderr, "mtp2: %s\n", e.what());
    return kExitDoesNotExist;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mtp2: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
