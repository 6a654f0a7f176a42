#include "mtp2/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "json_detail.hpp"
#include "mtp2/errors.hpp"
#include "mtp2/losses.hpp"

namespace mtp2 {

namespace {

using nlohmann::json;

constexpr double kChainSlack = 1e-8;

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::kRate, "rate"},         {ExperimentKind::kDiagAdaptation, "diag_adaptation"},
    {ExperimentKind::kSpectral, "spectral"}, {ExperimentKind::kMisspec, "misspec"},
    {ExperimentKind::kDiagMinimax, "diag_minimax"}, {ExperimentKind::kDeviation, "deviation"},
};

bool solves(ExperimentKind kind) {
  return kind != ExperimentKind::kDiagMinimax && kind != ExperimentKind::kDeviation;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Everything a replication needs that is fixed within a cell.
struct CellContext {
  Cell cell;
  GroundTruth truth;
  SymmetricMatrix attractive;  // misspec only
  std::vector<double> c_values;  // diag_minimax only
  double threshold = 0.0;        // deviation only
};

struct RepOutcome {
  std::vector<double> values;
  bool kkt_passed = true;
};

double lambda_max(const SymmetricMatrix& m) { return sym_eigenvalues(m).back(); }

double min_col_sum(const SymmetricMatrix& m) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.dim(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.dim(); ++j) acc += m(j, k);
    best = std::min(best, acc);
  }
  return best;
}

std::vector<std::string> stat_names(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::kRate:
      return {"sym_stein", "stein", "entropy", "sweeps", "kkt_max"};
    case ExperimentKind::kDiagAdaptation:
      return {"sym_stein", "sym_stein_sqrt_n", "sweeps", "kkt_max"};
    case ExperimentKind::kSpectral:
      return {"lambda_max_sigma_hat", "lambda_max_s", "lambda_max_s_plus", "min_col_sum_s_plus", "chain_holds",
              "sweeps", "kkt_max"};
    case ExperimentKind::kMisspec:
      return {"sym_stein_attractive", "sym_stein_truth", "sweeps", "kkt_max"};
    case ExperimentKind::kDiagMinimax: {
      const std::size_t count = config.c_values.empty() ? 2 : config.c_values.size();
      std::vector<std::string> names;
      for (std::size_t i = 0; i < count; ++i) names.push_back("loss_c" + std::to_string(i));
      return names;
    }
    case ExperimentKind::kDeviation:
      return {"max_deviation", "threshold", "exceeds"};
  }
  return {};
}

RepOutcome replicate(const ExperimentConfig& config, const CellContext& ctx, Seed seed) {
  const auto [n, p] = ctx.cell;
  const DataMatrix x = sample_gaussian(ctx.truth.sigma, n, seed);
  const SymmetricMatrix s = sample_covariance(x);
  RepOutcome out;

  auto solved = [&](const EstimateResult& r) {
    out.kkt_passed = r.converged && r.kkt.passes(config.solver.kkt_tol * kkt_scale(s));
  };

  switch (config.kind) {
    case ExperimentKind::kRate: {
      const EstimateResult r = estimate_mle(s, config.solver);
      solved(r);
      out.values = {sym_stein_loss(r.theta_hat, ctx.truth.theta), stein_loss(r.theta_hat, ctx.truth.theta),
                    entropy_loss(r.theta_hat, ctx.truth.theta), static_cast<double>(r.sweeps_used), r.kkt.max()};
      break;
    }
    case ExperimentKind::kDiagAdaptation: {
      const EstimateResult r = estimate_mle(s, config.solver);
      solved(r);
      const double loss = sym_stein_loss(r.theta_hat, ctx.truth.theta);
      out.values = {loss, loss * std::sqrt(static_cast<double>(n)), static_cast<double>(r.sweeps_used), r.kkt.max()};
      break;
    }
    case ExperimentKind::kSpectral: {
      const EstimateResult r = estimate_mle(s, config.solver);
      solved(r);
      const SymmetricMatrix s_plus = positive_part(s);
      const double l_hat = lambda_max(r.sigma_hat);
      const double l_plus = lambda_max(s_plus);
      const double col = min_col_sum(s_plus);
      const bool chain = l_hat >= l_plus - kChainSlack && l_plus >= col - kChainSlack;
      out.values = {l_hat, lambda_max(s), l_plus, col, chain ? 1.0 : 0.0, static_cast<double>(r.sweeps_used),
                    r.kkt.max()};
      break;
    }
    case ExperimentKind::kMisspec: {
      const EstimateResult r = estimate_mle(s, config.solver);
      solved(r);
      out.values = {sym_stein_loss(r.theta_hat, ctx.attractive), sym_stein_loss(r.theta_hat, ctx.truth.theta),
                    static_cast<double>(r.sweeps_used), r.kkt.max()};
      break;
    }
    case ExperimentKind::kDiagMinimax: {
      // Theta-hat = (c D_S)^{-1}.
      for (double c : ctx.c_values) {
        SymmetricMatrix est(p);
        for (std::size_t j = 0; j < p; ++j) est.set(j, j, 1.0 / (c * s(j, j)));
        out.values.push_back(sym_stein_loss(est, ctx.truth.theta));
      }
      break;
    }
    case ExperimentKind::kDeviation: {
      const double dev = max_deviation(s, ctx.truth.sigma);
      out.values = {dev, ctx.threshold, dev >= ctx.threshold ? 1.0 : 0.0};
      break;
    }
  }
  return out;
}

std::vector<double> default_c_values(const ExperimentConfig& config, std::size_t n) {
  if (!config.c_values.empty()) return config.c_values;
  const double nd = static_cast<double>(n);
  return {1.0, std::sqrt(nd / (nd - 2.0))};
}

CellContext make_context(const ExperimentConfig& config, const Cell& cell) {
  CellContext ctx{cell, ground_truth(config, cell.p), {}, {}, 0.0};
  if (config.kind == ExperimentKind::kMisspec) ctx.attractive = attractive_part(ctx.truth.sigma, config.solver).theta_hat;
  if (config.kind == ExperimentKind::kDiagMinimax) ctx.c_values = default_c_values(config, cell.n);
  if (config.kind == ExperimentKind::kDeviation)
    ctx.threshold = bernstein_bound(static_cast<double>(cell.p), static_cast<double>(cell.n), config.t,
                                    ctx.truth.sigma.max_abs());
  return ctx;
}

void add_extras(const ExperimentConfig& config, const CellContext& ctx, CellSummary& summary) {
  const double n = static_cast<double>(ctx.cell.n);
  const double p = static_cast<double>(ctx.cell.p);
  switch (config.kind) {
    case ExperimentKind::kSpectral: {
      const double alpha = p / n;
      summary.extras.push_back({"geman_limit", (1.0 + std::sqrt(alpha)) * (1.0 + std::sqrt(alpha))});
      break;
    }
    case ExperimentKind::kDiagMinimax:
      for (std::size_t i = 0; i < ctx.c_values.size(); ++i) {
        const std::string tag = std::to_string(i);
        const StatSummary& st = summary.stat("loss_c" + tag);
        summary.extras.push_back({"c" + tag, ctx.c_values[i]});
        summary.extras.push_back({"closed_form_c" + tag, diag_minimax_risk(ctx.c_values[i], n)});
        summary.extras.push_back(
            {"mc_se_c" + tag, summary.successes > 0 ? st.sd / std::sqrt(static_cast<double>(summary.successes)) : 0.0});
      }
      break;
    case ExperimentKind::kDeviation: {
      const double q = std::min(1.0, 2.0 / std::pow(p, config.t - 2.0));
      summary.extras.push_back({"tail_bound", q});
      summary.extras.push_back({"tail_bound_se", std::sqrt(q * (1.0 - q) / static_cast<double>(summary.replications))});
      break;
    }
    default:
      break;
  }
}

StatSummary summarize(std::string name, std::vector<double> v) {
  StatSummary s;
  s.name = std::move(name);
  if (v.empty()) {
    s.mean = s.sd = s.q05 = s.q50 = s.q95 = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double count = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / count;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  s.q05 = quantile(v, 0.05);
  s.q50 = quantile(v, 0.50);
  s.q95 = quantile(v, 0.95);
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

CellSummary run_cell(const ExperimentConfig& config, const std::vector<std::string>& names, const Cell& cell) {
  const auto start = std::chrono::steady_clock::now();
  const CellContext ctx = make_context(config, cell);
  const std::size_t reps = config.replications;
  std::vector<ReplicationRecord> records(reps);
  std::vector<char> kkt(reps, 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      ReplicationRecord& rec = records[r];
      rec.rep = r;
      rec.seed = stream_seed(config.seed, r);
      try {
        RepOutcome out = replicate(config, ctx, rec.seed);
        rec.values = std::move(out.values);
        rec.ok = true;
        kkt[r] = out.kkt_passed ? 1 : 0;
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  };
  unsigned threads = config.threads > 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  CellSummary summary;
  summary.cell = cell;
  summary.replications = reps;
  std::size_t kkt_ok = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    if (records[r].ok) ++summary.successes;
    if (records[r].ok && kkt[r]) ++kkt_ok;
  }
  summary.kkt_pass_rate = static_cast<double>(kkt_ok) / static_cast<double>(reps);
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> v;
    for (const ReplicationRecord& rec : records)
      if (rec.ok) v.push_back(rec.values[i]);
    summary.stats.push_back(summarize(names[i], std::move(v)));
  }
  summary.records = std::move(records);
  add_extras(config, ctx, summary);
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

CheckResult make_check(std::string name, bool passed, bool invariant, std::string detail) {
  return {std::move(name), passed, invariant, std::move(detail)};
}

void add_checks(const ExperimentConfig& config, ExperimentReport& report) {
  std::size_t failures = 0;
  bool kkt_all = true;
  for (const CellSummary& c : report.cells) {
    failures += c.replications - c.successes;
    if (c.kkt_pass_rate < 1.0) kkt_all = false;
  }
  report.checks.push_back(
      make_check("no_failed_replications", failures == 0, true, std::to_string(failures) + " failed replications"));
  if (solves(config.kind))
    report.checks.push_back(make_check("kkt_all_pass", kkt_all, true, "every solve passes the KKT certificate"));

  const std::vector<CellSummary>& cells = report.cells;
  std::ostringstream d;
  switch (config.kind) {
    case ExperimentKind::kRate:
      if (report.fit) {
        const double slope = report.fit->slope;
        d << "slope " << fmt(slope) << " against [-0.65, -0.35]";
        report.checks.push_back(make_check("rate_slope", slope >= -0.65 && slope <= -0.35, false, d.str()));
      }
      break;
    case ExperimentKind::kDiagAdaptation: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      for (const CellSummary& c : cells) {
        const double v = c.stat("sym_stein").q05 * std::sqrt(static_cast<double>(c.cell.n));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      d << "5th percentile loss * sqrt(n) spans [" << fmt(lo) << ", " << fmt(hi) << "]";
      report.checks.push_back(make_check("sqrt_n_floor", lo > 0.0 && hi < 3.0 * lo, false, d.str()));
      break;
    }
    case ExperimentKind::kSpectral: {
      std::size_t broken = 0;
      for (const CellSummary& c : cells)
        for (double v : c.values("chain_holds")) broken += v == 1.0 ? 0 : 1;
      report.checks.push_back(make_check("eigen_chain", broken == 0, true,
                                         std::to_string(broken) + " replications violate the eigenvalue chain"));
      if (cells.size() >= 2) {
        const double first = cells.front().stat("lambda_max_sigma_hat").mean - 1.0;
        const double last = cells.back().stat("lambda_max_sigma_hat").mean - 1.0;
        std::ostringstream g;
        g << "mean lambda_max(Sigma-hat) - 1 grows by " << fmt(last / first);
        report.checks.push_back(make_check("spectral_growth", last >= 1.5 * first, false, g.str()));
      }
      for (const CellSummary& c : cells) {
        const double limit = c.extra("geman_limit");
        const double mean = c.stat("lambda_max_s").mean;
        std::ostringstream g;
        g << "n=" << c.cell.n << ": mean lambda_max(S) " << fmt(mean) << " vs limit " << fmt(limit);
        report.checks.push_back(make_check("geman_n" + std::to_string(c.cell.n), std::abs(mean - limit) <= 0.5,
                                           false, g.str()));
      }
      break;
    }
    case ExperimentKind::kMisspec:
      if (cells.size() >= 2) {
        const double a0 = cells.front().stat("sym_stein_attractive").mean;
        const double a1 = cells.back().stat("sym_stein_attractive").mean;
        const double t0 = cells.front().stat("sym_stein_truth").mean;
        const double t1 = cells.back().stat("sym_stein_truth").mean;
        std::ostringstream a;
        a << "loss against the attractive part shrinks by " << fmt(a0 / a1);
        report.checks.push_back(make_check("attractive_decay", a0 >= 1.5 * a1, false, a.str()));
        std::ostringstream t;
        t << "loss against the truth changes by ratio " << fmt(t1 / t0);
        report.checks.push_back(make_check("truth_plateau", std::abs(t1 / t0 - 1.0) <= 0.25, false, t.str()));
      }
      break;
    case ExperimentKind::kDiagMinimax:
      for (const CellSummary& c : cells) {
        const std::size_t count = report.stat_names.size();
        for (std::size_t i = 0; i < count; ++i) {
          const std::string tag = std::to_string(i);
          const double mean = c.stat("loss_c" + tag).mean;
          const double closed = c.extra("closed_form_c" + tag);
          const double se = c.extra("mc_se_c" + tag);
          std::ostringstream g;
          g << "n=" << c.cell.n << " c=" << fmt(c.extra("c" + tag)) << ": MC " << fmt(mean) << " vs closed form "
            << fmt(closed) << " (se " << fmt(se) << ")";
          report.checks.push_back(make_check("risk_n" + std::to_string(c.cell.n) + "_c" + tag,
                                             std::abs(mean - closed) <= 3.0 * se, false, g.str()));
        }
      }
      break;
    case ExperimentKind::kDeviation:
      for (const CellSummary& c : cells) {
        const double freq = c.stat("exceeds").mean;
        const double bound = c.extra("tail_bound") + 3.0 * c.extra("tail_bound_se");
        std::ostringstream g;
        g << "n=" << c.cell.n << " p=" << c.cell.p << ": exceedance " << fmt(freq) << " vs " << fmt(bound);
        report.checks.push_back(make_check("tail_n" + std::to_string(c.cell.n) + "_p" + std::to_string(c.cell.p),
                                           freq <= bound, false, g.str()));
      }
      break;
  }
}

ExperimentReport run_kind(const ExperimentConfig& config, ExperimentKind expected) {
  if (config.kind != expected) throw InvalidArgument("experiment kind mismatch: config is " + to_string(config.kind));
  return run_experiment(config);
}

SolverConfig solver_from_json(const json& j) {
  SolverConfig s;
  s.kkt_tol = j.value("kkt_tol", s.kkt_tol);
  s.max_sweeps = j.value("max_sweeps", s.max_sweeps);
  s.inner_tol = j.value("inner_tol", s.inner_tol);
  s.inner_max_iter = j.value("inner_max_iter", s.inner_max_iter);
  const std::string order = j.value("order", std::string("forward"));
  if (order == "forward") {
    s.order = SweepOrder::kForward;
  } else if (order == "random") {
    s.order = SweepOrder::kRandom;
  } else {
    throw ParseError("solver order must be 'forward' or 'random'");
  }
  s.order_seed = j.value("order_seed", s.order_seed);
  s.polish_after = j.value("polish_after", s.polish_after);
  s.polish_every = j.value("polish_every", s.polish_every);
  s.polish_max_dim = j.value("polish_max_dim", s.polish_max_dim);
  return s;
}

json solver_to_json(const SolverConfig& s) {
  return json{{"kkt_tol", s.kkt_tol},
              {"max_sweeps", s.max_sweeps},
              {"inner_tol", s.inner_tol},
              {"inner_max_iter", s.inner_max_iter},
              {"order", s.order == SweepOrder::kForward ? "forward" : "random"},
              {"order_seed", s.order_seed},
              {"polish_after", s.polish_after},
              {"polish_every", s.polish_every},
              {"polish_max_dim", s.polish_max_dim}};
}

json json_number(double v) { return std::isfinite(v) ? json(v) : json(fmt(v)); }

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const KindName& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const KindName& k : kKindNames)
    if (name == k.name) return k.kind;
  throw ParseError("unknown experiment kind '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (cells.empty()) throw InvalidArgument("experiment needs at least one cell");
  if (replications < 1) throw InvalidArgument("replications must be >= 1");
  for (const Cell& c : cells) {
    if (c.n < 2) throw InvalidArgument("every cell needs n >= 2");
    if (c.p < 1) throw InvalidArgument("every cell needs p >= 1");
    const std::size_t dim = model_dim(model);
    if (dim > c.p) throw InvalidArgument("model dimension exceeds cell p");
  }
  solver.validate();
  const bool diagonal = std::holds_alternative<DiagonalSpec>(model);
  switch (kind) {
    case ExperimentKind::kDiagAdaptation:
      if (!diagonal) throw InvalidArgument("diag_adaptation needs a diagonal model");
      // Regime c1 p >= sqrt(n) with the unknown constant taken as 1.
      for (const Cell& c : cells)
        if (static_cast<double>(c.p) < std::sqrt(static_cast<double>(c.n)))
          throw InvalidArgument("diag_adaptation needs p >= sqrt(n)");
      break;
    case ExperimentKind::kDiagMinimax:
      if (!diagonal) throw InvalidArgument("diag_minimax needs a diagonal model");
      for (const Cell& c : cells)
        if (c.n <= 2) throw InvalidArgument("diag_minimax needs n > 2");
      for (double c : c_values)
        if (!(c > 0.0)) throw InvalidArgument("c values must be positive");
      break;
    case ExperimentKind::kDeviation:
      if (!(t > 2.0)) throw InvalidT(t);
      break;
    case ExperimentKind::kRate:
      if (cells.size() < 3) throw InvalidArgument("rate experiment needs at least 3 cells for the fit");
      break;
    default:
      break;
  }
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  try {
    ExperimentConfig c;
    if (j.contains("kind")) c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
    if (j.contains("cells")) {
      for (const json& cell : j.at("cells")) c.cells.push_back({cell.at("n").get<std::size_t>(), cell.at("p").get<std::size_t>()});
    } else if (j.contains("n")) {
      const auto ns = j.at("n").get<std::vector<std::size_t>>();
      const bool p_is_n = j.value("p_equals_n", false);
      for (std::size_t i = 0; i < ns.size(); ++i) {
        std::size_t p = 0;
        if (p_is_n) {
          p = ns[i];
        } else if (j.at("p").is_array()) {
          const auto ps = j.at("p").get<std::vector<std::size_t>>();
          if (ps.size() != ns.size()) throw ParseError("'n' and 'p' arrays differ in length");
          p = ps[i];
        } else {
          p = j.at("p").get<std::size_t>();
        }
        c.cells.push_back({ns[i], p});
      }
    }
    if (j.contains("model")) c.model = detail::model_from_json(j.at("model"));
    const std::string side = j.value("model_side", std::string("precision"));
    if (side == "precision") {
      c.side = ModelSide::kPrecision;
    } else if (side == "covariance") {
      c.side = ModelSide::kCovariance;
    } else {
      throw ParseError("model_side must be 'precision' or 'covariance'");
    }
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    c.t = j.value("t", c.t);
    if (j.contains("c_values")) c.c_values = j.at("c_values").get<std::vector<double>>();
    c.threads = j.value("threads", c.threads);
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json cells = json::array();
  for (const Cell& cell : c.cells) cells.push_back({{"n", cell.n}, {"p", cell.p}});
  json j{{"kind", to_string(c.kind)},
         {"cells", cells},
         {"model", detail::model_to_json(c.model)},
         {"model_side", c.side == ModelSide::kPrecision ? "precision" : "covariance"},
         {"replications", c.replications},
         {"seed", c.seed},
         {"solver", solver_to_json(c.solver)},
         {"t", c.t},
         {"c_values", c.c_values},
         {"threads", c.threads}};
  return j.dump();
}

GroundTruth ground_truth(const ExperimentConfig& config, std::size_t p) {
  const std::size_t dim = model_dim(config.model);
  if (dim > p) throw InvalidArgument("model dimension exceeds cell p");
  SymmetricMatrix m = build_model(dim == 0 ? with_dim(config.model, p) : config.model);
  if (m.dim() < p) {
    SymmetricMatrix padded = SymmetricMatrix::identity(p);
    for (std::size_t j = 0; j < m.dim(); ++j)
      for (std::size_t k = j; k < m.dim(); ++k) padded.set(j, k, m(j, k));
    m = std::move(padded);
  }
  SymmetricMatrix other = inverse_psd(cholesky(m));
  if (config.side == ModelSide::kPrecision) return {std::move(other), std::move(m)};
  return {std::move(m), std::move(other)};
}

const StatSummary& CellSummary::stat(std::string_view name) const {
  for (const StatSummary& s : stats)
    if (s.name == name) return s;
  throw InvalidArgument("no statistic named '" + std::string(name) + "'");
}

std::vector<double> CellSummary::values(std::string_view name) const {
  std::size_t index = stats.size();
  for (std::size_t i = 0; i < stats.size(); ++i)
    if (stats[i].name == name) index = i;
  if (index == stats.size()) throw InvalidArgument("no statistic named '" + std::string(name) + "'");
  std::vector<double> v;
  for (const ReplicationRecord& r : records)
    if (r.ok) v.push_back(r.values[index]);
  return v;
}

double CellSummary::extra(std::string_view name) const {
  for (const auto& [key, value] : extras)
    if (key == name) return value;
  throw InvalidArgument("no cell constant named '" + std::string(name) + "'");
}

bool ExperimentReport::invariants_hold() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.invariant || c.passed; });
}

const CheckResult* ExperimentReport::check(std::string_view name) const {
  for (const CheckResult& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& loss) {
  if (n.size() != loss.size()) throw DimensionMismatch(n.size(), loss.size());
  if (n.size() < 3) throw InvalidArgument("a rate fit needs at least 3 points");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(loss[i] > 0.0)) throw InvalidArgument("rate fit needs positive values");
    x.push_back(std::log(n[i]));
    y.push_back(std::log(loss[i]));
  }
  const double m = static_cast<double>(x.size());
  const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("rate fit needs distinct n values");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  f.points = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.rss += r * r;
  }
  return f;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double diag_minimax_risk(double c, double n) {
  if (!(n > 2.0)) throw InvalidArgument("closed-form risk needs n > 2");
  return 0.5 * ((1.0 / c) * n / (n - 2.0) + c - 2.0);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.kind = config.kind;
  report.stat_names = stat_names(config);
  for (const Cell& cell : config.cells) report.cells.push_back(run_cell(config, report.stat_names, cell));

  if (config.kind == ExperimentKind::kRate) {
    std::vector<double> n;
    std::vector<double> loss;
    for (const CellSummary& c : report.cells) {
      n.push_back(static_cast<double>(c.cell.n));
      loss.push_back(c.stat("sym_stein").mean);
    }
    if (std::all_of(loss.begin(), loss.end(), [](double v) { return v > 0.0; })) report.fit = fit_rate(n, loss);
  }
  add_checks(config, report);
  return report;
}

ExperimentReport run_rate_experiment(const ExperimentConfig& c) { return run_kind(c, ExperimentKind::kRate); }
ExperimentReport run_diag_adaptation_experiment(const ExperimentConfig& c) {
  return run_kind(c, ExperimentKind::kDiagAdaptation);
}
ExperimentReport run_spectral_experiment(const ExperimentConfig& c) { return run_kind(c, ExperimentKind::kSpectral); }
ExperimentReport run_misspec_experiment(const ExperimentConfig& c) { return run_kind(c, ExperimentKind::kMisspec); }
ExperimentReport run_diag_minimax_check(const ExperimentConfig& c) { return run_kind(c, ExperimentKind::kDiagMinimax); }
ExperimentReport run_deviation_experiment(const ExperimentConfig& c) { return run_kind(c, ExperimentKind::kDeviation); }

std::string cells_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "n,p,replications,successes,kkt_pass_rate";
  for (const std::string& name : report.stat_names)
    for (const char* field : {"mean", "sd", "q05", "q50", "q95", "min", "max"}) os << ',' << name << '_' << field;
  os << '\n';
  for (const CellSummary& c : report.cells) {
    os << c.cell.n << ',' << c.cell.p << ',' << c.replications << ',' << c.successes << ',' << fmt(c.kkt_pass_rate);
    for (const StatSummary& s : c.stats)
      for (double v : {s.mean, s.sd, s.q05, s.q50, s.q95, s.min, s.max}) os << ',' << fmt(v);
    os << '\n';
  }
  return os.str();
}

std::string replications_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "n,p,rep,seed,ok";
  for (const std::string& name : report.stat_names) os << ',' << name;
  os << '\n';
  for (const CellSummary& c : report.cells)
    for (const ReplicationRecord& r : c.records) {
      os << c.cell.n << ',' << c.cell.p << ',' << r.rep << ',' << r.seed << ',' << (r.ok ? 1 : 0);
      for (std::size_t i = 0; i < report.stat_names.size(); ++i) os << ',' << (r.ok ? fmt(r.values[i]) : "");
      os << '\n';
    }
  return os.str();
}

std::string summary_json(const ExperimentReport& report, const ExperimentConfig& config) {
  json cells = json::array();
  for (const CellSummary& c : report.cells) {
    json stats = json::object();
    for (const StatSummary& s : c.stats)
      stats[s.name] = {{"mean", json_number(s.mean)}, {"sd", json_number(s.sd)}, {"q05", json_number(s.q05)},
                       {"q50", json_number(s.q50)},   {"q95", json_number(s.q95)}, {"min", json_number(s.min)},
                       {"max", json_number(s.max)}};
    json failures = json::array();
    for (const ReplicationRecord& r : c.records)
      if (!r.ok) failures.push_back({{"rep", r.rep}, {"seed", r.seed}, {"error", r.error}});
    json extras = json::object();
    for (const auto& [key, value] : c.extras) extras[key] = json_number(value);
    cells.push_back({{"n", c.cell.n},
                     {"p", c.cell.p},
                     {"replications", c.replications},
                     {"successes", c.successes},
                     {"kkt_pass_rate", c.kkt_pass_rate},
                     {"stats", stats},
                     {"constants", extras},
                     {"failures", failures}});
  }
  json checks = json::array();
  for (const CheckResult& c : report.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"invariant", c.invariant}, {"detail", c.detail}});
  json fit = nullptr;
  if (report.fit)
    fit = {{"slope", report.fit->slope}, {"intercept", report.fit->intercept}, {"rss", report.fit->rss},
           {"points", report.fit->points}};
  json j{{"kind", to_string(report.kind)},
         {"config", json::parse(experiment_config_to_json(config))},
         {"stat_names", report.stat_names},
         {"cells", cells},
         {"rate_fit", fit},
         {"checks", checks},
         {"invariants_hold", report.invariants_hold()}};
  return j.dump(2) + "\n";
}

void write_report(const ExperimentReport& report, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  put("cells.csv", cells_csv(report));
  put("replications.csv", replications_csv(report));
  put("summary.json", summary_json(report, config));
  json timing = json::array();
  for (const CellSummary& c : report.cells)
    timing.push_back({{"n", c.cell.n}, {"p", c.cell.p}, {"wall_seconds", c.wall_seconds}});
  put("timing.json", json{{"cells", timing}}.dump(2) + "\n");
}

}  // namespace mtp2
