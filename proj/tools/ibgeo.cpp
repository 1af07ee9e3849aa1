#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "ibgeo/encoder_lab.hpp"
#include "ibgeo/ib_exact.hpp"
#include "ibgeo/io.hpp"
#include "ibgeo/manifold.hpp"
#include "ibgeo/maxent_chain.hpp"
#include "ibgeo/sigreg.hpp"
#include "ibgeo/tasks.hpp"

// Exit codes: 0 success, 1 numerical failure (non-convergence, divergence,
// sigreg rejection), 2 configuration error.

namespace {

using nlohmann::json;

/// Values from --config fill any option the command line left unset.
void apply_config(CLI::App* sub, const std::string& path) {
  const json cfg = json::parse(ibgeo::read_file(path));
  for (auto& [key, value] : cfg.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw std::invalid_argument("config field '" + key +
                                  "' is not an option of this subcommand");
    if (opt->count() > 0) continue;  // explicit flags win
    std::stringstream ss;
    if (value.is_string())
      ss << value.get<std::string>();
    else
      ss << value;
    opt->add_result(ss.str());
    opt->run_callback();
  }
}

void emit(const std::optional<std::string>& path, const std::string& body) {
  if (path)
    ibgeo::write_file_atomic(*path, body);
  else
    std::cout << body;
}

std::string summary_line(const ibgeo::OperatingPoint& p) {
  std::ostringstream os;
  os.precision(12);
  os << "beta=" << p.beta << " rate=" << p.rate << " delta=" << p.delta
     << " epsilon=" << p.epsilon << " converged=" << p.converged
     << " iters=" << p.iters;
  return os.str();
}

json point_json(const ibgeo::OperatingPoint& p) {
  json j;
  j["beta"] = p.beta;
  j["rate"] = p.rate;
  j["delta"] = p.delta;
  j["epsilon"] = p.epsilon;
  j["converged"] = p.converged;
  j["iters"] = p.iters;
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["encoder"] = matrix(p.encoder);
  j["decoder"] = matrix(p.decoder);
  json marg = json::array();
  for (Eigen::Index w = 0; w < p.marginal.size(); ++w)
    marg.push_back(p.marginal(w));
  j["marginal"] = marg;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ibgeo: exact information-bottleneck solving, predictive "
               "manifold profiling, and minibatch encoder training"};
  app.require_subcommand(1);

  std::string config_path;

  // --- solve ---------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "Blahut-Arimoto at one beta");
  std::string s_task = "binary";
  double s_beta = 25.0;
  double s_tol = 1e-10;
  int s_iters = 100000;
  std::uint64_t s_seed = 7;
  std::optional<int> s_latent;
  std::optional<std::string> s_json, s_csv;
  solve->add_option("--task", s_task, "task name");
  solve->add_option("--beta", s_beta, "trade-off multiplier");
  solve->add_option("--tol", s_tol, "encoder max-norm tolerance");
  solve->add_option("--max-iters", s_iters, "iteration cap");
  solve->add_option("--seed", s_seed, "init noise seed");
  solve->add_option("--latent", s_latent, "latent alphabet size");
  solve->add_option("--out-json", s_json, "JSON output path");
  solve->add_option("--out-csv", s_csv, "CSV output path");
  solve->add_option("--config", config_path, "JSON config file");

  // --- curve ---------------------------------------------------------
  auto* curve = app.add_subcommand("curve", "trace the IB curve");
  std::string c_task = "binary";
  std::vector<double> c_betas{0.5, 5, 10, 25, 50, 100, 250};
  std::uint64_t c_seed = 7;
  std::optional<std::string> c_csv, c_json;
  curve->add_option("--task", c_task, "task name");
  curve->add_option("--betas", c_betas, "strictly increasing beta grid")
      ->delimiter(',');
  curve->add_option("--seed", c_seed, "init noise seed");
  curve->add_option("--out-csv", c_csv, "CSV output path");
  curve->add_option("--out-json", c_json, "JSON output path");
  curve->add_option("--config", config_path, "JSON config file");

  // --- mss -----------------------------------------------------------
  auto* mss = app.add_subcommand("mss", "minimal sufficient statistic");
  std::string m_task = "binary";
  double m_tau = 1e-9;
  std::optional<std::string> m_json;
  mss->add_option("--task", m_task, "task name");
  mss->add_option("--tau", m_tau, "merge tolerance (total variation)");
  mss->add_option("--out-json", m_json, "JSON output path");
  mss->add_option("--config", config_path, "JSON config file");

  // --- effdim --------------------------------------------------------
  auto* effdim = app.add_subcommand("effdim", "covering-number dimension");
  std::string e_task = "continuous_loop";
  int e_samples = 4096;
  int e_scales = 14;
  double e_decades = 2.2;
  std::optional<std::string> e_csv, e_json;
  effdim->add_option("--task", e_task, "task name");
  effdim->add_option("--samples", e_samples, "manifold sample count");
  effdim->add_option("--scales", e_scales, "number of scales");
  effdim->add_option("--decades", e_decades, "scale span in decades");
  effdim->add_option("--out-csv", e_csv, "CSV output path");
  effdim->add_option("--out-json", e_json, "JSON summary path");
  effdim->add_option("--config", config_path, "JSON config file");

  // --- chain ---------------------------------------------------------
  auto* chain = app.add_subcommand("chain", "Dirichlet-Gaussian chain");
  int ch_k = 3;
  int ch_n = 1000;
  std::uint64_t ch_seed = 5;
  std::optional<std::string> ch_csv;
  chain->add_option("--k", ch_k, "simplex dimension K");
  chain->add_option("--n", ch_n, "sample count");
  chain->add_option("--seed", ch_seed, "sampler seed");
  chain->add_option("--out-csv", ch_csv, "CSV output path");
  chain->add_option("--config", config_path, "JSON config file");

  // --- sigreg-test ---------------------------------------------------
  auto* sig = app.add_subcommand("sigreg-test",
                                 "score a Gaussian batch against the null");
  int g_n = 4096;
  int g_dim = 20;
  int g_m = 64;
  int g_reps = 200;
  std::uint64_t g_seed = 123;
  double g_scale = 1.0;
  sig->add_option("--n", g_n, "batch size");
  sig->add_option("--dim", g_dim, "ambient dimension");
  sig->add_option("--m", g_m, "directions");
  sig->add_option("--replicates", g_reps, "null-band Monte Carlo size");
  sig->add_option("--seed", g_seed, "seed");
  sig->add_option("--scale", g_scale, "batch standard deviation");
  sig->add_option("--config", config_path, "JSON config file");

  // --- train ---------------------------------------------------------
  auto* train = app.add_subcommand("train", "toy encoder training");
  std::string t_task = "discrete_clusters";
  std::string t_obj = "ceb_loo";
  double t_beta = 250.0;
  ibgeo::TrainConfig tc;
  std::optional<std::string> t_json, t_csv;
  train->add_option("--task", t_task, "toy task");
  train->add_option("--objective", t_obj, "ib_known_py or ceb_loo");
  train->add_option("--beta", t_beta, "trade-off multiplier");
  train->add_option("--lr", tc.lr, "learning rate");
  train->add_option("--epochs", tc.epochs, "epochs");
  train->add_option("--s-train", tc.s_train, "latent samples while training");
  train->add_option("--k", tc.k, "latent simplex dimension (0 = auto)");
  train->add_option("--seed", tc.seed, "seed");
  train->add_option("--bins", tc.bins, "continuous discretization bins");
  train->add_option("--out-json", t_json, "report path");
  train->add_option("--out-csv", t_csv, "trajectory path");
  train->add_option("--config", config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(sub, config_path);

    if (sub == solve) {
      const ibgeo::JointPMF j = ibgeo::discrete_task_by_name(s_task);
      ibgeo::SolverConfig cfg;
      cfg.tol = s_tol;
      cfg.max_iters = s_iters;
      cfg.seed = s_seed;
      cfg.latent_size = s_latent;
      const ibgeo::OperatingPoint p = ibgeo::solve_at_beta(j, s_beta, cfg);
      json conf{{"command", "solve"}, {"task", s_task},   {"beta", s_beta},
                {"tol", s_tol},       {"seed", s_seed},   {"max_iters", s_iters}};
      if (s_json) {
        json out = point_json(p);
        out["config"] = conf;
        out["config_hash"] = ibgeo::config_hash(conf.dump());
        emit(s_json, out.dump(2) + "\n");
      }
      if (s_csv) {
        std::ostringstream os;
        os << ibgeo::config_header(conf.dump())
           << "beta,rate,delta,epsilon,converged,iters\n";
        os.precision(12);
        os << p.beta << ',' << p.rate << ',' << p.delta << ',' << p.epsilon
           << ',' << (p.converged ? 1 : 0) << ',' << p.iters << '\n';
        emit(s_csv, os.str());
      }
      std::cout << summary_line(p) << '\n';
      return p.converged ? 0 : 1;
    }

    if (sub == curve) {
      const ibgeo::JointPMF j = ibgeo::discrete_task_by_name(c_task);
      ibgeo::SolverConfig cfg;
      cfg.seed = c_seed;
      const ibgeo::IBCurve ib = ibgeo::trace_curve(j, c_betas, cfg);
      json conf{{"command", "curve"},
                {"task", c_task},
                {"betas", c_betas},
                {"seed", c_seed}};
      emit(c_csv, ibgeo::config_header(conf.dump()) + ib.to_csv());
      if (c_json) emit(c_json, ib.to_json_string() + "\n");
      bool all_ok = true;
      for (const auto& p : ib.points) all_ok = all_ok && p.converged;
      return all_ok ? 0 : 1;
    }

    if (sub == mss) {
      const ibgeo::JointPMF j = ibgeo::discrete_task_by_name(m_task);
      const ibgeo::MssPartition part =
          ibgeo::minimal_sufficient_statistic(j, m_tau);
      const ibgeo::InformationPlaneSummary sum =
          ibgeo::information_plane_summary(j);
      json conf{{"command", "mss"}, {"task", m_task}, {"tau", m_tau}};
      json out;
      out["config"] = conf;
      out["config_hash"] = ibgeo::config_hash(conf.dump());
      out["classes"] = part.classes.size();
      out["h_wstar"] = part.h_wstar;
      out["h_wstar_given_y"] = part.h_wstar_given_y;
      out["ixy"] = sum.ixy;
      out["hx"] = sum.hx;
      out["timesharing_slope"] = sum.timesharing_slope;
      json cls = json::array();
      for (const auto& c : part.classes) cls.push_back(c);
      out["partition"] = cls;
      emit(m_json, out.dump(2) + "\n");
      return 0;
    }

    if (sub == effdim) {
      ibgeo::PredictiveManifold man = [&] {
        if (e_task == "continuous_loop")
          return ibgeo::sample_manifold(ibgeo::continuous_loop_task(),
                                        e_samples);
        if (e_task == "gaussian_channel")
          return ibgeo::sample_manifold(ibgeo::gaussian_channel_task(),
                                        e_samples);
        const ibgeo::JointPMF j = ibgeo::discrete_task_by_name(e_task);
        std::vector<ibgeo::SimplexPoint> pts;
        for (int x = 0; x < j.nx(); ++x)
          pts.push_back(j.conditional_y_given_x(x));
        return ibgeo::PredictiveManifold(std::move(pts));
      }();
      const auto scales = ibgeo::default_scales(man, e_scales, e_decades);
      const ibgeo::CoveringProfile prof =
          ibgeo::effective_dimension(man, scales);
      json conf{{"command", "effdim"},
                {"task", e_task},
                {"samples", e_samples},
                {"scales", e_scales},
                {"decades", e_decades}};
      emit(e_csv, ibgeo::config_header(conf.dump()) + prof.to_csv());
      if (e_json) emit(e_json, prof.summary_json() + "\n");
      std::cout << "slope=" << prof.slope_estimate
                << " saturated=" << prof.saturated << '\n';
      return 0;
    }

    if (sub == chain) {
      const auto samples = ibgeo::sample_chain(ch_k, ch_n, ch_seed);
      json conf{{"command", "chain"},
                {"k", ch_k},
                {"n", ch_n},
                {"seed", ch_seed}};
      emit(ch_csv,
           ibgeo::config_header(conf.dump()) + ibgeo::chain_to_csv(samples));
      const ibgeo::OverheadReport rep = ibgeo::overhead_report(ch_k);
      std::cout << "k=" << rep.k << " scale_overhead=" << rep.scale_overhead
                << " phase_overhead=" << rep.phase_overhead << '\n';
      return 0;
    }

    if (sub == sig) {
      ibgeo::SketchConfig sc;
      sc.m = g_m;
      sc.dim = g_dim;
      sc.seed = g_seed;
      const ibgeo::NullBand band =
          ibgeo::sigreg_null_band(g_n, sc, g_reps, g_seed + 1);
      Eigen::MatrixXd batch(g_n, g_dim);
      const ibgeo::CounterRng rng(g_seed + 2);
      std::uint64_t c = 0;
      for (int i = 0; i < g_n; ++i)
        for (int d = 0; d < g_dim; ++d)
          batch(i, d) = g_scale * rng.normal(c++);
      const ibgeo::SigregResult res = ibgeo::sigreg_loss(batch, sc);
      const bool pass = res.statistic <= band.q99;
      std::cout << "statistic=" << res.statistic << " null_q01=" << band.q01
                << " null_q99=" << band.q99 << " pass=" << pass << '\n';
      return pass ? 0 : 1;
    }

    if (sub == train) {
      const ibgeo::ToyTask task = ibgeo::toy_task_by_name(t_task);
      const ibgeo::ToyObjective obj = [&] {
        if (t_obj == "ib_known_py") return ibgeo::ToyObjective::ib_known_py;
        if (t_obj == "ceb_loo") return ibgeo::ToyObjective::ceb_loo;
        throw std::invalid_argument("objective must be ib_known_py or ceb_loo");
      }();
      const ibgeo::TrainReport rep = ibgeo::train_toy(task, obj, t_beta, tc);
      json conf{{"command", "train"}, {"task", t_task},
                {"objective", t_obj}, {"beta", t_beta},
                {"lr", tc.lr},        {"epochs", tc.epochs},
                {"s_train", tc.s_train}, {"k", tc.k},
                {"seed", tc.seed},    {"bins", tc.bins}};
      if (t_json) emit(t_json, rep.to_json_string() + "\n");
      emit(t_csv, ibgeo::config_header(conf.dump()) + rep.trajectory_csv());
      std::cout << "rate=" << rep.final_estimates.rate
                << " epsilon=" << rep.final_estimates.epsilon
                << " delta=" << rep.final_estimates.delta
                << " diverged=" << rep.diverged << '\n';
      return rep.diverged ? 1 : 0;
    }

    throw std::invalid_argument("no subcommand handler");
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
