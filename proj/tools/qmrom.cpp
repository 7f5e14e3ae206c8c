// qmrom: learn quadratic manifolds and operator-inference ROMs from snapshots.
//
// Exit codes: 0 success, 1 configuration or input error, 2 numerical
// failure, 3 every evaluated run was unstable.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "qmrom/errors.hpp"
#include "qmrom/matio.hpp"
#include "qmrom/pipeline.hpp"
#include "qmrom/problems.hpp"

namespace fs = std::filesystem;
using namespace qmrom;
using namespace qmrom::pipeline;

namespace {

struct Options {
  std::string config;
  std::string input;
  std::string output;
  std::optional<long long> r;
  std::optional<long long> q;
  std::optional<double> gamma;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<double> kappa;
  std::optional<long long> seed;
};

std::string current_stage = "startup";

RunConfig load_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  // Flags win over the file.
  if (o.r) cfg.set("r", std::to_string(*o.r));
  if (o.q) cfg.set("q_target", std::to_string(*o.q));
  if (o.gamma) cfg.set("gamma", matio::format_double(*o.gamma));
  if (o.lambda1) cfg.set("lambda1", matio::format_double(*o.lambda1));
  if (o.lambda2) cfg.set("lambda2", matio::format_double(*o.lambda2));
  if (o.kappa) cfg.set("kappa", matio::format_double(*o.kappa));
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  return cfg;
}

SnapshotSet training_data(const RunConfig& cfg, const Options& o, StageLog& log) {
  StageTimer t;
  SnapshotSet s;
  if (!o.input.empty()) {
    s = matio::load_snapshots(o.input);
    log.record("load", t.elapsed_ms(), {{"path", o.input}});
  } else {
    s = generate_training(cfg);
    log.record("generate", t.elapsed_ms(),
               {{"problem", problem_name(cfg)}, {"n", std::to_string(s.n())},
                {"k", std::to_string(s.k())}});
  }
  return s;
}

matio::StoredModel require_model(const Options& o) {
  if (o.input.empty()) throw ConfigError("--input must name a model file");
  return matio::load_model(o.input);
}

const RomOperators& require_ops(const matio::StoredModel& model) {
  if (!model.ops) throw ConfigError("model file has no ROM operators");
  return *model.ops;
}

fs::path output_dir(const Options& o, const char* fallback) {
  fs::path dir = o.output.empty() ? fs::path(fallback) : fs::path(o.output);
  fs::create_directories(dir);
  return dir;
}

int cmd_gen(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "gen");
  StageLog log(&std::clog);
  current_stage = "generate";
  auto s = training_data(cfg, Options{}, log);
  StageTimer t;
  const fs::path out = o.output.empty() ? fs::path("snapshots.qmss") : fs::path(o.output);
  matio::save_snapshots(s, out);
  log.record("write", t.elapsed_ms(), {{"path", out.string()}});
  return 0;
}

int cmd_pipeline(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "pipeline");
  StageLog log(&std::clog);
  current_stage = "generate";
  auto train = training_data(cfg, o, log);
  current_stage = "pipeline";
  const auto dir = output_dir(o, "artifacts");
  run_pipeline(train, learn_settings(cfg), &dir, log);
  return 0;
}

int cmd_select(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "select");
  StageLog log(&std::clog);
  current_stage = "generate";
  auto train = training_data(cfg, o, log);
  auto settings = learn_settings(cfg);
  current_stage = "select";
  const auto dir = output_dir(o, "selection");
  Prepared prep = prepare(train, settings.ref_mode, settings.time_order, log);
  learn_manifold(prep, settings.r, true, settings.gamma, settings.q_target, log, nullptr, &dir);
  return 0;
}

int cmd_simulate(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "simulate");
  StageLog log(&std::clog);
  current_stage = "simulate";
  const auto model = require_model(o);
  const auto& ops = require_ops(model);
  const auto cases = test_cases(cfg);
  const auto& tc = cases.front();

  StageTimer t;
  RomSimConfig sim;
  sim.dt = cfg.get_double("dt");
  sim.t_final = cfg.get_double("t_final");
  sim.record_stride = static_cast<Index>(cfg.get_int("record_stride", 1));
  sim.initial_full_state = tc.truth.col(0);
  sim.initial_velocity = tc.velocity;
  const auto scheme = cfg.get_string("scheme", "imex_euler");
  if (scheme != "imex_euler" && scheme != "explicit_euler") {
    throw ConfigError("config key 'scheme' must be imex_euler or explicit_euler");
  }
  sim.scheme = scheme == "imex_euler" ? TimeScheme::imex_euler : TimeScheme::explicit_euler;
  auto traj = simulate(ops, sim, model.manifold);
  const Matrix full = reconstruct(model.manifold, traj);

  const auto dir = output_dir(o, "simulation");
  Matrix table(traj.times.size(), 1 + traj.reduced_states.rows());
  table.col(0) = traj.times;
  table.rightCols(traj.reduced_states.rows()) = traj.reduced_states.transpose();
  matio::write_matrix_csv(table, dir / "trajectory.csv");
  matio::write_matrix_binary(traj.reduced_states, dir / "reduced.qmrm");
  matio::write_matrix_binary(full, dir / "reconstructed.qmrm");
  log.record("simulate", t.elapsed_ms(),
             {{"label", matio::format_double(tc.label)}, {"steps", std::to_string(step_count(sim.dt, sim.t_final))},
              {"records", std::to_string(traj.times.size())}});
  std::cout << "run label=" << matio::format_double(tc.label) << " stable=" << (traj.stable ? 1 : 0)
            << " blowup_time="
            << (traj.blowup_time ? matio::format_double(*traj.blowup_time) : std::string("none"))
            << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "evaluate");
  StageLog log(&std::clog);
  current_stage = "evaluate";
  const auto model = require_model(o);
  const auto cases = test_cases(cfg);
  StageTimer t;
  EvalReport report;
  bool reconstruction = cfg.get_string("eval_mode", problem_name(cfg) == "helix" ? "reconstruction"
                                                                              : "rom") ==
                        "reconstruction";
  if (reconstruction) {
    report = evaluate_reconstruction(model.manifold, cases.front().truth);
  } else {
    report = evaluate_rom(model.manifold, require_ops(model), cases, cfg.get_double("dt"));
  }
  std::string csv = "label,error,stable\n";
  for (const auto& c : report.cases) {
    csv += matio::format_double(c.label) + "," + matio::format_double(c.error) + "," +
           (c.stable ? "1" : "0") + "\n";
  }
  const fs::path out = o.output.empty() ? fs::path("evaluation.csv") : fs::path(o.output);
  matio::write_file_atomic(out, csv);
  log.record("evaluate", t.elapsed_ms(),
             {{"cases", std::to_string(report.cases.size())},
              {"unstable", std::to_string(report.unstable)}});
  std::cout << "median=" << matio::format_double(report.median)
            << " q1=" << matio::format_double(report.q1)
            << " q3=" << matio::format_double(report.q3) << " unstable=" << report.unstable
            << '\n';
  return 0;
}

std::vector<Index> to_indices(const std::vector<double>& values, const char* key) {
  std::vector<Index> out;
  for (double v : values) {
    if (v != std::floor(v) || v < 1) {
      throw ConfigError(std::string("config key '") + key + "' must list positive integers");
    }
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

int cmd_energy(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "energy");
  StageLog log(&std::clog);
  current_stage = "generate";
  auto train = training_data(cfg, o, log);
  auto settings = learn_settings(cfg);
  current_stage = "energy";
  Prepared prep = prepare(train, settings.ref_mode, settings.time_order, log);
  StageTimer t;
  const auto rs = to_indices(cfg.get_list("r_values"), "r_values");
  const auto rows = energy_table(prep, train.states, rs, settings.gamma);
  std::string csv = "r,linear_energy,quadratic_energy\n";
  for (const auto& row : rows) {
    csv += std::to_string(row.r) + "," + matio::format_double(row.linear) + "," +
           matio::format_double(row.quadratic) + "\n";
  }
  const fs::path out = o.output.empty() ? fs::path("energy.csv") : fs::path(o.output);
  matio::write_file_atomic(out, csv);
  log.record("energy", t.elapsed_ms(), {{"rows", std::to_string(rows.size())}});
  return 0;
}

int cmd_trace(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "trace");
  StageLog log(&std::clog);
  current_stage = "trace";
  const auto model = require_model(o);
  const auto cases = test_cases(cfg);
  StageTimer t;
  const auto point = static_cast<Index>(cfg.get_int("point"));
  const auto series =
      trace_point(model.manifold, require_ops(model), cases.front(), cfg.get_double("dt"), point);
  std::string csv = "t,fom,rom\n";
  for (Index j = 0; j < series.times.size(); ++j) {
    csv += matio::format_double(series.times[j]) + "," + matio::format_double(series.fom[j]) +
           "," + matio::format_double(series.rom[j]) + "\n";
  }
  const fs::path out = o.output.empty() ? fs::path("trace.csv") : fs::path(o.output);
  matio::write_file_atomic(out, csv);
  log.record("trace", t.elapsed_ms(), {{"point", std::to_string(point)},
                                       {"rms", matio::format_double(series.rms)}});
  std::cout << "rms=" << matio::format_double(series.rms) << " stable=" << (series.stable ? 1 : 0)
            << '\n';
  return series.stable ? 0 : 3;
}

int cmd_sweep(const Options& o) {
  auto cfg = load_config(o);
  validate_config(cfg, "sweep");
  StageLog log(&std::clog);
  current_stage = "generate";
  auto train = training_data(cfg, o, log);
  auto settings = learn_settings(cfg);
  current_stage = "sweep";
  Prepared prep = prepare(train, settings.ref_mode, settings.time_order, log);
  SweepGrids grids;
  grids.gamma = cfg.get_list("gamma_grid", {0.0});
  grids.lambda1 = cfg.get_list("lambda1_grid");
  grids.lambda2 = cfg.get_list("lambda2_grid", {0.0});
  const auto stride = static_cast<Index>(cfg.get_int("train_stride", 10));
  const double dt = cfg.get_double("dt");
  const double t_final = cfg.get_double("t_final");
  // Score each training trajectory over [0, t_final].
  auto cases = training_cases(train, stride);
  for (auto& tc : cases) {
    Index count = 0;
    while (count < tc.times.size() && tc.times[count] <= t_final * (1.0 + 1e-12)) ++count;
    tc.times = Vector(tc.times.head(count));
    tc.truth = Matrix(tc.truth.leftCols(count));
  }
  const auto result = sweep(prep, settings.r, settings.quadratic, grids, cases, dt, log);
  std::string csv = "gamma,lambda1,lambda2,error,stable\n";
  for (const auto& e : result.table) {
    csv += matio::format_double(e.hp.gamma) + "," + matio::format_double(e.hp.lambda1) + "," +
           matio::format_double(e.hp.lambda2) + "," +
           (e.stable ? matio::format_double(e.error) : std::string("nan")) + "," +
           (e.stable ? "1" : "0") + "\n";
  }
  const fs::path out = o.output.empty() ? fs::path("sweep.csv") : fs::path(o.output);
  matio::write_file_atomic(out, csv);
  std::cout << "best gamma=" << matio::format_double(result.best.gamma)
            << " lambda1=" << matio::format_double(result.best.lambda1)
            << " lambda2=" << matio::format_double(result.best.lambda2)
            << " error=" << matio::format_double(result.best_error) << '\n';
  return 0;
}

int report(const std::string& kind, const std::exception& e, const char* hint, int code) {
  std::cerr << "error: stage=" << current_stage << " " << kind << ": " << e.what();
  if (hint) std::cerr << " (hint: " << hint << ")";
  std::cerr << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic manifold learning and operator-inference reduced-order models"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file (key = value)");
    sub->add_option("--input", o.input, "Input snapshot or model file");
    sub->add_option("--output", o.output, "Output file or directory");
    sub->add_option("--r", o.r, "Reduced dimension");
    sub->add_option("--q", o.q, "Target number of quadratic features");
    sub->add_option("--gamma", o.gamma, "Manifold regularization");
    sub->add_option("--lambda1", o.lambda1, "Linear operator regularization");
    sub->add_option("--lambda2", o.lambda2, "Quadratic operator regularization");
    sub->add_option("--kappa", o.kappa, "Energy tolerance used when r is not given");
    sub->add_option("--seed", o.seed, "Seed for test parameter sampling");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"gen", "Generate a snapshot set", cmd_gen},
      {"pipeline", "Learn a manifold and ROM, writing every stage artifact", cmd_pipeline},
      {"select", "Select quadratic features by group-sparse regression", cmd_select},
      {"simulate", "Integrate a learned ROM", cmd_simulate},
      {"evaluate", "Relative test errors of a learned model", cmd_evaluate},
      {"energy", "Retained energy table over r", cmd_energy},
      {"trace", "FOM and ROM values at one state index over time", cmd_trace},
      {"sweep", "Hyperparameter grid search on the training data", cmd_sweep},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    configure_threads();
    return selected(o);
  } catch (const InstabilityError& e) {
    return report("instability", e, "increase lambda1/lambda2 or reduce dt", 3);
  } catch (const IllConditionedError& e) {
    return report("ill-conditioned", e, "use positive gamma or lambda values", 2);
  } catch (const SolverError& e) {
    return report("solver", e, nullptr, 2);
  } catch (const IntegrationError& e) {
    return report("integration", e, "reduce dt", 2);
  } catch (const SizeError& e) {
    return report("size", e, nullptr, 2);
  } catch (const ConfigError& e) {
    return report("config", e, nullptr, 1);
  } catch (const ParseError& e) {
    return report("parse", e, nullptr, 1);
  } catch (const IoError& e) {
    return report("io", e, nullptr, 1);
  } catch (const ValidationError& e) {
    return report("validation", e, nullptr, 1);
  } catch (const std::exception& e) {
    return report("internal", e, nullptr, 2);
  }
}
