#include "qmrom/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "qmrom/errors.hpp"
#include "qmrom/problems.hpp"

namespace qmrom::pipeline {

namespace fs = std::filesystem;

void StageLog::record(const std::string& stage, long long wall_ms, const KeyValues& kv) {
  std::string line = "stage=" + stage + " wall_ms=" + std::to_string(wall_ms);
  for (const auto& [k, v] : kv) line += " " + k + "=" + v;
  if (out_) *out_ << line << '\n' << std::flush;
  lines_.push_back(std::move(line));
}

long long StageTimer::elapsed_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               start_)
      .count();
}

int configure_threads() {
  if (const char* env = std::getenv("QMROM_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("QMROM_THREADS must be a positive integer");
    }
    omp_set_num_threads(static_cast<int>(v));
  }
  return omp_get_max_threads();
}

namespace {

std::string fmt(double v) { return matio::format_double(v); }

const std::set<std::string> kProblems = {"helix", "advection", "wave2d"};

AdvectionSpec advection_spec(const RunConfig& cfg) {
  AdvectionSpec spec;
  spec.c = cfg.get_double("c", spec.c);
  spec.n = static_cast<Index>(cfg.get_int("n", spec.n));
  spec.k = static_cast<Index>(cfg.get_int("k", spec.k));
  spec.t_end = cfg.get_double("t_train", spec.t_end);
  return spec;
}

WaveSpec wave_spec(const RunConfig& cfg) {
  WaveSpec spec;
  spec.nx = static_cast<Index>(cfg.get_int("nx", spec.nx));
  spec.ny = static_cast<Index>(cfg.get_int("ny", spec.ny));
  spec.k = static_cast<Index>(cfg.get_int("k", spec.k));
  spec.t_final = cfg.get_double("t_train", spec.t_final);
  spec.x0 = cfg.get_double("x0", spec.x0);
  spec.y0 = cfg.get_double("y0", spec.y0);
  spec.width = cfg.get_double("pulse_width", spec.width);
  spec.amplitude = cfg.get_double("amplitude", spec.amplitude);
  spec.substeps = static_cast<Index>(cfg.get_int("substeps", 0));
  return spec;
}

// State dimension and snapshot count implied by the config.
std::pair<Index, Index> problem_dims(const RunConfig& cfg) {
  const auto problem = problem_name(cfg);
  if (problem == "helix") return {3, static_cast<Index>(cfg.get_int("k", 100))};
  if (problem == "advection") {
    const auto spec = advection_spec(cfg);
    const auto mus = cfg.get_list("mu", default_training_mus());
    return {spec.n, spec.k * static_cast<Index>(mus.size())};
  }
  const auto spec = wave_spec(cfg);
  return {spec.n(), spec.k};
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out = header + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += fmt(row[i]);
    }
    out.push_back('\n');
  }
  matio::write_file_atomic(path, out);
}

double uniform_spacing(const Vector& times, Index begin, Index end) {
  const double dt = times[begin + 1] - times[begin];
  for (Index j = begin + 1; j < end; ++j) {
    if (std::abs((times[j] - times[j - 1]) - dt) > 1e-9 * std::abs(dt)) {
      throw ValidationError("finite differences need uniformly spaced snapshot times");
    }
  }
  return dt;
}

}  // namespace

std::string problem_name(const RunConfig& cfg) {
  auto name = cfg.get_string("problem");
  if (!kProblems.count(name)) {
    throw ConfigError("config key 'problem': unknown problem '" + name +
                      "' (expected helix, advection or wave2d)");
  }
  return name;
}

int default_time_order(const std::string& problem) { return problem == "wave2d" ? 2 : 1; }

RefMode default_ref_mode(const std::string& problem) {
  return problem == "helix" ? RefMode::initial : RefMode::time_mean;
}

SnapshotSet generate_training(const RunConfig& cfg) {
  const auto problem = problem_name(cfg);
  if (problem == "helix") return helix_snapshots(static_cast<Index>(cfg.get_int("k", 100)));
  if (problem == "advection") {
    return advection_training_set(advection_spec(cfg), cfg.get_list("mu", default_training_mus()));
  }
  return wave_snapshots(wave_spec(cfg));
}

void validate_config(const RunConfig& cfg, const std::string& command) {
  const auto problem = problem_name(cfg);
  const bool quadratic = cfg.get_bool("quadratic", true);
  std::vector<std::string> keys = {"k"};
  if (problem == "advection") keys.push_back("n");
  auto add = [&](std::initializer_list<const char*> more) {
    for (const char* k : more) keys.emplace_back(k);
  };
  const bool needs_model = command == "pipeline" || command == "select" || command == "sweep";
  if (needs_model) add({"ref_mode"});
  if (command == "pipeline") {
    if (!cfg.has("kappa")) add({"r"});
    add({"gamma", "lambda1"});
    if (quadratic) add({"lambda2"});
  }
  if (command == "select") add({"r", "q_target", "gamma"});
  if (command == "energy") add({"r_values", "gamma"});
  if (command == "sweep") {
    add({"r", "dt", "t_final", "lambda1_grid"});
    if (quadratic) add({"gamma_grid", "lambda2_grid"});
  }
  const bool rom_run = command == "simulate" || command == "trace" ||
                       (command == "evaluate" && problem != "helix");
  if (rom_run) add({"dt", "t_final"});
  if (command == "trace") add({"point"});
  cfg.require(keys);

  // Typed reads surface malformed values with the key name.
  for (const auto& [key, value] : cfg.entries()) {
    static const std::set<std::string> text_keys = {"problem", "ref_mode", "quadratic", "scheme",
                                                    "mu", "r_values", "gamma_grid",
                                                    "lambda1_grid", "lambda2_grid",
                                                    "infer_operators", "eval_mode"};
    if (!text_keys.count(key)) cfg.get_double(key);
  }
  if (cfg.has("ref_mode")) parse_ref_mode(cfg.get_string("ref_mode"));
  if (cfg.has("dt") && !(cfg.get_double("dt") > 0.0)) throw ConfigError("config key 'dt' must be > 0");
  if (cfg.has("t_final") && !(cfg.get_double("t_final") > 0.0)) {
    throw ConfigError("config key 't_final' must be > 0");
  }
  const auto [n, k] = problem_dims(cfg);
  if (cfg.has("r")) {
    const auto r = cfg.get_int("r");
    if (r <= 0 || r > std::min(n, k)) {
      throw ConfigError("config key 'r' must satisfy 0 < r <= min(n, k) = " +
                        std::to_string(std::min(n, k)));
    }
  }
  if (cfg.has("kappa")) {
    const double kappa = cfg.get_double("kappa");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("config key 'kappa' must lie in (0, 1]");
  }
  for (const char* key : {"gamma", "lambda1", "lambda2"}) {
    if (cfg.has(key) && !(cfg.get_double(key) >= 0.0)) {
      throw ConfigError(std::string("config key '") + key + "' must be >= 0");
    }
  }
}

LearnSettings learn_settings(const RunConfig& cfg) {
  const auto problem = problem_name(cfg);
  LearnSettings s;
  s.r = static_cast<Index>(cfg.get_int("r", 0));
  s.kappa = cfg.get_double("kappa", 0.0);
  s.q_target = static_cast<Index>(cfg.get_int("q_target", -1));
  s.quadratic = cfg.get_bool("quadratic", true);
  s.gamma = cfg.get_double("gamma", 0.0);
  s.lambda1 = cfg.get_double("lambda1", 0.0);
  s.lambda2 = cfg.get_double("lambda2", 0.0);
  s.ref_mode = cfg.has("ref_mode") ? parse_ref_mode(cfg.get_string("ref_mode"))
                                   : default_ref_mode(problem);
  s.time_order = static_cast<int>(cfg.get_int("time_order", default_time_order(problem)));
  if (s.time_order != 1 && s.time_order != 2) throw ConfigError("time_order must be 1 or 2");
  s.infer_operators = cfg.get_bool("infer_operators", true);
  return s;
}

Matrix training_derivatives(const SnapshotSet& train, int time_order) {
  if (train.derivatives && train.derivative_order == time_order) return *train.derivatives;
  Matrix D(train.n(), train.k());
  const auto spec =
      time_order == 1 ? StencilSpec::first_derivative() : StencilSpec::second_derivative();
  for (auto [b, e] : train.segments()) {
    const double dt = uniform_spacing(train.times, b, e);
    D.middleCols(b, e - b) = fd_derivative(train.states.middleCols(b, e - b), dt, spec);
  }
  return D;
}

Prepared prepare(const SnapshotSet& train, RefMode ref_mode, int time_order, StageLog& log) {
  train.validate();
  Prepared p;
  p.time_order = time_order;
  {
    StageTimer t;
    p.centered = center(train.states, ref_mode);
    log.record("center", t.elapsed_ms(),
               {{"n", std::to_string(train.n())}, {"k", std::to_string(train.k())},
                {"ref_mode", to_string(ref_mode)}});
  }
  {
    StageTimer t;
    p.svd = thin_svd(p.centered.shifted);
    log.record("svd", t.elapsed_ms(),
               {{"p", std::to_string(p.svd.singular_values.size())},
                {"sigma1", fmt(p.svd.singular_values[0])}});
  }
  {
    StageTimer t;
    p.derivatives = training_derivatives(train, time_order);
    const bool exact = train.derivatives && train.derivative_order == time_order;
    log.record("derivatives", t.elapsed_ms(),
               {{"order", std::to_string(time_order)}, {"source", exact ? "exact" : "fd4"}});
  }
  return p;
}

QuadraticManifold learn_manifold(const Prepared& prep, Index r, bool quadratic, double gamma,
                                 Index q_target, StageLog& log,
                                 std::optional<SparsaResult>* sparsa_out,
                                 const fs::path* artifact_dir) {
  StageTimer t_pod;
  const PodBasis basis =
      pod_from_svd(prep.svd, prep.centered.s_ref, prep.centered.ref_mode, r);
  log.record("pod", t_pod.elapsed_ms(),
             {{"r", std::to_string(r)}, {"energy", fmt(retained_energy_linear(basis, r))}});
  if (artifact_dir) matio::write_matrix_binary(basis.V, *artifact_dir / "basis.qmrm");
  if (!quadratic) return linear_manifold(basis);

  StageTimer t_feat;
  const Matrix shat = basis.V.transpose() * prep.centered.shifted;
  const QuadFeatureMap full = QuadFeatureMap::full(r);
  const Matrix W = quad_feature_matrix(shat, full);
  log.record("features", t_feat.elapsed_ms(), {{"q", std::to_string(full.q())}});
  if (artifact_dir) {
    matio::write_matrix_binary(shat, *artifact_dir / "shat.qmrm");
    matio::write_matrix_binary(W, *artifact_dir / "W.qmrm");
  }

  QuadraticManifold m;
  if (q_target >= 0 && q_target < full.q()) {
    StageTimer t_sel;
    const Matrix E = projection_error(basis, prep.centered.shifted);
    SparsaResult path = sparsa_solve_for_target(W, E, SparsaConfig{}, q_target);
    const auto chosen = select_columns(path, q_target);
    int floor_events = 0;
    for (const auto& s : path.stats) floor_events += s.floor_events;
    log.record("select", t_sel.elapsed_ms(),
               {{"q_target", std::to_string(q_target)},
                {"selected", std::to_string(chosen.size())},
                {"pairs", matio::format_pairs(full.subset(chosen).pairs)},
                {"support_monotone", path.support_monotone ? "1" : "0"},
                {"floor_events", std::to_string(floor_events)}});
    if (artifact_dir) {
      std::vector<std::vector<double>> rows;
      for (Index c : chosen) {
        const auto [i, j] = full.pairs[static_cast<std::size_t>(c)];
        rows.push_back({static_cast<double>(c + 1), static_cast<double>(i + 1),
                        static_cast<double>(j + 1)});
      }
      write_csv(*artifact_dir / "selection.csv", "feature,i,j", rows);
      write_sparsa_trace_csv(path, *artifact_dir / "sparsa_trace.csv");
    }
    StageTimer t_fit;
    m = chosen.empty() ? linear_manifold(basis)
                       : debias(basis, prep.centered.shifted, full.subset(chosen), gamma);
    m.gamma = gamma;
    log.record("fit_vbar", t_fit.elapsed_ms(),
               {{"q", std::to_string(m.q())}, {"gamma", fmt(gamma)}, {"debiased", "1"}});
    if (sparsa_out) *sparsa_out = std::move(path);
  } else {
    StageTimer t_fit;
    m = fit_vbar(basis, prep.centered.shifted, full, gamma);
    log.record("fit_vbar", t_fit.elapsed_ms(), {{"q", std::to_string(m.q())}, {"gamma", fmt(gamma)}});
  }
  if (artifact_dir) matio::write_matrix_binary(m.vbar, *artifact_dir / "vbar.qmrm");
  return m;
}

namespace {

OpinfProblem opinf_problem(const Prepared& prep, const QuadraticManifold& m, double lambda1,
                           double lambda2) {
  OpinfProblem p;
  p.shat = m.pod.V.transpose() * prep.centered.shifted;
  p.dhat = m.pod.V.transpose() * prep.derivatives;
  p.fmap = m.fmap;
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.time_order = prep.time_order;
  return p;
}

}  // namespace

RomOperators learn_operators(const Prepared& prep, const QuadraticManifold& m, double lambda1,
                             double lambda2) {
  const auto problem = opinf_problem(prep, m, lambda1, lambda2);
  return m.q() == 0 ? infer_linear(problem) : infer_quadratic(problem);
}

LearnedModel run_pipeline(const SnapshotSet& train, const LearnSettings& settings,
                          const fs::path* artifact_dir, StageLog& log) {
  if (artifact_dir) fs::create_directories(*artifact_dir);
  Prepared prep = prepare(train, settings.ref_mode, settings.time_order, log);
  if (artifact_dir) {
    matio::write_matrix_binary(prep.centered.s_ref, *artifact_dir / "s_ref.qmrm");
    matio::write_matrix_csv(prep.svd.singular_values, *artifact_dir / "singular_values.csv");
  }

  StageTimer t_r;
  Index r = settings.r;
  if (r <= 0) {
    if (!(settings.kappa > 0.0)) throw ConfigError("either r or kappa must be given");
    r = choose_dimension(prep.svd.singular_values, settings.kappa);
  }
  log.record("choose_r", t_r.elapsed_ms(),
             {{"r", std::to_string(r)}, {"kappa", fmt(settings.kappa)}});
  if (artifact_dir) {
    const Vector& sv = prep.svd.singular_values;
    const double total = sv.squaredNorm();
    std::vector<std::vector<double>> rows;
    double acc = 0.0;
    for (Index i = 0; i < sv.size(); ++i) {
      acc += sv[i] * sv[i];
      rows.push_back({static_cast<double>(i + 1), total > 0.0 ? acc / total : 1.0});
    }
    write_csv(*artifact_dir / "energy.csv", "r,linear_energy", rows);
  }

  LearnedModel out;
  out.manifold = learn_manifold(prep, r, settings.quadratic, settings.gamma, settings.q_target,
                                log, &out.sparsa, artifact_dir);
  if (settings.infer_operators) {
    StageTimer t;
    const auto problem = opinf_problem(prep, out.manifold, settings.lambda1, settings.lambda2);
    if (artifact_dir) matio::write_matrix_binary(problem.dhat, *artifact_dir / "dshat.qmrm");
    out.ops = out.manifold.q() == 0 ? infer_linear(problem) : infer_quadratic(problem);
    log.record("opinf", t.elapsed_ms(),
               {{"time_order", std::to_string(settings.time_order)},
                {"lambda1", fmt(settings.lambda1)},
                {"lambda2", fmt(settings.lambda2)}});
  }
  if (artifact_dir) {
    StageTimer t;
    matio::save_model(out.manifold, out.ops, *artifact_dir / "model.qmdl");
    matio::load_model(*artifact_dir / "model.qmdl");
    log.record("save", t.elapsed_ms(), {{"path", (*artifact_dir / "model.qmdl").string()}});
  }
  return out;
}

EvalReport summarize(std::vector<CaseResult> cases) {
  EvalReport report;
  std::vector<double> errs;
  for (const auto& c : cases) {
    if (c.stable) {
      errs.push_back(c.error);
    } else {
      ++report.unstable;
    }
  }
  report.cases = std::move(cases);
  if (errs.empty()) {
    throw InstabilityError("all " + std::to_string(report.cases.size()) +
                           " evaluated runs were unstable");
  }
  std::sort(errs.begin(), errs.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(errs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, errs.size() - 1);
    return errs[lo] + (pos - static_cast<double>(lo)) * (errs[hi] - errs[lo]);
  };
  report.q1 = quantile(0.25);
  report.median = quantile(0.5);
  report.q3 = quantile(0.75);
  return report;
}

std::vector<TestCase> test_cases(const RunConfig& cfg) {
  const auto problem = problem_name(cfg);
  std::vector<TestCase> out;
  if (problem == "helix") {
    const auto s = helix_snapshots(static_cast<Index>(cfg.get_int("k", 100)));
    out.push_back({0.0, s.times, s.states, helix_velocity(0.0)});
    return out;
  }
  if (problem == "advection") {
    const auto base = advection_spec(cfg);
    const auto mus = sample_test_parameters(cfg.get_int("mu_test", 20),
                                            static_cast<std::uint64_t>(cfg.get_int("seed", 0)));
    const double t_final = cfg.get_double("t_final");
    const auto records = static_cast<Index>(cfg.get_int("eval_records", 80));
    if (records < 1) throw ConfigError("config key 'eval_records' must be >= 1");
    const Vector times = Vector::LinSpaced(records + 1, 0.0, t_final);
    out.resize(mus.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(mus.size()); ++i) {
      AdvectionSpec spec = base;
      spec.mu = mus[static_cast<std::size_t>(i)];
      auto& tc = out[static_cast<std::size_t>(i)];
      tc.label = spec.mu;
      tc.times = times;
      tc.truth = advection_states(spec, times);
      tc.velocity = advection_time_derivative(spec, Vector::Zero(1)).col(0);
    }
    return out;
  }
  const auto spec = wave_spec(cfg);
  const auto s = wave_snapshots(spec);
  const double t_final = cfg.get_double("t_final");
  Index count = 0;
  while (count < s.k() && s.times[count] <= t_final * (1.0 + 1e-12)) ++count;
  out.push_back({0.0, s.times.head(count), s.states.leftCols(count), Vector::Zero(s.n())});
  return out;
}

std::vector<TestCase> training_cases(const SnapshotSet& train, Index stride) {
  if (stride < 1) throw ConfigError("training case stride must be >= 1");
  std::vector<TestCase> out;
  const auto first = StencilSpec::first_derivative();
  for (auto [b, e] : train.segments()) {
    TestCase tc;
    tc.label = train.params.empty() ? 0.0 : train.params[static_cast<std::size_t>(b)];
    const Index count = (e - b - 1) / stride + 1;
    tc.times.resize(count);
    tc.truth.resize(train.n(), count);
    for (Index j = 0; j < count; ++j) {
      tc.times[j] = train.times[b + j * stride] - train.times[b];
      tc.truth.col(j) = train.states.col(b + j * stride);
    }
    if (train.derivatives && train.derivative_order == 1) {
      tc.velocity = train.derivatives->col(b);
    } else if (e - b >= 6) {
      const double dt = uniform_spacing(train.times, b, e);
      tc.velocity = Vector::Zero(train.n());
      for (int m = 0; m < 6; ++m) tc.velocity += first.boundary[0][m] * train.states.col(b + m);
      tc.velocity /= dt;
    } else {
      tc.velocity = Vector::Zero(train.n());
    }
    out.push_back(std::move(tc));
  }
  return out;
}

namespace {

struct CaseRun {
  Trajectory traj;
  Index stride = 1;
  Index usable = 0;  // recorded columns that line up with case times
};

CaseRun run_case(const QuadraticManifold& m, const RomOperators& ops, const TestCase& tc,
                 double dt) {
  if (tc.times.size() < 2) throw ValidationError("test case needs at least two time samples");
  const double spacing = tc.times[1] - tc.times[0];
  const auto stride = static_cast<Index>(std::llround(spacing / dt));
  if (stride < 1 || std::abs(static_cast<double>(stride) * dt - spacing) > 1e-9 * spacing) {
    throw ConfigError("dt=" + fmt(dt) + " does not divide the evaluation spacing " + fmt(spacing));
  }
  RomSimConfig cfg;
  cfg.dt = dt;
  cfg.t_final = tc.times[tc.times.size() - 1];
  cfg.initial_full_state = tc.truth.col(0);
  cfg.initial_velocity = tc.velocity;
  cfg.record_stride = stride;
  CaseRun run;
  run.traj = simulate(ops, cfg, m);
  run.stride = stride;
  run.usable = std::min(run.traj.reduced_states.cols(), tc.times.size());
  return run;
}

}  // namespace

CaseResult evaluate_case(const QuadraticManifold& m, const RomOperators& ops, const TestCase& tc,
                         double dt) {
  CaseResult res;
  res.label = tc.label;
  CaseRun run = run_case(m, ops, tc, dt);
  res.stable = run.traj.stable;
  res.blowup_time = run.traj.blowup_time;
  if (!res.stable) {
    res.error = std::numeric_limits<double>::infinity();
    return res;
  }
  const Matrix approx = decode(m, Matrix(run.traj.reduced_states.leftCols(run.usable)));
  res.error = relative_error(tc.truth.leftCols(run.usable), approx);
  return res;
}

EvalReport evaluate_rom(const QuadraticManifold& m, const RomOperators& ops,
                        const std::vector<TestCase>& cases, double dt) {
  std::vector<CaseResult> results(cases.size());
  std::vector<std::string> errors(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(cases.size()); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      results[idx] = evaluate_case(m, ops, cases[idx], dt);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ConfigError(e);
  }
  return summarize(std::move(results));
}

EvalReport evaluate_reconstruction(const QuadraticManifold& m, const Matrix& S) {
  CaseResult c;
  c.error = reconstruction_error(m, S);
  return summarize({c});
}

SweepResult sweep(const Prepared& prep, Index r, bool quadratic, const SweepGrids& grids,
                  const std::vector<TestCase>& cases, double dt, StageLog& log) {
  StageTimer t;
  const std::vector<double> gammas = quadratic ? grids.gamma : std::vector<double>{0.0};
  const std::vector<double> lambda2s = quadratic ? grids.lambda2 : std::vector<double>{0.0};

  // Manifolds depend only on gamma and operators only on the lambdas.
  StageLog quiet;
  std::map<double, QuadraticManifold> manifolds;
  for (double g : gammas) manifolds.emplace(g, learn_manifold(prep, r, quadratic, g, -1, quiet));
  const QuadraticManifold& any = manifolds.begin()->second;
  const OpinfGram gram = opinf_gram(opinf_problem(prep, any, 0.0, 0.0));

  auto result = sweep_hyperparameters(
      gammas, grids.lambda1, lambda2s, [&](const Hyperparameters& hp) -> std::optional<double> {
        const RomOperators ops = solve_opinf_gram(gram, hp.lambda1, hp.lambda2);
        const QuadraticManifold& m = manifolds.at(hp.gamma);
        double total = 0.0;
        for (const auto& tc : cases) {
          const CaseResult c = evaluate_case(m, ops, tc, dt);
          if (!c.stable) return std::nullopt;
          total += c.error;
        }
        return total / static_cast<double>(cases.size());
      });
  Index unstable = 0;
  for (const auto& e : result.table) unstable += e.stable ? 0 : 1;
  log.record("sweep", t.elapsed_ms(),
             {{"r", std::to_string(r)},
              {"quadratic", quadratic ? "1" : "0"},
              {"candidates", std::to_string(result.table.size())},
              {"unstable", std::to_string(unstable)},
              {"best_gamma", fmt(result.best.gamma)},
              {"best_lambda1", fmt(result.best.lambda1)},
              {"best_lambda2", fmt(result.best.lambda2)},
              {"best_error", fmt(result.best_error)}});
  return result;
}

std::vector<EnergyRow> energy_table(const Prepared& prep, const Matrix& S,
                                    const std::vector<Index>& rs, double gamma) {
  std::vector<EnergyRow> rows(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const PodBasis basis =
        pod_from_svd(prep.svd, prep.centered.s_ref, prep.centered.ref_mode, rs[i]);
    const auto m = fit_vbar(basis, prep.centered.shifted, QuadFeatureMap::full(rs[i]), gamma);
    rows[i] = {rs[i], retained_energy_linear(basis, rs[i]), retained_energy_quadratic(m, S)};
  }
  return rows;
}

TraceSeries trace_point(const QuadraticManifold& m, const RomOperators& ops, const TestCase& tc,
                        double dt, Index point) {
  if (point < 0 || point >= m.n()) {
    throw ConfigError("trace point " + std::to_string(point) + " outside [0, " +
                      std::to_string(m.n()) + ")");
  }
  CaseRun run = run_case(m, ops, tc, dt);
  TraceSeries out;
  out.stable = run.traj.stable;
  out.times = tc.times.head(run.usable);
  out.fom = tc.truth.row(point).head(run.usable).transpose();
  out.rom.resize(run.usable);
  const Vector vrow = m.pod.V.row(point).transpose();
  const Vector brow = m.vbar.row(point).transpose();
  for (Index j = 0; j < run.usable; ++j) {
    const Vector shat = run.traj.reduced_states.col(j);
    double v = m.pod.s_ref[point] + vrow.dot(shat);
    if (m.q() > 0) v += brow.dot(quad_features(shat, m.fmap));
    out.rom[j] = v;
  }
  out.rms = out.stable ? std::sqrt((out.fom - out.rom).squaredNorm() /
                                   static_cast<double>(std::max<Index>(1, run.usable)))
                       : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace qmrom::pipeline
