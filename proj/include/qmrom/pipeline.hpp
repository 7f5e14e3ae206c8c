#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmrom/config.hpp"
#include "qmrom/manifold.hpp"
#include "qmrom/matio.hpp"
#include "qmrom/opinf.hpp"
#include "qmrom/rom.hpp"
#include "qmrom/sparsa.hpp"

// Orchestration of the learning pipeline and the experiments built on it.
namespace qmrom::pipeline {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// One line per stage: "stage=<name> wall_ms=<int> key=value ...".
class StageLog {
 public:
  explicit StageLog(std::ostream* out = nullptr) : out_(out) {}
  void record(const std::string& stage, long long wall_ms, const KeyValues& kv = {});
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::ostream* out_;
  std::vector<std::string> lines_;
};

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  long long elapsed_ms() const;

 private:
  std::chrono::steady_clock::time_point start_;
};

// Applies QMROM_THREADS when set; returns the thread count in effect.
int configure_threads();

std::string problem_name(const RunConfig& cfg);
int default_time_order(const std::string& problem);
RefMode default_ref_mode(const std::string& problem);

// Training snapshots for the configured problem.
SnapshotSet generate_training(const RunConfig& cfg);

// Required keys and value ranges for a subcommand.
void validate_config(const RunConfig& cfg, const std::string& command);

struct LearnSettings {
  Index r = 0;                  // 0 means choose from kappa
  double kappa = 0.0;
  Index q_target = -1;          // < 0 disables column selection
  bool quadratic = true;
  double gamma = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  RefMode ref_mode = RefMode::time_mean;
  int time_order = 1;
  bool infer_operators = true;
};

LearnSettings learn_settings(const RunConfig& cfg);

// Data shared by every fit on the same training set.
struct Prepared {
  CenteredData centered;
  SvdResult svd;
  Matrix derivatives;  // n x k, order time_order
  int time_order = 1;
};

Prepared prepare(const SnapshotSet& train, RefMode ref_mode, int time_order,
                 StageLog& log);

// Time derivatives per trajectory segment, exact when the set carries them.
Matrix training_derivatives(const SnapshotSet& train, int time_order);

struct LearnedModel {
  QuadraticManifold manifold;
  std::optional<RomOperators> ops;
  std::optional<SparsaResult> sparsa;
};

QuadraticManifold learn_manifold(const Prepared& prep, Index r, bool quadratic,
                                 double gamma, Index q_target, StageLog& log,
                                 std::optional<SparsaResult>* sparsa_out = nullptr,
                                 const std::filesystem::path* artifact_dir = nullptr);

RomOperators learn_operators(const Prepared& prep, const QuadraticManifold& m,
                             double lambda1, double lambda2);

// Full learning run; stage artifacts land in artifact_dir when given.
LearnedModel run_pipeline(const SnapshotSet& train, const LearnSettings& settings,
                          const std::filesystem::path* artifact_dir, StageLog& log);

// A reference trajectory with uniformly spaced times starting at 0.
struct TestCase {
  double label = 0.0;
  Vector times;
  Matrix truth;     // n x times.size()
  Vector velocity;  // initial full-state velocity for second-order models
};

struct CaseResult {
  double label = 0.0;
  double error = 0.0;
  bool stable = true;
  std::optional<double> blowup_time;
};

struct EvalReport {
  std::vector<CaseResult> cases;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  Index unstable = 0;
};

// Quartiles over the stable cases; throws InstabilityError when none is.
EvalReport summarize(std::vector<CaseResult> cases);

std::vector<TestCase> test_cases(const RunConfig& cfg);
// The segments of a training set as cases (subsampled every `stride` columns).
std::vector<TestCase> training_cases(const SnapshotSet& train, Index stride);

// ROM from the case's first state; dt must divide the case's time spacing.
CaseResult evaluate_case(const QuadraticManifold& m, const RomOperators& ops,
                         const TestCase& tc, double dt);
EvalReport evaluate_rom(const QuadraticManifold& m, const RomOperators& ops,
                        const std::vector<TestCase>& cases, double dt);
// Manifold-only check: relative error of decode(encode(S)).
EvalReport evaluate_reconstruction(const QuadraticManifold& m, const Matrix& S);

struct SweepGrids {
  std::vector<double> gamma;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
};

// Trains each grid point on prep and scores it by the mean relative error
// over the training cases.
SweepResult sweep(const Prepared& prep, Index r, bool quadratic,
                  const SweepGrids& grids, const std::vector<TestCase>& cases,
                  double dt, StageLog& log);

struct EnergyRow {
  Index r = 0;
  double linear = 0.0;
  double quadratic = 0.0;
};

std::vector<EnergyRow> energy_table(const Prepared& prep, const Matrix& S,
                                    const std::vector<Index>& rs, double gamma);

struct TraceSeries {
  Vector times;
  Vector fom;
  Vector rom;
  double rms = 0.0;
  bool stable = true;
};

TraceSeries trace_point(const QuadraticManifold& m, const RomOperators& ops,
                        const TestCase& tc, double dt, Index point);

}  // namespace qmrom::pipeline
