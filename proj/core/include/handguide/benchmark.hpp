#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "handguide/registration.hpp"
#include "handguide/scene.hpp"

namespace handguide {

struct BenchmarkScenario {
  std::string name;  // table row label, e.g. "ICP-small"
  Method method = Method::Icp;
  Preset preset = preset_small();
  ClutterSpec clutter;
  double noise_sigma = 0.003;  // m
};

/// The four rows of the registration table: {ICP, Congruent} x {big, small}.
std::vector<BenchmarkScenario> default_scenarios(double noise_sigma = 0.003);

struct TrialSetup {
  RigidTransform truth;
  RigidTransform seed_pose;
  Configuration q;
  std::uint64_t scene_seed = 0;
};

struct PerturbationBounds {
  double translation = 0.1;               // m
  double rotation = 10.0 * M_PI / 180.0;  // rad
};

/// Randomized base pose, configuration and perturbed seed for one trial. Depends only on
/// (master_seed, trial), so every scenario sees the same scenes for a given trial.
TrialSetup make_trial(const RobotModel& model, std::uint64_t master_seed, std::size_t trial,
                      const PerturbationBounds& bounds = {});

struct TrialRecord {
  std::string scenario;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double rms = 0.0;
  bool converged = false;
  double translation_error = 0.0;  // m
  double rotation_error = 0.0;     // rad
  std::optional<double> lcp;
  int iterations = 0;
};

struct ScenarioStats {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct BenchmarkReport {
  std::vector<ScenarioStats> stats;
  std::vector<TrialRecord> records;
};

struct BenchmarkOptions {
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  PerturbationBounds perturbation;
  PipelineParams pipeline;
  /// Draw the model cloud with the scene's sampling seed (point-identical clouds
  /// on clutter-free noiseless scenes); otherwise an independent sampling.
  bool shared_sampling = false;
};

TrialRecord run_trial(const RobotModel& model, const BenchmarkScenario& scenario, const TrialSetup& setup,
                      std::size_t trial, const PipelineParams& params);

BenchmarkReport run_benchmark(const RobotModel& model, const std::vector<BenchmarkScenario>& scenarios,
                              const BenchmarkOptions& options);

ScenarioStats summarize(const std::string& name, const std::vector<TrialRecord>& records);

/// Aligned text table: Algorithm & Min & Max & Mean & Standard Deviation.
std::string format_table(const BenchmarkReport& report);
/// One JSON object per trial.
std::string format_records(const BenchmarkReport& report);

}  // namespace handguide
