#include "handguide/benchmark.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "handguide/error.hpp"

namespace handguide {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

std::vector<BenchmarkScenario> default_scenarios(double noise_sigma) {
  return {{"ICP-big", Method::Icp, preset_big(), {}, noise_sigma},
          {"ICP-small", Method::Icp, preset_small(), {}, noise_sigma},
          {"Congruent-big", Method::Congruent, preset_big(), {}, noise_sigma},
          {"Congruent-small", Method::Congruent, preset_small(), {}, noise_sigma}};
}

TrialSetup make_trial(const RobotModel& model, std::uint64_t master_seed, std::size_t trial,
                      const PerturbationBounds& bounds) {
  TrialSetup setup;
  setup.scene_seed = mix(mix(master_seed) + trial);
  std::mt19937_64 rng(setup.scene_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const Vec3 position(uniform(-1.0, 1.0), uniform(-1.0, 1.0), 0.0);
  const double yaw = uniform(-M_PI, M_PI);
  setup.truth = RigidTransform::FromXyzRpy(position, {0.0, 0.0, yaw});

  setup.q = model.zero_configuration();
  for (std::size_t i = 0; i < model.joint_count(); ++i) {
    const auto& lim = model.joints()[i].limits;
    setup.q[static_cast<Eigen::Index>(i)] = uniform(std::max(lim.lower, -1.0), std::min(lim.upper, 1.0));
  }

  const Vec3 dt = random_unit(rng) * uniform(0.0, bounds.translation);
  const Mat3 dr = Eigen::AngleAxisd(uniform(0.0, bounds.rotation), random_unit(rng)).toRotationMatrix();
  setup.seed_pose = RigidTransform(dr * setup.truth.rotation(), setup.truth.translation() + dt);
  return setup;
}

TrialRecord run_trial(const RobotModel& model, const BenchmarkScenario& scenario, const TrialSetup& setup,
                      std::size_t trial, const PipelineParams& params) {
  TrialRecord rec;
  rec.scenario = scenario.name;
  rec.trial = trial;
  rec.seed = setup.scene_seed;
  SceneSpec spec;
  spec.base_pose = setup.truth;
  spec.q = setup.q;
  spec.clutter = scenario.clutter;
  spec.noise_sigma = scenario.noise_sigma;
  spec.preset = scenario.preset;
  spec.seed = setup.scene_seed;
  try {
    const Scene scene = synth_scene(model, spec);
    PipelineParams p = params;
    p.congruent.seed = setup.scene_seed;
    const PipelineResult res =
        register_pipeline(scene.cloud, model, setup.q, setup.seed_pose, scenario.method, scenario.preset, p);
    rec.rms = res.registration.rms;
    rec.converged = res.registration.converged;
    rec.lcp = res.registration.lcp;
    rec.iterations = res.registration.iterations;
    const PoseError err = pose_error(res.registration.transform, setup.truth);
    rec.translation_error = err.translation;
    rec.rotation_error = err.rotation;
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

ScenarioStats summarize(const std::string& name, const std::vector<TrialRecord>& records) {
  ScenarioStats s;
  s.name = name;
  std::vector<double> values;
  for (const auto& r : records) {
    if (r.scenario != name) continue;
    ++s.trials;
    if (r.failed) {
      ++s.failures;
    } else {
      values.push_back(r.rms);
    }
  }
  if (values.empty()) {
    s.min = s.max = s.mean = s.stddev = std::nan("");
    return s;
  }
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

BenchmarkReport run_benchmark(const RobotModel& model, const std::vector<BenchmarkScenario>& scenarios,
                              const BenchmarkOptions& options) {
  if (options.trials < 1) throw ValidationError("benchmark needs at least one trial");
  BenchmarkReport report;
  for (const auto& scenario : scenarios) {
    for (std::size_t t = 0; t < options.trials; ++t) {
      const TrialSetup setup = make_trial(model, options.seed, t, options.perturbation);
      PipelineParams params = options.pipeline;
      if (options.shared_sampling) params.model_seed = setup.scene_seed;
      report.records.push_back(run_trial(model, scenario, setup, t, params));
    }
    report.stats.push_back(summarize(scenario.name, report.records));
  }
  return report;
}

std::string format_table(const BenchmarkReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s & %-10s & %-10s & %-10s & %s\n", "Algorithm", "Min", "Max", "Mean",
                "Standard Deviation");
  out << line;
  for (const auto& s : report.stats) {
    std::snprintf(line, sizeof(line), "%-18s & %-10.5f & %-10.5f & %-10.5f & %.5f\n", s.name.c_str(), s.min, s.max,
                  s.mean, s.stddev);
    out << line;
  }
  for (const auto& s : report.stats) {
    out << "# " << s.name << ": " << s.trials << " trials, " << s.failures << " failed\n";
  }
  return out.str();
}

std::string format_records(const BenchmarkReport& report) {
  std::ostringstream out;
  for (const auto& r : report.records) {
    nlohmann::json j{{"scenario", r.scenario},
                     {"trial", r.trial},
                     {"seed", r.seed},
                     {"failed", r.failed},
                     {"rms", r.failed ? nlohmann::json(nullptr) : nlohmann::json(r.rms)},
                     {"converged", r.converged},
                     {"translation_error", r.failed ? nlohmann::json(nullptr) : nlohmann::json(r.translation_error)},
                     {"rotation_error_deg",
                      r.failed ? nlohmann::json(nullptr) : nlohmann::json(r.rotation_error * 180.0 / M_PI)},
                     {"iterations", r.iterations}};
    if (r.lcp) j["lcp"] = *r.lcp;
    if (r.failed) j["error"] = r.error;
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace handguide
