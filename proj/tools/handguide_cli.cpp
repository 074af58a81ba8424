// handguide: registration, benchmarks, scene synthesis, trajectory replay, serving.
//
// Exit codes: 0 success, 1 algorithmic failure (e.g. non-convergence), 2 usage or I/O error.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "handguide/benchmark.hpp"
#include "handguide/http_server.hpp"
#include "handguide/replay.hpp"
#include "handguide/scene.hpp"

namespace fs = std::filesystem;
using namespace handguide;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RigidTransform pose_from_flags(const std::vector<double>& v) {
  return RigidTransform::FromXyzRpy({v[0], v[1], v[2]}, {v[3], v[4], v[5]});
}

Configuration configuration_from(const std::vector<double>& v, const RobotModel& model) {
  if (v.size() != model.joint_count()) {
    throw UsageError("--q needs " + std::to_string(model.joint_count()) + " values");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::atomic<HttpService*> g_service{nullptr};

void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensorless hand guidance engine"};
  app.require_subcommand(1);

  std::string model_path;
  std::string scene_path;
  std::vector<double> seed_pose;
  std::string method = "icp";
  std::string preset = "small";
  std::vector<double> q_flag;
  std::string out_path;
  std::uint64_t seed = 1;

  auto* reg = app.add_subcommand("register", "Register the robot model into a scene cloud");
  reg->add_option("--model", model_path, "Robot description (JSON)")->required();
  reg->add_option("--scene", scene_path, "Scene cloud (.ply/.xyz) or scene spec (.json)")->required();
  reg->add_option("--seed-pose", seed_pose, "Seed pose: x y z roll pitch yaw")->expected(6)->required();
  reg->add_option("--method", method, "icp | congruent")->check(CLI::IsMember({"icp", "congruent"}));
  reg->add_option("--preset", preset, "big | small")->check(CLI::IsMember({"big", "small"}));
  reg->add_option("--q", q_flag, "Robot configuration during referencing (rad)");
  reg->add_option("--seed", seed, "Seed for the global method's sampling");
  reg->add_option("--out", out_path, "Write the transform document here");

  std::size_t trials = 20;
  double noise = 0.003;
  std::string records_path;
  bool clutter = false;
  auto* bench = app.add_subcommand("bench", "Registration statistics over randomized synthetic scenes");
  bench->add_option("--model", model_path, "Robot description (JSON)")->required();
  bench->add_option("--trials", trials, "Trials per scenario")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "Master seed");
  bench->add_option("--out", out_path, "Write the table here (records go to <out>.records.jsonl)");
  bench->add_option("--records", records_path, "Per-trial records path");
  bench->add_option("--noise", noise, "Scene vertex noise sigma (m)")->check(CLI::NonNegativeNumber);
  std::vector<std::string> only_methods;
  std::vector<std::string> only_presets;
  bench->add_option("--method", only_methods, "Restrict to these methods")->check(CLI::IsMember({"icp", "congruent"}));
  bench->add_option("--preset", only_presets, "Restrict to these presets")->check(CLI::IsMember({"big", "small"}));
  bench->add_flag("--clutter", clutter, "Add a table touching the robot base to every scene");

  std::string trajectory_path;
  double dt = 0.004;
  double sensitivity = 1.0;
  double max_step = 0.1;
  double settle = 2.0;
  std::string policy = "reject";
  auto* rep = app.add_subcommand("replay", "Drive guidance and the joint controller from a hand trajectory");
  rep->add_option("--model", model_path, "Robot description (JSON)")->required();
  rep->add_option("--trajectory", trajectory_path, "Line-delimited hand samples")->required();
  rep->add_option("--out", out_path, "Joint trajectory output (stdout if omitted)");
  rep->add_option("--dt", dt, "Controller tick (s)")->check(CLI::PositiveNumber);
  rep->add_option("--sensitivity", sensitivity, "Hand displacement scale")->check(CLI::PositiveNumber);
  rep->add_option("--max-step-angle", max_step, "Per-frame joint update cap (rad)")->check(CLI::PositiveNumber);
  rep->add_option("--settle", settle, "Seconds simulated after the last sample")->check(CLI::NonNegativeNumber);
  rep->add_option("--policy", policy, "Joint limit policy: reject | clamp")->check(CLI::IsMember({"reject", "clamp"}));
  std::vector<double> base_flag;
  rep->add_option("--base-pose", base_flag, "Robot base in the sample frame: x y z roll pitch yaw")->expected(6);
  rep->add_option("--q", q_flag, "Initial configuration (rad)");

  std::string spec_path;
  std::string format = "ply";
  auto* syn = app.add_subcommand("synth", "Generate a synthetic scene mesh and cloud");
  syn->add_option("--model", model_path, "Robot description (JSON)")->required();
  syn->add_option("--spec", spec_path, "Scene spec (JSON)")->required();
  syn->add_option("--out", out_path, "Output prefix")->required();
  syn->add_option("--format", format, "Cloud format: ply | xyz")->check(CLI::IsMember({"ply", "xyz"}));

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* srv = app.add_subcommand("serve", "Run the session service");
  srv->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  srv->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*reg) {
      require_file(model_path, "model");
      require_file(scene_path, "scene");
      const RobotModel model = load_model_file(model_path);
      Configuration q = model.zero_configuration();
      PointCloud scene;
      if (has_suffix(scene_path, ".json")) {
        const SceneSpec spec = scene_spec_from_json(read_text(scene_path), model);
        q = spec.q;
        scene = synth_scene(model, spec).cloud;
      } else {
        scene = read_cloud_file(scene_path);
      }
      if (!q_flag.empty()) q = configuration_from(q_flag, model);
      PipelineParams params;
      params.congruent.seed = seed;
      const PipelineResult res = register_pipeline(scene, model, q, pose_from_flags(seed_pose),
                                                   parse_method(method), parse_preset(preset), params);
      nlohmann::json doc = nlohmann::json::parse(transform_to_json(res.registration.transform));
      doc["rms"] = res.registration.rms;
      doc["converged"] = res.registration.converged;
      doc["iterations"] = res.registration.iterations;
      if (res.registration.lcp) doc["lcp"] = *res.registration.lcp;
      doc["method"] = method;
      doc["preset"] = preset;
      std::cout << doc.dump(2) << '\n';
      if (!out_path.empty()) write_text(out_path, doc.dump(2) + "\n");
      return res.registration.converged ? kOk : kFailure;
    }

    if (*bench) {
      require_file(model_path, "model");
      const RobotModel model = load_model_file(model_path);
      std::vector<BenchmarkScenario> scenarios;
      for (auto s : default_scenarios(noise)) {
        const std::string m = to_string(s.method);
        if (!only_methods.empty() && std::find(only_methods.begin(), only_methods.end(), m) == only_methods.end()) continue;
        if (!only_presets.empty() &&
            std::find(only_presets.begin(), only_presets.end(), s.preset.name) == only_presets.end()) continue;
        if (clutter) {
          s.clutter.adjacent_table = true;
          s.name += "-table";
        }
        scenarios.push_back(s);
      }
      BenchmarkOptions options;
      options.trials = trials;
      options.seed = seed;
      const BenchmarkReport report = run_benchmark(model, scenarios, options);
      const std::string table = format_table(report);
      std::cout << table;
      if (!out_path.empty()) {
        write_text(out_path, table);
        if (records_path.empty()) records_path = out_path + ".records.jsonl";
      }
      if (!records_path.empty()) write_text(records_path, format_records(report));
      return kOk;
    }

    if (*rep) {
      require_file(model_path, "model");
      require_file(trajectory_path, "trajectory");
      const RobotModel model = load_model_file(model_path);
      ReplayOptions options;
      options.dt = dt;
      options.settle_time = settle;
      options.guidance.sensitivity = sensitivity;
      options.guidance.max_step_angle = max_step;
      options.guidance.limit_policy = policy == "clamp" ? LimitPolicy::Clamp : LimitPolicy::Reject;
      if (!base_flag.empty()) options.base = pose_from_flags(base_flag);
      if (!q_flag.empty()) options.initial_q = configuration_from(q_flag, model);
      const auto records = replay(model, read_hand_trajectory_file(trajectory_path), options);
      std::ostringstream out;
      write_joint_trajectory(out, records);
      if (out_path.empty()) {
        std::cout << out.str();
      } else {
        write_text(out_path, out.str());
      }
      return kOk;
    }

    if (*syn) {
      require_file(model_path, "model");
      require_file(spec_path, "scene spec");
      const RobotModel model = load_model_file(model_path);
      const SceneSpec spec = scene_spec_from_json(read_text(spec_path), model);
      const Scene scene = synth_scene(model, spec);
      std::ostringstream mesh;
      write_mesh_ply(mesh, scene.mesh);
      write_text(out_path + ".mesh.ply", mesh.str());
      std::ostringstream cloud;
      if (format == "ply") {
        write_ply(cloud, scene.cloud);
      } else {
        write_xyz(cloud, scene.cloud);
      }
      write_text(out_path + ".cloud." + format, cloud.str());
      write_text(out_path + ".truth.json", transform_to_json(scene.ground_truth) + "\n");
      std::cout << "wrote " << scene.mesh.triangles.size() << " triangles, " << scene.cloud.size()
                << " points to " << out_path << ".*\n";
      return kOk;
    }

    if (*srv) {
      SessionManager sessions;
      HttpService service(sessions);
      if (!service.bind(host, port)) {
        std::cerr << "error: cannot bind " << host << ":" << port << " (address in use?)\n";
        return kUsage;
      }
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << service.port() << std::endl;
      service.listen();
      g_service = nullptr;
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const RegistrationError& e) {
    std::cerr << "registration failed at stage '" << e.stage() << "': " << e.what() << '\n';
    return kFailure;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
