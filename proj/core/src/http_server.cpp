#include "handguide/http_server.hpp"

#include <httplib.h>

#include <sstream>

#include "handguide/scene.hpp"

namespace handguide {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ParseError& e) {
      reply(res, 400, {{"error", e.what()}, {"kind", "parse"}, {"line", e.line()}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", e.what()}, {"kind", "parse"}});
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}, {"kind", "not_found"}});
    } catch (const StreamError& e) {
      reply(res, 409, {{"error", e.what()}, {"kind", "stream"}});
    } catch (const StateError& e) {
      reply(res, 409, {{"error", e.what()}, {"kind", "state"}});
    } catch (const RegistrationError& e) {
      reply(res, 422, {{"error", e.what()}, {"kind", "registration"}, {"stage", e.stage()}});
    } catch (const ValidationError& e) {
      reply(res, 400, {{"error", e.what()}, {"kind", "validation"}});
    } catch (const DimensionError& e) {
      reply(res, 400, {{"error", e.what()}, {"kind", "validation"}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}, {"kind", "internal"}});
    }
  };
}

// Field from a multipart form or a JSON body.
std::optional<std::string> field(const httplib::Request& req, const json& body, const std::string& name) {
  if (req.is_multipart_form_data()) {
    if (req.has_file(name)) return req.get_file_value(name).content;
    return std::nullopt;
  }
  if (body.contains(name)) return body[name].is_string() ? body[name].get<std::string>() : body[name].dump();
  return std::nullopt;
}

}  // namespace

HttpService::HttpService(SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  server_->set_socket_options([](auto sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  install_routes();
}

HttpService::~HttpService() { stop(); }

bool HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    return port_ > 0;
  }
  if (!server_->bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void HttpService::listen() {
  running_ = true;
  server_->listen_after_bind();
  running_ = false;
}

void HttpService::stop() {
  running_ = false;
  server_->stop();
}

void HttpService::install_routes() {
  auto& srv = *server_;
  const std::string sid = R"(/sessions/([A-Za-z0-9_-]+))";

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = sessions_.create_session(req.body);
             reply(res, 201, {{"id", id}, {"joint_count", sessions_.joint_count(id)}});
           }));

  srv.Put(sid + "/model", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            sessions_.upload_model(id, req.body);
            reply(res, 200, {{"id", id}, {"joint_count", sessions_.joint_count(id)}});
          }));

  srv.Get(sid + "/model", guarded([this](const httplib::Request& req, httplib::Response& res) {
            res.set_content(sessions_.model_document(req.matches[1]), "application/json");
          }));

  srv.Put(sid + "/base_pose", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            sessions_.set_base_pose(id, transform_from(json::parse(req.body)));
            reply(res, 200, {{"base_pose", to_json(*sessions_.base_pose(id))}});
          }));

  srv.Post(sid + "/register", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const json body = req.is_multipart_form_data() || req.body.empty() ? json::object() : json::parse(req.body);
             const auto seed = field(req, body, "seed_pose");
             if (!seed) throw ValidationError("seed_pose is required");
             const RigidTransform seed_pose = transform_from(json::parse(*seed));
             const Method method = parse_method(field(req, body, "method").value_or("icp"));
             const Preset preset = parse_preset(field(req, body, "preset").value_or("small"));
             PointCloud scene;
             if (const auto cloud = field(req, body, "cloud")) {
               scene = read_cloud_string(*cloud);
             } else if (const auto spec_text = field(req, body, "scene_spec")) {
               const RobotModel model = load_model(sessions_.model_document(id));
               scene = synth_scene(model, scene_spec_from_json(*spec_text, model)).cloud;
             } else {
               throw ValidationError("either a cloud file or a scene_spec is required");
             }
             const RegistrationResult result = sessions_.register_base(id, seed_pose, scene, method, preset);
             reply(res, 200, to_json(result));
           }));

  srv.Put(sid + "/sensitivity", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            if (!body.contains("sensitivity") || !body["sensitivity"].is_number()) {
              throw ValidationError("sensitivity must be a number");
            }
            reply(res, 200, to_json(sessions_.set_sensitivity(req.matches[1], body["sensitivity"].get<double>())));
          }));

  srv.Get(sid + "/state", guarded([this](const httplib::Request& req, httplib::Response& res) {
            reply(res, 200, to_json(sessions_.state(req.matches[1])));
          }));

  srv.Post(sid + "/hand", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto [sample, frame] = hand_sample_from(json::parse(req.body));
             reply(res, 200, to_json(sessions_.stream_hand(req.matches[1], sample, frame)));
           }));

  srv.Post(sid + "/stream", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             std::istringstream in(req.body);
             std::string line;
             std::string out;
             while (std::getline(in, line)) {
               if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
               json reply_line;
               try {
                 const auto [sample, frame] = hand_sample_from(json::parse(line));
                 reply_line = to_json(sessions_.stream_hand(id, sample, frame));
               } catch (const NotFoundError&) {
                 throw;
               } catch (const std::exception& e) {
                 reply_line = {{"error", e.what()}};
               }
               out += reply_line.dump();
               out += '\n';
             }
             res.set_content(out, "application/x-ndjson");
           }));

  srv.Get(sid + "/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            sessions_.state(id);  // 404 before streaming starts
            auto seen = std::make_shared<std::uint64_t>(0);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream", [this, id, seen](std::size_t, httplib::DataSink& sink) {
                  if (!running_) return false;
                  try {
                    const auto [version, msg] = sessions_.wait_for_update(id, *seen, std::chrono::milliseconds(200));
                    if (version > *seen) {
                      *seen = version;
                      const std::string event = "data: " + to_json(msg).dump() + "\n\n";
                      if (!sink.write(event.data(), event.size())) return false;
                    }
                  } catch (const NotFoundError&) {
                    sink.done();
                  }
                  return sink.is_writable();
                });
          }));

  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

}  // namespace handguide
