#include "tripscale/server.hpp"

#include "tripscale/io.hpp"

#include <httplib.h>

#include <sstream>

namespace tripscale::service {
namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

/// Maps the service exceptions onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    send_error(res, 404, e.what());
  } catch (const Conflict& e) {
    send_error(res, 409, e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, e.what());
  } catch (const DataError& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

bool flag(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const auto v = req.get_param_value(name);
  return v == "1" || v == "true" || v == "yes";
}

}  // namespace

CollectionServer::CollectionServer(ServerOptions options, SessionManager::Clock clock)
    : options_(std::move(options)),
      manager_(std::make_unique<SessionManager>(options_.journal_dir, std::move(clock))),
      http_(std::make_unique<httplib::Server>()) {
  install_routes();
}

CollectionServer::~CollectionServer() { stop(); }

void CollectionServer::install_routes() {
  auto& srv = *http_;
  if (options_.assets_dir && !srv.set_mount_point("/assets", options_.assets_dir->string()))
    throw std::runtime_error("assets directory " + options_.assets_dir->string() + " does not exist");

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = nlohmann::json::parse(req.body);
      const auto participant = body.at("participant_id").get<std::string>();
      const auto schedule = schedule_from_json(body.at("schedule"));
      const auto id = manager_->create_session(participant, schedule);
      const auto state = manager_->snapshot(id);
      send_json(res, 201,
                {{"session_id", id}, {"total_questions", state.sequence.size()}, {"phase", to_string(state.phase)}});
    });
  });

  srv.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      send_json(res, 200, manager_->next_question(id).to_json(id));
    });
  });

  srv.Post(R"(/sessions/([^/]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto body = nlohmann::json::parse(req.body);
      const auto index = body.at("triplet_index").get<std::size_t>();
      const auto choice_name = body.at("choice").get<std::string>();
      Choice choice;
      if (choice_name == "opt1") choice = Choice::kOpt1;
      else if (choice_name == "opt2") choice = Choice::kOpt2;
      else throw std::invalid_argument("choice must be \"opt1\" or \"opt2\"");
      std::optional<double> rt;
      if (body.contains("client_rt_ms") && !body["client_rt_ms"].is_null()) rt = body["client_rt_ms"].get<double>();
      const auto result = manager_->record_answer(id, index, choice, rt);
      nlohmann::json out{{"status", "recorded"}, {"triplet_index", index}};
      out["answer"] = result.answer == Answer::kUnanswered ? nlohmann::json("NA")
                                                           : nlohmann::json(answer_sign(result.answer));
      out["rt_ms"] = result.rt_ms ? nlohmann::json(*result.rt_ms) : nlohmann::json();
      send_json(res, 200, out);
    });
  });

  srv.Get(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      ExportOptions opts;
      opts.include_practice = flag(req, "include_practice");
      opts.drop_unanswered = flag(req, "drop_unanswered");
      std::ostringstream csv;
      io::write_responses(csv, manager_->export_responses(req.matches[1], opts));
      res.status = 200;
      res.set_content(csv.str(), "text/csv");
    });
  });
}

int CollectionServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = http_->bind_to_any_port(options_.host);
  } else if (!http_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  options_.port = port;
  return port;
}

void CollectionServer::listen() { http_->listen_after_bind(); }

void CollectionServer::stop() {
  if (http_) http_->stop();
}

}  // namespace tripscale::service
