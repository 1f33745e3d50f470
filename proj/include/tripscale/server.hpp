#pragma once

#include "tripscale/session.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace tripscale::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path journal_dir = "journal";
  /// Served read-only under /assets/ when set.
  std::optional<std::filesystem::path> assets_dir;
};

/// HTTP+JSON front of a SessionManager:
///   POST /sessions                  {participant_id, schedule} -> {session_id, total_questions}
///   GET  /sessions/{id}/next        question | break | done
///   POST /sessions/{id}/answers     {triplet_index, choice: "opt1"|"opt2", client_rt_ms}
///   GET  /sessions/{id}/export      response CSV (?include_practice=1&drop_unanswered=1)
///   GET  /assets/...                static stimuli
class CollectionServer {
 public:
  explicit CollectionServer(ServerOptions options, SessionManager::Clock clock = {});
  ~CollectionServer();

  CollectionServer(const CollectionServer&) = delete;
  CollectionServer& operator=(const CollectionServer&) = delete;

  /// Binds the socket; returns the bound port. Throws on failure.
  int bind();
  /// Serves until stop() is called. bind() must come first.
  void listen();
  void stop();

  SessionManager& sessions() { return *manager_; }

 private:
  void install_routes();

  ServerOptions options_;
  std::unique_ptr<SessionManager> manager_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace tripscale::service
