// Copyright 2026 The Stripehouse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stripehouse/catalog.hpp"
#include "stripehouse/engine.hpp"

namespace stripehouse {

// ---- wire frames: 4-byte big-endian length, then a UTF-8 JSON body ----

inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

std::string encode_frame(std::string_view body);

/// Decodes one complete frame occupying all of `bytes`. Throws Protocol.
std::string decode_frame(std::string_view bytes);

/// Blocking socket helpers. read_frame returns nullopt on a clean EOF before
/// any header byte; throws Protocol on oversize or truncated frames.
std::optional<std::string> read_frame(int fd);
void write_frame(int fd, std::string_view body);

// ---- credentials and rules ----

enum class Role { Admin, Analyst };

struct Credential {
  std::string user;
  std::string token;
  Role role = Role::Analyst;
};

std::vector<Credential> load_users(const std::filesystem::path& path);

/// Constant-time token comparison; returns the credential on success.
std::optional<Credential> authenticate(const std::vector<Credential>& users, std::string_view user,
                                       std::string_view token);

enum class Effect { Allow, Deny };

struct AccessRule {
  std::string user;
  std::string table;  // identifier or "*"
  std::string action = "SELECT";
  Effect effect = Effect::Allow;

  bool operator==(const AccessRule&) const = default;
};

nlohmann::json rule_to_json(const AccessRule& rule);
AccessRule rule_from_json(const nlohmann::json& j);
std::string rule_text(const AccessRule& rule);

/// True iff every table has a matching ALLOW and none has a matching DENY.
/// An empty table list is never authorized.
bool authorize(std::string_view user, const std::vector<std::string>& tables, const std::vector<AccessRule>& rules);

class RuleStore {
 public:
  explicit RuleStore(std::filesystem::path path);

  std::vector<AccessRule> snapshot() const;
  /// Appends a rule and persists the file atomically.
  void add(const AccessRule& rule);
  void reload();

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::vector<AccessRule> rules_;
};

// ---- audit trail ----

struct AuditRecord {
  std::string ts;
  std::string user;
  std::string action;    // QUERY, GRANT, DENY, AUTH_FAIL, HELLO, PING, PROTOCOL
  std::string detail;
  std::string decision;  // ALLOWED, DENIED, ERROR
  double duration_s = 0;
};

nlohmann::json audit_to_json(const AuditRecord& r);

class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path path);
  ~AuditLog();
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  /// Appends one NDJSON line and syncs it. Throws IoFailure.
  void append(const AuditRecord& record);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  int fd_ = -1;
};

// ---- server ----

struct ServiceConfig {
  std::filesystem::path data_root = ".";
  std::uint16_t port = 7878;
  std::filesystem::path users_file = "users.json";
  std::filesystem::path rules_file = "rules.json";
  std::filesystem::path audit_file = "audit.ndjson";

  /// Relative file paths are taken relative to data_root.
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Reads a JSON config file; STRIPEHOUSE_ROOT overrides data_root.
ServiceConfig load_service_config(const std::filesystem::path& path);

class Server {
 public:
  explicit Server(ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and listens; port 0 picks a free port. Returns the bound port.
  std::uint16_t start();
  /// Accepts sessions until stop().
  void run();
  void stop();

  /// Handles one decoded request for a session; exposed for tests.
  struct Session {
    std::optional<Credential> who;
    std::unique_ptr<Engine> engine;
  };
  /// Returns the response body, or nullopt when the connection must close
  /// without a response. `close` is set when the session ends after replying.
  std::optional<std::string> handle(Session& session, std::string_view body, bool& close);

 private:
  void serve_session(int fd);
  AuditRecord begin(const Session& s, std::string action, std::string detail) const;

  ServiceConfig config_;
  Catalog catalog_;
  std::vector<Credential> users_;
  RuleStore rules_;
  AuditLog audit_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::mutex sessions_mu_;
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
};

class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  nlohmann::json request(const nlohmann::json& body);
  /// Sends raw bytes; used by protocol tests.
  void send_raw(std::string_view bytes);
  std::optional<nlohmann::json> receive();

 private:
  int fd_ = -1;
};

nlohmann::json result_to_json(const QueryResult& result);

}  // namespace stripehouse
