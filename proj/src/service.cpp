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


#include "stripehouse/service.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/crypto.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "stripehouse/error.hpp"

namespace stripehouse {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Frames

std::string encode_frame(std::string_view body) {
  if (body.size() > kMaxFrameBytes) {
    throw Error(ErrorCode::Protocol, "frame body of " + std::to_string(body.size()) + " bytes exceeds 16 MiB");
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out.append(body);
  return out;
}

namespace {

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

// Reads exactly n bytes; returns the count read before EOF.
std::size_t read_full(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) break;
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoFailure, std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return got;
}

void write_full(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t w = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoFailure, std::string("send: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(w));
  }
}

}  // namespace

std::string decode_frame(std::string_view bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::Protocol, "frame shorter than its 4-byte header");
  const std::uint32_t n = be32(reinterpret_cast<const unsigned char*>(bytes.data()));
  if (n > kMaxFrameBytes) throw Error(ErrorCode::Protocol, "frame length " + std::to_string(n) + " exceeds 16 MiB");
  if (bytes.size() - 4 != n) {
    throw Error(ErrorCode::Protocol, "frame declares " + std::to_string(n) + " bytes but carries " +
                                         std::to_string(bytes.size() - 4));
  }
  return std::string(bytes.substr(4));
}

std::optional<std::string> read_frame(int fd) {
  unsigned char header[4];
  const std::size_t got = read_full(fd, reinterpret_cast<char*>(header), 4);
  if (got == 0) return std::nullopt;
  if (got < 4) throw Error(ErrorCode::Protocol, "connection closed inside a frame header");
  const std::uint32_t n = be32(header);
  if (n > kMaxFrameBytes) throw Error(ErrorCode::Protocol, "frame length " + std::to_string(n) + " exceeds 16 MiB");
  std::string body(n, '\0');
  if (read_full(fd, body.data(), n) != n) throw Error(ErrorCode::Protocol, "connection closed inside a frame body");
  return body;
}

void write_frame(int fd, std::string_view body) { write_full(fd, encode_frame(body)); }

// ---------------------------------------------------------------------------
// Credentials and rules

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<Credential> load_users(const fs::path& path) {
  const json doc = read_json_file(path);
  const json& list = doc.is_object() ? doc.at("users") : doc;
  std::vector<Credential> out;
  try {
    for (const auto& u : list) {
      Credential c;
      c.user = u.at("user").get<std::string>();
      c.token = u.at("token").get<std::string>();
      const std::string role = u.value("role", "ANALYST");
      if (role == "ADMIN") {
        c.role = Role::Admin;
      } else if (role == "ANALYST") {
        c.role = Role::Analyst;
      } else {
        throw Error(ErrorCode::ParseError, "unknown role " + role);
      }
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return out;
}

std::optional<Credential> authenticate(const std::vector<Credential>& users, std::string_view user,
                                       std::string_view token) {
  std::optional<Credential> found;
  for (const Credential& c : users) {
    if (c.user != user) continue;
    // Length is not secret; the contents are compared in constant time.
    if (c.token.size() == token.size() && CRYPTO_memcmp(c.token.data(), token.data(), token.size()) == 0) {
      found = c;
    }
  }
  return found;
}

json rule_to_json(const AccessRule& r) {
  return json{{"user", r.user},
              {"table", r.table},
              {"action", r.action},
              {"effect", r.effect == Effect::Allow ? "ALLOW" : "DENY"}};
}

AccessRule rule_from_json(const json& j) {
  try {
    AccessRule r;
    r.user = j.at("user").get<std::string>();
    r.table = to_lower(j.at("table").get<std::string>());
    r.action = j.value("action", "SELECT");
    if (r.action != "SELECT") throw Error(ErrorCode::ParseError, "unsupported action " + r.action);
    const std::string effect = j.value("effect", "ALLOW");
    if (effect == "ALLOW") {
      r.effect = Effect::Allow;
    } else if (effect == "DENY") {
      r.effect = Effect::Deny;
    } else {
      throw Error(ErrorCode::ParseError, "unknown effect " + effect);
    }
    if (r.user.empty() || r.table.empty()) throw Error(ErrorCode::ParseError, "rule needs a user and a table");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad rule: ") + e.what());
  }
}

std::string rule_text(const AccessRule& r) {
  return std::string(r.effect == Effect::Allow ? "ALLOW " : "DENY ") + r.action + " " + r.table + " TO " + r.user;
}

bool authorize(std::string_view user, const std::vector<std::string>& tables, const std::vector<AccessRule>& rules) {
  if (tables.empty()) return false;
  for (const std::string& t : tables) {
    bool allowed = false;
    for (const AccessRule& r : rules) {
      if (r.user != user || r.action != "SELECT" || (r.table != "*" && r.table != t)) continue;
      if (r.effect == Effect::Deny) return false;
      allowed = true;
    }
    if (!allowed) return false;
  }
  return true;
}

RuleStore::RuleStore(fs::path path) : path_(std::move(path)) { reload(); }

std::vector<AccessRule> RuleStore::snapshot() const {
  std::shared_lock lock(mu_);
  return rules_;
}

void RuleStore::reload() {
  std::vector<AccessRule> rules;
  if (fs::exists(path_)) {
    const json doc = read_json_file(path_);
    const json& list = doc.is_object() ? doc.at("rules") : doc;
    for (const auto& r : list) rules.push_back(rule_from_json(r));
  }
  std::unique_lock lock(mu_);
  rules_ = std::move(rules);
}

void RuleStore::add(const AccessRule& rule) {
  std::unique_lock lock(mu_);
  std::vector<AccessRule> next = rules_;
  next.push_back(rule);
  json list = json::array();
  for (const auto& r : next) list.push_back(rule_to_json(r));
  write_file_atomic(path_, json{{"rules", list}}.dump(2) + "\n");
  rules_ = std::move(next);
}

// ---------------------------------------------------------------------------
// Audit

json audit_to_json(const AuditRecord& r) {
  return json{{"ts", r.ts},         {"user", r.user},         {"action", r.action},
              {"detail", r.detail}, {"decision", r.decision}, {"duration_s", r.duration_s}};
}

AuditLog::AuditLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, "cannot open audit log " + path_.string());
}

AuditLog::~AuditLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AuditLog::append(const AuditRecord& record) {
  const std::string line = audit_to_json(record).dump() + "\n";
  std::lock_guard lock(mu_);
  std::string_view rest = line;
  while (!rest.empty()) {
    const ssize_t w = ::write(fd_, rest.data(), rest.size());
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoFailure, "audit write failed: " + std::string(std::strerror(errno)));
    }
    rest.remove_prefix(static_cast<std::size_t>(w));
  }
  if (::fdatasync(fd_) != 0) throw Error(ErrorCode::IoFailure, "audit sync failed: " + std::string(std::strerror(errno)));
}

// ---------------------------------------------------------------------------
// Config

fs::path ServiceConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : data_root / p; }

ServiceConfig load_service_config(const fs::path& path) {
  ServiceConfig c;
  if (!path.empty()) {
    const json doc = read_json_file(path);
    try {
      if (doc.contains("data_root")) c.data_root = doc["data_root"].get<std::string>();
      if (doc.contains("port")) c.port = doc["port"].get<std::uint16_t>();
      if (doc.contains("users_file")) c.users_file = doc["users_file"].get<std::string>();
      if (doc.contains("rules_file")) c.rules_file = doc["rules_file"].get<std::string>();
      if (doc.contains("audit_file")) c.audit_file = doc["audit_file"].get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
  }
  if (const char* env = std::getenv("STRIPEHOUSE_ROOT"); env && *env) c.data_root = env;
  return c;
}

// ---------------------------------------------------------------------------
// Server

namespace {

json value_to_json(const Value& v, ColumnType type) {
  if (is_null(v)) return nullptr;
  if (type == ColumnType::Date) return format_value(v, type);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
  return std::get<std::string>(v);
}

std::string error_body(const Error& e) {
  return json{{"type", "error"}, {"code", error_code_name(e.code())}, {"message", e.what()}}.dump();
}

std::string ok_body() { return json{{"type", "ok"}}.dump(); }

}  // namespace

json result_to_json(const QueryResult& r) {
  json rows = json::array();
  for (const Row& row : r.table.rows) {
    json out = json::array();
    for (std::size_t c = 0; c < row.size(); ++c) out.push_back(value_to_json(row[c], r.table.types[c]));
    rows.push_back(std::move(out));
  }
  const QueryMetrics& m = r.metrics;
  return json{{"type", "result"},
              {"columns", r.table.columns},
              {"rows", rows},
              {"metrics",
               {{"response_time_s", m.response_time_s},
                {"rows_read", m.rows_read},
                {"bytes_read", m.bytes_read},
                {"stripes_total", m.stripes_total},
                {"stripes_pruned", m.stripes_pruned},
                {"shuffle_rows", m.shuffle_rows},
                {"peak_group_count", m.peak_group_count},
                {"cost_estimate", r.cost.total}}}};
}

Server::Server(ServiceConfig config)
    : config_(std::move(config)),
      catalog_(config_.data_root),
      users_(load_users(config_.resolve(config_.users_file))),
      rules_(config_.resolve(config_.rules_file)),
      audit_(config_.resolve(config_.audit_file)) {}

Server::~Server() { stop(); }

AuditRecord Server::begin(const Session& s, std::string action, std::string detail) const {
  AuditRecord r;
  r.user = s.who ? s.who->user : "";
  r.action = std::move(action);
  r.detail = std::move(detail);
  return r;
}

std::optional<std::string> Server::handle(Session& s, std::string_view body, bool& close) {
  const auto start = std::chrono::steady_clock::now();
  close = false;
  std::optional<AuditRecord> rec;
  std::string response;

  const auto finish = [&](std::string decision) -> std::optional<std::string> {
    rec->decision = std::move(decision);
    rec->ts = utc_timestamp_now();
    rec->duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      audit_.append(*rec);
    } catch (const Error&) {
      close = true;
      return std::nullopt;  // fail closed: no response without its audit record
    }
    return response;
  };

  json req;
  std::string type;
  try {
    req = json::parse(body);
    type = req.at("type").get<std::string>();
  } catch (const json::exception& e) {
    rec = begin(s, "PROTOCOL", std::string(body.substr(0, 256)));
    response = error_body(Error(ErrorCode::Protocol, std::string("malformed request: ") + e.what()));
    close = true;
    return finish("ERROR");
  }

  if (type == "ping") {
    rec = begin(s, "PING", "");
    response = ok_body();
    return finish("ALLOWED");
  }

  if (type == "hello") {
    const std::string user = req.value("user", "");
    const std::string token = req.value("token", "");
    if (auto cred = authenticate(users_, user, token)) {
      s.who = std::move(cred);
      rec = begin(s, "HELLO", "");
      response = ok_body();
      return finish("ALLOWED");
    }
    s.who.reset();
    rec = begin(s, "AUTH_FAIL", "hello");
    rec->user = user;
    response = error_body(Error(ErrorCode::Auth, "unknown user or bad token"));
    return finish("DENIED");
  }

  if (type == "query") {
    const std::string sql = req.contains("sql") && req["sql"].is_string() ? req["sql"].get<std::string>() : "";
    if (!s.who) {
      rec = begin(s, "AUTH_FAIL", sql);
      response = error_body(Error(ErrorCode::Auth, "send hello before query"));
      return finish("DENIED");
    }
    rec = begin(s, "QUERY", sql);
    try {
      if (!req.contains("sql") || !req["sql"].is_string()) throw Error(ErrorCode::Protocol, "query needs a sql string");
      const QueryAst ast = parse(sql);
      if (!authorize(s.who->user, referenced_tables(ast), rules_.snapshot())) {
        response = error_body(Error(ErrorCode::Forbidden, "user " + s.who->user + " may not read every table"));
        return finish("DENIED");
      }
      ExecConfig cfg;
      if (req.contains("executors")) cfg.executors = req["executors"].get<std::uint32_t>();
      if (req.contains("cores")) cfg.cores_per_executor = req["cores"].get<std::uint32_t>();
      if (req.contains("mem_rows")) cfg.executor_mem_rows = req["mem_rows"].get<std::uint64_t>();
      catalog_.reload();
      if (!s.engine) s.engine = std::make_unique<Engine>(config_.data_root / "shuffle");
      const ResolvedQuery q = validate(ast, catalog_);
      const PhysicalPlan p = plan(q, catalog_, cfg);
      response = result_to_json(s.engine->execute(p, cfg)).dump();
      return finish("ALLOWED");
    } catch (const Error& e) {
      response = error_body(e);
      if (e.code() == ErrorCode::Protocol) close = true;
      return finish("ERROR");
    } catch (const json::exception& e) {
      response = error_body(Error(ErrorCode::Protocol, std::string("bad query option: ") + e.what()));
      close = true;
      return finish("ERROR");
    }
  }

  if (type == "grant" || type == "deny") {
    const std::string action = type == "grant" ? "GRANT" : "DENY";
    const std::string detail = req.contains("rule") ? req["rule"].dump() : "";
    if (!s.who) {
      rec = begin(s, "AUTH_FAIL", detail);
      response = error_body(Error(ErrorCode::Auth, "send hello before " + type));
      return finish("DENIED");
    }
    rec = begin(s, action, detail);
    if (s.who->role != Role::Admin) {
      response = error_body(Error(ErrorCode::Forbidden, type + " requires the ADMIN role"));
      return finish("DENIED");
    }
    try {
      json rj = req.at("rule");
      rj["effect"] = type == "grant" ? "ALLOW" : "DENY";
      const AccessRule rule = rule_from_json(rj);
      rec->detail = rule_text(rule);
      rules_.add(rule);
      response = ok_body();
      return finish("ALLOWED");
    } catch (const Error& e) {
      response = error_body(e);
      return finish("ERROR");
    } catch (const json::exception& e) {
      response = error_body(Error(ErrorCode::Protocol, std::string("bad rule: ") + e.what()));
      close = true;
      return finish("ERROR");
    }
  }

  rec = begin(s, "PROTOCOL", type);
  response = error_body(Error(ErrorCode::Protocol, "unknown request type " + type));
  close = true;
  return finish("ERROR");
}

std::uint16_t Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoFailure, "socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(config_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::IoFailure, "cannot listen on port " + std::to_string(config_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  config_.port = ntohs(addr.sin_port);
  return config_.port;
}

void Server::run() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 200);
    if (ready <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(sessions_mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd] { serve_session(fd); });
  }
}

void Server::serve_session(int fd) {
  Session s;
  try {
    for (;;) {
      std::optional<std::string> body;
      try {
        body = read_frame(fd);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Protocol) break;
        // Oversized or truncated frame: report, audit, hang up.
        AuditRecord r = begin(s, "PROTOCOL", e.what());
        r.decision = "ERROR";
        r.ts = utc_timestamp_now();
        audit_.append(r);
        write_frame(fd, error_body(e));
        break;
      }
      if (!body) break;
      bool close = false;
      const auto response = handle(s, *body, close);
      if (!response) break;
      write_frame(fd, *response);
      if (close) break;
    }
  } catch (const std::exception&) {
    // A broken connection ends only this session.
  }
  ::shutdown(fd, SHUT_RDWR);
}

void Server::stop() {
  stopping_ = true;
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(sessions_mu_);
    for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(sessions_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(sessions_mu_);
  for (int fd : session_fds_) ::close(fd);
  session_fds_.clear();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

// ---------------------------------------------------------------------------
// Client

Client::Client(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::IoFailure, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd_ = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, "cannot connect to " + host + ":" + service);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send_raw(std::string_view bytes) { write_full(fd_, bytes); }

std::optional<json> Client::receive() {
  auto body = read_frame(fd_);
  if (!body) return std::nullopt;
  try {
    return json::parse(*body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Protocol, std::string("server sent malformed JSON: ") + e.what());
  }
}

json Client::request(const json& body) {
  write_frame(fd_, body.dump());
  auto reply = receive();
  if (!reply) throw Error(ErrorCode::Protocol, "server closed the connection");
  return *reply;
}

}  // namespace stripehouse
