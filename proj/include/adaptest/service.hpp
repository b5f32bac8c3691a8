#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptest/adaptive.hpp"
#include "adaptest/session_store.hpp"

namespace adaptest {

// Error carrying its HTTP status. `details` is attached to the error body
// (e.g. the diagnostics of a rejected document).
class ApiError : public Error {
 public:
  ApiError(int status, std::string code, const std::string& message,
           nlohmann::json details = nullptr);

  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& details() const { return details_; }

 private:
  int status_;
  std::string code_;
  nlohmann::json details_;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;  // null for 204
};

enum class SurveyStatus { draft, published };

std::string_view to_string(SurveyStatus status);

// REST contract of the questionnaire service, independent of the transport.
//
//   POST   /surveys                  create from a questionnaire document
//   GET    /surveys                  list
//   GET    /surveys/{id}             fetch, including the canonical document
//   PUT    /surveys/{id}             replace the document of a draft
//   POST   /surveys/{id}/publish     freeze; sessions may attach afterwards
//   DELETE /surveys/{id}             only while no session references it
//   POST   /surveys/{id}/sessions    start a session, returns the first step
//   POST   /sessions/{id}/answers    {question_id, answer}
//   GET    /sessions/{id}/next       current step
//   GET    /sessions/{id}/explain    posteriors and candidate gains
//   GET    /sessions/{id}/result     grade, risks and transcript once stopped
//
// Survey reads share a lock and survey mutations take it exclusively; each
// session has its own mutex, so distinct sessions proceed in parallel.
class SurveyService {
 public:
  using Clock = std::function<std::int64_t()>;  // milliseconds

  explicit SurveyService(std::shared_ptr<SessionStore> store = nullptr, Clock clock = nullptr);
  ~SurveyService();

  SurveyService(const SurveyService&) = delete;
  SurveyService& operator=(const SurveyService&) = delete;

  // Never throws; every failure becomes an error response.
  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body);

  nlohmann::json create_survey(std::string_view document);
  nlohmann::json list_surveys() const;
  nlohmann::json get_survey(const std::string& id) const;
  nlohmann::json replace_survey(const std::string& id, std::string_view document);
  nlohmann::json publish_survey(const std::string& id);
  void delete_survey(const std::string& id);

  nlohmann::json start_session(const std::string& survey_id);
  nlohmann::json submit_answer(const std::string& session_id, const nlohmann::json& request);
  nlohmann::json next(const std::string& session_id) const;
  nlohmann::json explanation(const std::string& session_id) const;
  nlohmann::json result(const std::string& session_id) const;

 private:
  struct Survey;
  struct LiveSession;

  std::shared_ptr<Survey> find_survey(const std::string& id) const;
  std::shared_ptr<LiveSession> find_session(const std::string& id) const;
  void persist(const LiveSession& s) const;

  std::shared_ptr<SessionStore> store_;
  Clock clock_;

  mutable std::shared_mutex surveys_mutex_;
  std::map<std::string, std::shared_ptr<Survey>> surveys_;
  std::uint64_t next_survey_ = 1;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t next_session_ = 1;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_path;  // empty: in-memory
  std::vector<std::string> cors_origins;  // "*" allows any origin
};

// ADAPTEST_LISTEN (host:port), ADAPTEST_STORE, ADAPTEST_CORS_ORIGINS
// (comma separated) override the corresponding fields of `base`.
ServiceConfig service_config_from_env(ServiceConfig base = {});

// Parses "host:port" or ":port". Throws StructuralError.
void parse_listen_address(std::string_view address, ServiceConfig& config);

// HTTP front end over a SurveyService.
class HttpServer {
 public:
  HttpServer(SurveyService& service, ServiceConfig config);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds config.host:config.port (0 picks a free port) and returns the port.
  int bind();
  // Serves until stop(); call bind() first.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adaptest
