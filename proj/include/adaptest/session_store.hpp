#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptest/adaptive.hpp"
#include "adaptest/errors.hpp"
#include "adaptest/model_io.hpp"

namespace adaptest {

struct SessionRecord {
  std::string session_id;
  std::string questionnaire_id;
  int format_version = kFormatVersion;
  std::vector<TranscriptEntry> transcript;
  SessionStatus status = SessionStatus::active;
  std::int64_t created_at_ms = 0;
  std::int64_t updated_at_ms = 0;
  // Set once the session has stopped.
  std::optional<double> grade;
  std::map<std::string, double> risks;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

nlohmann::json to_json(const SessionRecord& record);
// Throws StructuralError on a malformed record.
SessionRecord session_record_from_json(const nlohmann::json& j);

// Snapshot of a live session; grade and risks are filled in when it has
// stopped.
SessionRecord make_session_record(const QuestionnaireModel& model, const Session& session,
                                  std::string session_id, std::string questionnaire_id,
                                  std::int64_t created_at_ms, std::int64_t updated_at_ms);

class ReplayMismatchError : public Error {
 public:
  using Error::Error;
};

// Re-asks the recorded questions with the recorded answers and checks that
// every gain, entropy, the status and the grade agree within `tolerance`.
Session replay_transcript(const QuestionnaireModel& model, const SessionRecord& record,
                          double tolerance = 1e-9);

// Persistence handle. Implementations serialize writes internally and allow
// concurrent reads.
class SessionStore {
 public:
  virtual ~SessionStore() = default;
  // Inserts or replaces the record with the same session id.
  virtual void put(const SessionRecord& record) = 0;
  virtual std::optional<SessionRecord> get(const std::string& session_id) const = 0;
  virtual std::vector<SessionRecord> all() const = 0;
};

class InMemorySessionStore : public SessionStore {
 public:
  void put(const SessionRecord& record) override;
  std::optional<SessionRecord> get(const std::string& session_id) const override;
  std::vector<SessionRecord> all() const override;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, SessionRecord> records_;
};

// Append-only file, one JSON record per line; the last line for a session id
// wins. Existing content is loaded on construction.
class FileSessionStore : public SessionStore {
 public:
  explicit FileSessionStore(std::string path);

  void put(const SessionRecord& record) override;
  std::optional<SessionRecord> get(const std::string& session_id) const override;
  std::vector<SessionRecord> all() const override;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  InMemorySessionStore index_;
  std::mutex write_mutex_;
};

void save_session(SessionStore& store, const SessionRecord& record);

// Throws NotFoundError for an unknown id.
SessionRecord load_session(const SessionStore& store, const std::string& session_id);

// Additionally throws VersionConflictError when the record was written
// against a different questionnaire or format version.
SessionRecord load_session(const SessionStore& store, const std::string& session_id,
                           const std::string& questionnaire_id, int format_version);

// Session ids ordered by creation time, then id.
std::vector<std::string> list_sessions(const SessionStore& store);

}  // namespace adaptest
