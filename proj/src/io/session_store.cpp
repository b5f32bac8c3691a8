#include "adaptest/session_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace adaptest {

using nlohmann::json;

json to_json(const SessionRecord& r) {
  json transcript = json::array();
  for (const auto& t : r.transcript) {
    transcript.push_back({{"question_id", t.question_id},
                          {"answer", t.answer},
                          {"gain", t.gain},
                          {"entropy_after", t.entropy_after}});
  }
  json j = {{"session_id", r.session_id},
            {"questionnaire_id", r.questionnaire_id},
            {"format_version", r.format_version},
            {"transcript", std::move(transcript)},
            {"status", std::string(to_string(r.status))},
            {"created_at_ms", r.created_at_ms},
            {"updated_at_ms", r.updated_at_ms},
            {"grade", r.grade ? json(*r.grade) : json(nullptr)},
            {"risks", r.risks}};
  return j;
}

SessionRecord session_record_from_json(const json& j) {
  try {
    SessionRecord r;
    j.at("session_id").get_to(r.session_id);
    j.at("questionnaire_id").get_to(r.questionnaire_id);
    j.at("format_version").get_to(r.format_version);
    for (const auto& t : j.at("transcript")) {
      r.transcript.push_back({t.at("question_id").get<std::string>(), t.at("answer").get<std::size_t>(),
                              t.at("gain").get<double>(), t.at("entropy_after").get<double>()});
    }
    const auto status = session_status_from_string(j.at("status").get<std::string>());
    if (!status) throw StructuralError("unknown session status " + j.at("status").dump());
    r.status = *status;
    j.at("created_at_ms").get_to(r.created_at_ms);
    j.at("updated_at_ms").get_to(r.updated_at_ms);
    if (!j.at("grade").is_null()) r.grade = j.at("grade").get<double>();
    j.at("risks").get_to(r.risks);
    return r;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed session record: ") + e.what());
  }
}

SessionRecord make_session_record(const QuestionnaireModel& model, const Session& session,
                                  std::string session_id, std::string questionnaire_id,
                                  std::int64_t created_at_ms, std::int64_t updated_at_ms) {
  SessionRecord r;
  r.session_id = std::move(session_id);
  r.questionnaire_id = std::move(questionnaire_id);
  r.transcript = session.transcript();
  r.status = session.status();
  r.created_at_ms = created_at_ms;
  r.updated_at_ms = updated_at_ms;
  if (!session.active()) {
    r.grade = grade(model, session.evidence());
    r.risks = marginal_risks(model, session.evidence());
  }
  return r;
}

namespace {

void expect_close(double expected, double actual, double tolerance, const std::string& what) {
  if (!(std::abs(expected - actual) <= tolerance))
    throw ReplayMismatchError(what + ": recorded " + std::to_string(expected) + ", replayed " +
                              std::to_string(actual));
}

}  // namespace

Session replay_transcript(const QuestionnaireModel& model, const SessionRecord& record,
                          double tolerance) {
  Session session(model);
  for (std::size_t i = 0; i < record.transcript.size(); ++i) {
    const TranscriptEntry& want = record.transcript[i];
    const std::string step = "step " + std::to_string(i) + " (" + want.question_id + ")";
    TranscriptEntry got;
    try {
      got = session.record_answer(model, want.question_id, want.answer);
    } catch (const Error& e) {
      throw ReplayMismatchError(step + ": " + e.what());
    }
    expect_close(want.gain, got.gain, tolerance, step + " gain");
    expect_close(want.entropy_after, got.entropy_after, tolerance, step + " entropy");
  }
  if (session.status() != record.status)
    throw ReplayMismatchError("status: recorded " + std::string(to_string(record.status)) +
                              ", replayed " + std::string(to_string(session.status())));
  if (record.grade) {
    if (session.active()) throw ReplayMismatchError("grade recorded for an active session");
    expect_close(*record.grade, grade(model, session.evidence()), tolerance, "grade");
  }
  return session;
}

void InMemorySessionStore::put(const SessionRecord& record) {
  std::unique_lock lock(mutex_);
  records_.insert_or_assign(record.session_id, record);
}

std::optional<SessionRecord> InMemorySessionStore::get(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find(session_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<SessionRecord> InMemorySessionStore::all() const {
  std::shared_lock lock(mutex_);
  std::vector<SessionRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, r] : records_) out.push_back(r);
  return out;
}

FileSessionStore::FileSessionStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      index_.put(session_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw StructuralError(path_ + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void FileSessionStore::put(const SessionRecord& record) {
  std::lock_guard lock(write_mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot open session store " + path_);
  out << to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw Error("write to session store " + path_ + " failed");
  index_.put(record);
}

std::optional<SessionRecord> FileSessionStore::get(const std::string& session_id) const {
  return index_.get(session_id);
}

std::vector<SessionRecord> FileSessionStore::all() const { return index_.all(); }

void save_session(SessionStore& store, const SessionRecord& record) { store.put(record); }

SessionRecord load_session(const SessionStore& store, const std::string& session_id) {
  auto r = store.get(session_id);
  if (!r) throw NotFoundError("unknown session " + session_id);
  return std::move(*r);
}

SessionRecord load_session(const SessionStore& store, const std::string& session_id,
                           const std::string& questionnaire_id, int format_version) {
  SessionRecord r = load_session(store, session_id);
  if (r.questionnaire_id != questionnaire_id || r.format_version != format_version)
    throw VersionConflictError("session " + session_id + " was recorded against " +
                               r.questionnaire_id + " v" + std::to_string(r.format_version) +
                               ", not " + questionnaire_id + " v" +
                               std::to_string(format_version));
  return r;
}

std::vector<std::string> list_sessions(const SessionStore& store) {
  auto records = store.all();
  std::sort(records.begin(), records.end(), [](const SessionRecord& a, const SessionRecord& b) {
    if (a.created_at_ms != b.created_at_ms) return a.created_at_ms < b.created_at_ms;
    return a.session_id < b.session_id;
  });
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.session_id);
  return ids;
}

}  // namespace adaptest
