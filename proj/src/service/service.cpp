#include "adaptest/service.hpp"

#include <chrono>

#include "adaptest/model_io.hpp"

namespace adaptest {

using nlohmann::json;

ApiError::ApiError(int status, std::string code, const std::string& message, json details)
    : Error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}

std::string_view to_string(SurveyStatus status) {
  return status == SurveyStatus::draft ? "draft" : "published";
}

struct SurveyService::Survey {
  std::string id;
  SurveyStatus status = SurveyStatus::draft;
  json document;  // canonical form
  std::shared_ptr<const QuestionnaireModel> model;
  std::int64_t created_at_ms = 0;
  std::int64_t updated_at_ms = 0;
  std::size_t sessions = 0;
};

struct SurveyService::LiveSession {
  LiveSession(std::string id_, std::string survey_id_,
              std::shared_ptr<const QuestionnaireModel> model_, std::int64_t now)
      : id(std::move(id_)),
        survey_id(std::move(survey_id_)),
        model(std::move(model_)),
        session(*model),
        created_at_ms(now),
        updated_at_ms(now) {}

  const std::string id;
  const std::string survey_id;
  const std::shared_ptr<const QuestionnaireModel> model;

  std::mutex mutex;
  Session session;
  std::optional<std::string> offered;
  json current;  // response describing the current step
  // Accepted answers by question id, with the response that acknowledged them.
  std::map<std::string, std::pair<std::size_t, json>> accepted;
  std::int64_t created_at_ms;
  std::int64_t updated_at_ms;
};

namespace {

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

json diagnostics_json(const std::vector<Diagnostic>& diagnostics) {
  json out = json::array();
  for (const auto& d : diagnostics) {
    json j = {{"code", d.code}, {"path", d.path}, {"message", d.message}};
    if (d.line) j["line"] = *d.line;
    if (d.column) j["column"] = *d.column;
    out.push_back(std::move(j));
  }
  return out;
}

std::shared_ptr<const QuestionnaireModel> parse_or_422(std::string_view document) {
  ParseResult r = parse_questionnaire(document);
  if (!r.ok())
    throw ApiError(422, "validation_failed", "questionnaire document rejected",
                   {{"diagnostics", diagnostics_json(r.diagnostics)}});
  return std::make_shared<const QuestionnaireModel>(std::move(*r.model));
}

json survey_summary(const std::string& id, SurveyStatus status, const QuestionnaireModel& model,
                    std::int64_t created, std::int64_t updated, std::size_t sessions) {
  return {{"id", id},
          {"status", std::string(to_string(status))},
          {"title", model.metadata().title},
          {"created_at_ms", created},
          {"updated_at_ms", updated},
          {"session_count", sessions}};
}

json risks_json(const std::map<std::string, double>& risks) {
  json out = json::object();
  for (const auto& [k, v] : risks) out[k] = v;
  return out;
}

// Index of `answer` (a state index, state label or option label) for q.
std::optional<std::size_t> resolve_answer(const QuestionnaireModel& model, const std::string& q,
                                          const json& answer) {
  const auto& states = model.network().variable(q).states;
  const auto& options = model.question(q).options;
  if (answer.is_number_unsigned()) {
    const auto i = answer.get<std::size_t>();
    if (i < states.size()) return i;
    return std::nullopt;
  }
  if (answer.is_string()) {
    const auto s = answer.get<std::string>();
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == s) return i;
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i] == s) return i;
  }
  return std::nullopt;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto end = path.find('/', start);
    const auto piece = path.substr(start, end == std::string_view::npos ? path.npos : end - start);
    if (!piece.empty()) out.emplace_back(piece);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

json error_body(const std::string& code, const std::string& message, const json& details) {
  json e = {{"code", code}, {"message", message}};
  if (details.is_object())
    for (const auto& [k, v] : details.items()) e[k] = v;
  return {{"error", std::move(e)}};
}

}  // namespace

SurveyService::SurveyService(std::shared_ptr<SessionStore> store, Clock clock)
    : store_(store ? std::move(store) : std::make_shared<InMemorySessionStore>()),
      clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {}

SurveyService::~SurveyService() = default;

std::shared_ptr<SurveyService::Survey> SurveyService::find_survey(const std::string& id) const {
  auto it = surveys_.find(id);
  if (it == surveys_.end()) throw ApiError(404, "not_found", "unknown survey " + id);
  return it->second;
}

std::shared_ptr<SurveyService::LiveSession> SurveyService::find_session(
    const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "not_found", "unknown session " + id);
  return it->second;
}

json SurveyService::create_survey(std::string_view document) {
  auto model = parse_or_422(document);
  std::unique_lock lock(surveys_mutex_);
  auto s = std::make_shared<Survey>();
  s->id = "sv-" + std::to_string(next_survey_++);
  s->document = questionnaire_to_json(*model);
  s->model = std::move(model);
  s->created_at_ms = s->updated_at_ms = clock_();
  surveys_[s->id] = s;
  json out = survey_summary(s->id, s->status, *s->model, s->created_at_ms, s->updated_at_ms, 0);
  out["document"] = s->document;
  return out;
}

json SurveyService::list_surveys() const {
  std::shared_lock lock(surveys_mutex_);
  json items = json::array();
  for (const auto& [id, s] : surveys_)
    items.push_back(
        survey_summary(id, s->status, *s->model, s->created_at_ms, s->updated_at_ms, s->sessions));
  return {{"surveys", std::move(items)}};
}

json SurveyService::get_survey(const std::string& id) const {
  std::shared_lock lock(surveys_mutex_);
  auto s = find_survey(id);
  json out = survey_summary(id, s->status, *s->model, s->created_at_ms, s->updated_at_ms, s->sessions);
  out["document"] = s->document;
  return out;
}

json SurveyService::replace_survey(const std::string& id, std::string_view document) {
  {
    std::shared_lock lock(surveys_mutex_);
    if (find_survey(id)->status == SurveyStatus::published)
      throw ApiError(409, "survey_published", "published survey " + id + " is immutable");
  }
  auto model = parse_or_422(document);
  std::unique_lock lock(surveys_mutex_);
  auto s = find_survey(id);
  // Re-checked: a publish may have slipped in while parsing.
  if (s->status == SurveyStatus::published)
    throw ApiError(409, "survey_published", "published survey " + id + " is immutable");
  s->document = questionnaire_to_json(*model);
  s->model = std::move(model);
  s->updated_at_ms = clock_();
  json out = survey_summary(id, s->status, *s->model, s->created_at_ms, s->updated_at_ms, s->sessions);
  out["document"] = s->document;
  return out;
}

json SurveyService::publish_survey(const std::string& id) {
  std::unique_lock lock(surveys_mutex_);
  auto s = find_survey(id);
  if (s->status == SurveyStatus::published)
    throw ApiError(409, "survey_published", "survey " + id + " is already published");
  s->status = SurveyStatus::published;
  s->updated_at_ms = clock_();
  return survey_summary(id, s->status, *s->model, s->created_at_ms, s->updated_at_ms, s->sessions);
}

void SurveyService::delete_survey(const std::string& id) {
  std::unique_lock lock(surveys_mutex_);
  auto s = find_survey(id);
  if (s->sessions > 0)
    throw ApiError(409, "survey_has_sessions",
                   "survey " + id + " has " + std::to_string(s->sessions) + " session(s)");
  surveys_.erase(id);
}

namespace {

json step_json(const std::string& session_id, const QuestionnaireModel& model,
               const Session& session, std::optional<std::string>& offered) {
  json out = {{"session_id", session_id},
              {"asked", session.transcript().size()},
              {"terminal", !session.active()}};
  if (session.active()) {
    const auto pick = pick_question(model, session);
    offered = pick->question_id;
    const auto& q = model.question(pick->question_id);
    const auto& states = model.network().variable(q.id).states;
    json options = json::array();
    for (std::size_t i = 0; i < states.size(); ++i)
      options.push_back({{"index", i}, {"state", states[i]}, {"label", q.options[i]}});
    out["question"] = {{"id", q.id}, {"text", q.text}, {"options", std::move(options)}};
  } else {
    offered.reset();
    out["stop_reason"] = std::string(to_string(session.status()));
    out["grade"] = grade(model, session.evidence());
    out["risks"] = risks_json(marginal_risks(model, session.evidence()));
  }
  return out;
}

}  // namespace

void SurveyService::persist(const LiveSession& s) const {
  store_->put(make_session_record(*s.model, s.session, s.id, s.survey_id, s.created_at_ms,
                                  s.updated_at_ms));
}

json SurveyService::start_session(const std::string& survey_id) {
  std::shared_ptr<const QuestionnaireModel> model;
  std::string id;
  {
    std::unique_lock lock(surveys_mutex_);
    auto s = find_survey(survey_id);
    if (s->status != SurveyStatus::published)
      throw ApiError(409, "survey_not_published", "survey " + survey_id + " is not published");
    ++s->sessions;
    model = s->model;
  }
  {
    std::unique_lock lock(sessions_mutex_);
    id = "ss-" + std::to_string(next_session_++);
  }
  auto live = std::make_shared<LiveSession>(id, survey_id, model, clock_());
  std::lock_guard session_lock(live->mutex);
  live->current = step_json(id, *model, live->session, live->offered);
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[id] = live;
  }
  persist(*live);
  return live->current;
}

json SurveyService::submit_answer(const std::string& session_id, const json& request) {
  auto live = find_session(session_id);
  if (!request.is_object() || !request.contains("question_id") ||
      !request["question_id"].is_string() || !request.contains("answer"))
    throw ApiError(422, "invalid_request",
                   "expected {\"question_id\": string, \"answer\": index or label}");
  for (const auto& [key, _] : request.items())
    if (key != "question_id" && key != "answer")
      throw ApiError(422, "invalid_request", "unknown field \"" + key + "\"");
  const auto q = request["question_id"].get<std::string>();
  const json& answer = request["answer"];

  std::lock_guard lock(live->mutex);
  const QuestionnaireModel& model = *live->model;
  if (auto it = live->accepted.find(q); it != live->accepted.end()) {
    const auto index = resolve_answer(model, q, answer);
    if (index == it->second.first) return it->second.second;
    throw ApiError(409, "already_answered",
                   "question " + q + " was already answered with a different state");
  }
  if (!live->session.active())
    throw ApiError(409, "session_terminal", "session " + session_id + " has stopped");
  if (q != live->offered)
    throw ApiError(409, "not_offered", "question " + q + " is not the offered question",
                   {{"offered", *live->offered}});
  const auto index = resolve_answer(model, q, answer);
  if (!index)
    throw ApiError(422, "invalid_answer", "answer " + answer.dump() + " is not a state of " + q);
  try {
    live->session.record_answer(model, q, *index);
  } catch (const InconsistentEvidenceError& e) {
    throw ApiError(422, "impossible_answer", e.what());
  }
  live->updated_at_ms = clock_();
  live->current = step_json(session_id, model, live->session, live->offered);
  live->accepted[q] = {*index, live->current};
  persist(*live);
  return live->current;
}

json SurveyService::next(const std::string& session_id) const {
  auto live = find_session(session_id);
  std::lock_guard lock(live->mutex);
  return live->current;
}

json SurveyService::explanation(const std::string& session_id) const {
  auto live = find_session(session_id);
  std::lock_guard lock(live->mutex);
  const QuestionnaireModel& model = *live->model;
  const ExplanationReport r = explain(model, live->session);
  json posteriors = json::array();
  for (const auto& p : r.skill_posteriors)
    posteriors.push_back({{"skill_id", p.skill_id},
                          {"states", model.network().variable(p.skill_id).states},
                          {"distribution", p.distribution}});
  json candidates = json::array();
  for (const auto& c : r.per_candidate)
    candidates.push_back({{"question_id", c.question_id}, {"gain", c.gain}});
  return {{"session_id", session_id},
          {"skill_posteriors", std::move(posteriors)},
          {"joint_entropy", r.joint_entropy},
          {"stop_threshold", model.stop_threshold()},
          {"stop_margin", r.stop_margin},
          {"per_candidate", std::move(candidates)},
          {"show_explanation", model.show_explanation()}};
}

json SurveyService::result(const std::string& session_id) const {
  auto live = find_session(session_id);
  std::lock_guard lock(live->mutex);
  if (live->session.active())
    throw ApiError(409, "not_terminal", "session " + session_id + " is not terminal");
  const QuestionnaireModel& model = *live->model;
  json transcript = json::array();
  for (const auto& t : live->session.transcript())
    transcript.push_back({{"question_id", t.question_id},
                          {"answer", t.answer},
                          {"state", model.network().variable(t.question_id).states[t.answer]},
                          {"gain", t.gain},
                          {"entropy_after", t.entropy_after}});
  return {{"session_id", session_id},
          {"survey_id", live->survey_id},
          {"stop_reason", std::string(to_string(live->session.status()))},
          {"grade", grade(model, live->session.evidence())},
          {"risks", risks_json(marginal_risks(model, live->session.evidence()))},
          {"transcript", std::move(transcript)}};
}

ApiResponse SurveyService::handle(std::string_view method, std::string_view path,
                                  std::string_view body) {
  const auto seg = split_path(path);
  auto is = [&](std::string_view m) { return method == m; };
  auto parse_body = [&]() {
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw ApiError(400, "malformed_json", e.what());
    }
  };
  auto not_allowed = [&]() -> ApiResponse {
    throw ApiError(405, "method_not_allowed",
                   std::string(method) + " is not allowed on " + std::string(path));
  };

  try {
    if (!seg.empty() && seg[0] == "surveys") {
      if (seg.size() == 1) {
        if (is("POST")) return {201, create_survey(body)};
        if (is("GET")) return {200, list_surveys()};
        return not_allowed();
      }
      if (seg.size() == 2) {
        if (is("GET")) return {200, get_survey(seg[1])};
        if (is("PUT")) return {200, replace_survey(seg[1], body)};
        if (is("DELETE")) {
          delete_survey(seg[1]);
          return {204, nullptr};
        }
        return not_allowed();
      }
      if (seg.size() == 3 && seg[2] == "publish") {
        if (is("POST")) return {200, publish_survey(seg[1])};
        return not_allowed();
      }
      if (seg.size() == 3 && seg[2] == "sessions") {
        if (is("POST")) return {201, start_session(seg[1])};
        return not_allowed();
      }
    }
    if (seg.size() == 3 && seg[0] == "sessions") {
      if (seg[2] == "answers") {
        if (is("POST")) return {200, submit_answer(seg[1], parse_body())};
        return not_allowed();
      }
      if (seg[2] == "next" || seg[2] == "explain" || seg[2] == "result") {
        if (!is("GET")) return not_allowed();
        if (seg[2] == "next") return {200, next(seg[1])};
        if (seg[2] == "explain") return {200, explanation(seg[1])};
        return {200, result(seg[1])};
      }
    }
    throw ApiError(404, "not_found", "no route for " + std::string(path));
  } catch (const ApiError& e) {
    return {e.status(), error_body(e.code(), e.what(), e.details())};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what(), nullptr)};
  }
}

}  // namespace adaptest
