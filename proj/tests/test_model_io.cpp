#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "adaptest/inference.hpp"
#include "adaptest/model_io.hpp"
#include "adaptest/session_store.hpp"
#include "support/models.hpp"

using namespace adaptest;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string model_path(const std::string& name) {
  return std::string(ADAPTEST_MODELS_DIR) + "/" + name;
}

ParseResult parse_fixture(const std::string& code) {
  return parse_questionnaire(
      read_file(fs::path(ADAPTEST_FIXTURES_DIR) / "diagnostics" / (code + ".json")));
}

std::set<std::string> codes(const ParseResult& r) {
  std::set<std::string> out;
  for (const auto& d : r.diagnostics) out.insert(d.code);
  return out;
}

double max_posterior_difference(const QuestionnaireModel& a, const QuestionnaireModel& b,
                                const Evidence& e) {
  return max_abs_difference(posterior(a.network(), a.skills(), e),
                            posterior(b.network(), b.skills(), e));
}

const char* const kDiagnosticCodes[] = {
    "syntax_error",      "duplicate_key",    "unsupported_version",     "unknown_field",
    "missing_field",     "wrong_type",       "invalid_value",           "duplicate_id",
    "unknown_reference", "parameterization", "cpt_shape",               "dg_invalid",
    "dg_infeasible",     "evaluation_shape", "risk_state_out_of_range", "network_invalid",
    "model_invalid"};

}  // namespace

TEST_CASE("shipped models parse cleanly") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(ADAPTEST_MODELS_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    CAPTURE(entry.path().string());
    ParseResult r = parse_questionnaire(read_file(entry.path()));
    for (const auto& d : r.diagnostics) MESSAGE(d.to_string());
    CHECK(r.ok());
  }
  CHECK(count >= 4);
}

TEST_CASE("NET-A document") {
  auto model = load_questionnaire_file(model_path("net_a.json"));
  CHECK(model.skills() == std::vector<std::string>{"S"});
  REQUIRE(model.pool().size() == 2);
  CHECK(model.pool()[0].id == "Q1");
  CHECK(model.pool()[0].options == std::vector<std::string>{"Yes", "No"});
  CHECK(model.stop_threshold() == 0.5);
  CHECK(model.network() == testing::net_a());

  Session s(model);
  REQUIRE(pick_question(model, s)->question_id == "Q1");
  s.record_answer(model, "Q1", 0);
  CHECK(s.status() == SessionStatus::stopped_entropy);
  CHECK(grade(model, s.evidence()) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("NET-B document has 7 variables and 6 edges") {
  auto model = load_questionnaire_file(model_path("net_b.json"));
  CHECK(model.network().size() == 7);
  CHECK(model.network().edge_count() == 6);
  CHECK(model.network() == testing::net_b_uniform());
  CHECK(posterior_entropy(model, {}) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("delta/gamma questions are compiled") {
  auto model = load_questionnaire_file(model_path("algebra_geometry_dg.json"));
  const auto& q = model.question("solve_linear");
  REQUIRE(q.dg.has_value());
  CHECK(q.dg->mastery_states == std::vector<std::size_t>{0});
  const Factor& cpt = model.network().cpt("solve_linear");
  CHECK(cpt[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(cpt[2] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(model.max_questions() == std::optional<std::size_t>(4));
}

TEST_CASE("every documented diagnostic has a firing fixture") {
  for (const char* code : kDiagnosticCodes) {
    INFO("fixture ", code);
    ParseResult r = parse_fixture(code);
    CHECK_FALSE(r.ok());
    CHECK(codes(r) == std::set<std::string>{code});
  }
}

TEST_CASE("diagnostic details") {
  SUBCASE("syntax error carries line and column") {
    ParseResult r = parse_fixture("syntax_error");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].line == std::optional<std::size_t>(4));
    CHECK(r.diagnostics[0].column.has_value());
  }
  SUBCASE("double parameterization") {
    ParseResult r = parse_fixture("parameterization");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].path == "/questions/0");
    CHECK(r.diagnostics[0].message.find("exactly one parameterization") != std::string::npos);
  }
  SUBCASE("duplicate key path") {
    ParseResult r = parse_fixture("duplicate_key");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].path == "/stop_threshold");
  }
  SUBCASE("unknown field path") {
    ParseResult r = parse_fixture("unknown_field");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].path == "/questions/0/weight");
  }
  SUBCASE("infeasible pair names its configuration") {
    ParseResult r = parse_fixture("dg_infeasible");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].path == "/questions/0/dg/params/1");
    CHECK(r.diagnostics[0].message == "implied p = 1.4 > 1");
  }
  SUBCASE("denormalized row is a network violation") {
    ParseResult r = parse_fixture("network_invalid");
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].path == "/questions/1");
    CHECK(r.diagnostics[0].message.find("CPT row not normalized") != std::string::npos);
  }
  SUBCASE("load_questionnaire throws with the diagnostics attached") {
    try {
      load_questionnaire("{\"format_version\": 1}");
      FAIL("expected DocumentError");
    } catch (const DocumentError& e) {
      CHECK(e.diagnostics().size() >= 3);
      CHECK(codes({std::nullopt, e.diagnostics()}) == std::set<std::string>{"missing_field"});
    }
  }
  SUBCASE("not an object") {
    CHECK(codes(parse_questionnaire("[1, 2]")) == std::set<std::string>{"wrong_type"});
  }
  SUBCASE("normalization tolerance applies to hand-written rows") {
    std::string text = read_file(model_path("net_a.json"));
    const std::string row = "[0.9, 0.1]";
    text.replace(text.find(row), row.size(), "[0.9, 0.1000000000005]");
    CHECK(parse_questionnaire(text).ok());
  }
}

TEST_CASE("canonical serialization is idempotent and deterministic") {
  for (const auto& entry : fs::directory_iterator(ADAPTEST_MODELS_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    auto model = load_questionnaire(read_file(entry.path()));
    const std::string once = serialize_questionnaire(model);
    CHECK(serialize_questionnaire(model) == once);
    auto again = load_questionnaire(once);
    CHECK(again == model);
    CHECK(serialize_questionnaire(again) == once);
  }
}

TEST_CASE("round trip preserves posteriors on random models and evidence") {
  std::mt19937_64 rng(20261018);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto model = testing::random_questionnaire(rng);
    const std::string text = serialize_questionnaire(model);
    auto back = load_questionnaire(text);
    CHECK(back == model);
    CHECK(serialize_questionnaire(back) == text);
    for (int k = 0; k < 5; ++k) {
      Evidence e = testing::random_evidence(model, rng);
      worst = std::max(worst, max_posterior_difference(model, back, e));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("serializer emits dg instead of cpt for elicited questions") {
  auto model = load_questionnaire_file(model_path("algebra_geometry_dg.json"));
  auto json = questionnaire_to_json(model);
  CHECK(json["questions"][0].contains("dg"));
  CHECK_FALSE(json["questions"][0].contains("cpt"));
  CHECK(json["max_questions"] == 4);
  CHECK(json["entropy_mode"] == "joint");
}

namespace {

SessionRecord finished_net_a_record(const QuestionnaireModel& model, std::string id,
                                    std::int64_t created) {
  Session s(model);
  s.record_answer(model, "Q1", 0);
  return make_session_record(model, s, std::move(id), "net-a", created, created + 5);
}

}  // namespace

TEST_CASE("session records") {
  auto model = load_questionnaire_file(model_path("net_a.json"));
  SessionRecord record = finished_net_a_record(model, "s1", 1000);
  REQUIRE(record.grade.has_value());
  CHECK(*record.grade == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(record.risks.at("skilled") == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(record.status == SessionStatus::stopped_entropy);

  SUBCASE("json round trip") {
    CHECK(session_record_from_json(to_json(record)) == record);
    CHECK(session_record_from_json(nlohmann::json::parse(to_json(record).dump())) == record);
    CHECK_THROWS_AS(session_record_from_json(nlohmann::json::object()), StructuralError);
  }

  SUBCASE("in-memory store") {
    InMemorySessionStore store;
    save_session(store, record);
    CHECK(load_session(store, "s1") == record);
    CHECK(load_session(store, "s1", "net-a", kFormatVersion) == record);
    CHECK_THROWS_AS(load_session(store, "nope"), NotFoundError);
    CHECK_THROWS_AS(load_session(store, "s1", "net-a", kFormatVersion + 1), VersionConflictError);
    CHECK_THROWS_AS(load_session(store, "s1", "net-b", kFormatVersion), VersionConflictError);
  }

  SUBCASE("list is ordered by creation time") {
    InMemorySessionStore store;
    save_session(store, finished_net_a_record(model, "b", 30));
    save_session(store, finished_net_a_record(model, "a", 20));
    save_session(store, finished_net_a_record(model, "c", 20));
    CHECK(list_sessions(store) == std::vector<std::string>{"a", "c", "b"});
  }

  SUBCASE("file store appends and reloads") {
    const fs::path path = fs::temp_directory_path() / "adaptest_test_sessions.jsonl";
    fs::remove(path);
    {
      FileSessionStore store(path.string());
      Session fresh(model);
      save_session(store, make_session_record(model, fresh, "s1", "net-a", 1000, 1000));
      save_session(store, record);
      save_session(store, finished_net_a_record(model, "s0", 10));
    }
    FileSessionStore reopened(path.string());
    CHECK(load_session(reopened, "s1") == record);
    CHECK(list_sessions(reopened) == std::vector<std::string>{"s0", "s1"});
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
    fs::remove(path);
  }

  SUBCASE("replay reproduces the stored transcript") {
    InMemorySessionStore store;
    save_session(store, record);
    Session replayed = replay_transcript(model, load_session(store, "s1"));
    CHECK(replayed.status() == SessionStatus::stopped_entropy);
    CHECK(grade(model, replayed.evidence()) == doctest::Approx(0.9).epsilon(1e-12));

    SessionRecord tampered = record;
    tampered.transcript[0].gain += 1e-6;
    CHECK_THROWS_AS(replay_transcript(model, tampered), ReplayMismatchError);
    tampered = record;
    tampered.grade = 0.8;
    CHECK_THROWS_AS(replay_transcript(model, tampered), ReplayMismatchError);
    tampered = record;
    tampered.status = SessionStatus::active;
    CHECK_THROWS_AS(replay_transcript(model, tampered), ReplayMismatchError);
  }
}
