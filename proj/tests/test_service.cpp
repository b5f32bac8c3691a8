#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "adaptest/model_io.hpp"
#include "adaptest/service.hpp"
#include "adaptest/simulate.hpp"
#include "support/models.hpp"

using namespace adaptest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string net_a_text() { return read_file(fs::path(ADAPTEST_MODELS_DIR) / "net_a.json"); }

std::string net_a_with_threshold(double h) {
  json doc = json::parse(net_a_text());
  doc["stop_threshold"] = h;
  return doc.dump();
}

SurveyService::Clock fixed_clock() {
  return [t = std::int64_t{1000}]() mutable { return t++; };
}

std::string published(SurveyService& svc, const std::string& document) {
  auto r = svc.handle("POST", "/surveys", document);
  REQUIRE(r.status == 201);
  const auto id = r.body["id"].get<std::string>();
  REQUIRE(svc.handle("POST", "/surveys/" + id + "/publish", "").status == 200);
  return id;
}

ApiResponse answer(SurveyService& svc, const std::string& session, const std::string& q,
                   const json& a) {
  return svc.handle("POST", "/sessions/" + session + "/answers",
                    json{{"question_id", q}, {"answer", a}}.dump());
}

}  // namespace

TEST_CASE("survey lifecycle") {
  SurveyService svc(nullptr, fixed_clock());

  auto created = svc.handle("POST", "/surveys", net_a_text());
  REQUIRE(created.status == 201);
  const auto id = created.body["id"].get<std::string>();
  CHECK(created.body["status"] == "draft");
  CHECK(created.body["document"]["questions"].size() == 2);

  CHECK(svc.handle("GET", "/surveys/" + id, "").status == 200);
  CHECK(svc.handle("GET", "/surveys/nope", "").status == 404);
  auto list = svc.handle("GET", "/surveys", "");
  CHECK(list.status == 200);
  CHECK(list.body["surveys"].size() == 1);

  auto replaced = svc.handle("PUT", "/surveys/" + id, net_a_with_threshold(0.3));
  CHECK(replaced.status == 200);
  CHECK(replaced.body["document"]["stop_threshold"] == 0.3);

  CHECK(svc.handle("POST", "/surveys/" + id + "/sessions", "").status == 409);
  CHECK(svc.handle("POST", "/surveys/" + id + "/publish", "").status == 200);
  CHECK(svc.handle("POST", "/surveys/" + id + "/publish", "").status == 409);
  auto modify = svc.handle("PUT", "/surveys/" + id, net_a_text());
  CHECK(modify.status == 409);
  CHECK(modify.body["error"]["code"] == "survey_published");

  CHECK(svc.handle("POST", "/surveys/" + id + "/sessions", "").status == 201);
  auto del = svc.handle("DELETE", "/surveys/" + id, "");
  CHECK(del.status == 409);
  CHECK(del.body["error"]["code"] == "survey_has_sessions");

  auto other = svc.handle("POST", "/surveys", net_a_text()).body["id"].get<std::string>();
  auto gone = svc.handle("DELETE", "/surveys/" + other, "");
  CHECK(gone.status == 204);
  CHECK(gone.body.is_null());
  CHECK(svc.handle("GET", "/surveys/" + other, "").status == 404);
  CHECK(svc.handle("DELETE", "/surveys/" + other, "").status == 404);
}

TEST_CASE("invalid documents are rejected with diagnostics") {
  SurveyService svc;
  auto r = svc.handle(
      "POST", "/surveys",
      read_file(fs::path(ADAPTEST_FIXTURES_DIR) / "diagnostics" / "parameterization.json"));
  CHECK(r.status == 422);
  REQUIRE(r.body["error"]["diagnostics"].is_array());
  CHECK(r.body["error"]["diagnostics"][0]["code"] == "parameterization");

  r = svc.handle("POST", "/surveys", "{\"format_version\": 1,");
  CHECK(r.status == 422);
  CHECK(r.body["error"]["diagnostics"][0]["code"] == "syntax_error");
  CHECK(r.body["error"]["diagnostics"][0].contains("line"));

  const auto id = svc.handle("POST", "/surveys", net_a_text()).body["id"].get<std::string>();
  CHECK(svc.handle("PUT", "/surveys/" + id, "{}").status == 422);
  CHECK(svc.handle("GET", "/surveys", "").body["surveys"].size() == 1);
}

TEST_CASE("NET-A session over the contract") {
  SurveyService svc(nullptr, fixed_clock());
  const auto survey = published(svc, net_a_text());

  auto start = svc.handle("POST", "/surveys/" + survey + "/sessions", "");
  REQUIRE(start.status == 201);
  CHECK(start.body["terminal"] == false);
  CHECK(start.body["question"]["id"] == "Q1");
  CHECK(start.body["question"]["options"].size() == 2);
  CHECK(start.body["question"]["options"][0]["label"] == "Yes");
  const auto session = start.body["session_id"].get<std::string>();

  SUBCASE("fresh explanation ranks Q1 above Q2") {
    auto ex = svc.handle("GET", "/sessions/" + session + "/explain", "");
    REQUIRE(ex.status == 200);
    REQUIRE(ex.body["per_candidate"].size() == 2);
    CHECK(ex.body["per_candidate"][0]["question_id"] == "Q1");
    CHECK(ex.body["per_candidate"][0]["gain"].get<double>() == doctest::Approx(0.5310).epsilon(1e-4));
    CHECK(ex.body["per_candidate"][1]["question_id"] == "Q2");
    CHECK(ex.body["per_candidate"][1]["gain"].get<double>() == doctest::Approx(0.1187).epsilon(1e-4));
    CHECK(ex.body["joint_entropy"].get<double>() == doctest::Approx(1.0));
  }

  SUBCASE("result before the end conflicts") {
    auto r = svc.handle("GET", "/sessions/" + session + "/result", "");
    CHECK(r.status == 409);
    CHECK(r.body["error"]["code"] == "not_terminal");
  }

  SUBCASE("answer errors leave the session untouched") {
    auto wrong = answer(svc, session, "Q2", 0);
    CHECK(wrong.status == 409);
    CHECK(wrong.body["error"]["offered"] == "Q1");
    CHECK(answer(svc, session, "Q1", 2).status == 422);
    CHECK(answer(svc, session, "Q1", -1).status == 422);
    CHECK(answer(svc, session, "Q1", "maybe").status == 422);
    CHECK(svc.handle("POST", "/sessions/" + session + "/answers", "{\"question_id\": \"Q1\"}")
              .status == 422);
    CHECK(svc.handle("POST", "/sessions/" + session + "/answers", "{oops").status == 400);
    CHECK(svc.handle("GET", "/sessions/" + session + "/next", "").body == start.body);
  }

  SUBCASE("yes to Q1 stops with grade 0.9") {
    auto r = answer(svc, session, "Q1", "Yes");
    REQUIRE(r.status == 200);
    CHECK(r.body["terminal"] == true);
    CHECK(r.body["stop_reason"] == "stopped_entropy");
    CHECK(r.body["grade"].get<double>() == doctest::Approx(0.9).epsilon(1e-9));
    const double total = r.body["risks"]["skilled"].get<double>() + r.body["risks"]["unskilled"].get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // Idempotent resubmission, by index, state label or option label.
    CHECK(answer(svc, session, "Q1", 0).body == r.body);
    CHECK(answer(svc, session, "Q1", "yes").status == 200);
    CHECK(answer(svc, session, "Q1", "yes").body == r.body);
    // Terminal state is absorbing.
    CHECK(answer(svc, session, "Q1", 1).status == 409);
    auto late = answer(svc, session, "Q2", 0);
    CHECK(late.status == 409);
    CHECK(late.body["error"]["code"] == "session_terminal");

    CHECK(svc.handle("GET", "/sessions/" + session + "/next", "").body == r.body);
    auto result = svc.handle("GET", "/sessions/" + session + "/result", "");
    REQUIRE(result.status == 200);
    CHECK(result.body["grade"].get<double>() == doctest::Approx(0.9).epsilon(1e-9));
    REQUIRE(result.body["transcript"].size() == 1);
    CHECK(result.body["transcript"][0]["question_id"] == "Q1");
    CHECK(result.body["transcript"][0]["state"] == "yes");

    auto ex = svc.handle("GET", "/sessions/" + session + "/explain", "");
    CHECK(ex.body["per_candidate"].empty());
    CHECK(ex.body["stop_margin"].get<double>() < 0);
  }
}

TEST_CASE("routing and unknown resources") {
  SurveyService svc;
  CHECK(svc.handle("GET", "/sessions/nope/next", "").status == 404);
  CHECK(svc.handle("GET", "/sessions/nope/explain", "").status == 404);
  CHECK(svc.handle("GET", "/sessions/nope/result", "").status == 404);
  CHECK(answer(svc, "nope", "Q1", 0).status == 404);
  CHECK(svc.handle("POST", "/surveys/nope/sessions", "").status == 404);
  CHECK(svc.handle("POST", "/surveys/nope/publish", "").status == 404);
  CHECK(svc.handle("GET", "/nothing", "").status == 404);
  CHECK(svc.handle("DELETE", "/surveys", "").status == 405);
  CHECK(svc.handle("GET", "/sessions/x/answers", "").status == 405);
}

TEST_CASE("a survey whose threshold covers the prior stops before the first question") {
  SurveyService svc;
  const auto survey = published(svc, net_a_with_threshold(1.0));
  auto start = svc.handle("POST", "/surveys/" + survey + "/sessions", "");
  REQUIRE(start.status == 201);
  CHECK(start.body["terminal"] == true);
  CHECK(start.body["asked"] == 0);
  CHECK(start.body["grade"].get<double>() == doctest::Approx(0.5));
}

namespace {

// Drives a session to the end with answers sampled from a fixed taker;
// returns every response body.
std::vector<json> drive(SurveyService& svc, const std::string& survey,
                        const QuestionnaireModel& model, std::uint64_t seed) {
  std::vector<json> bodies;
  auto r = svc.handle("POST", "/surveys/" + survey + "/sessions", "");
  REQUIRE(r.status == 201);
  bodies.push_back(r.body);
  const auto session = r.body["session_id"].get<std::string>();
  Rng rng(seed);
  const Profile profile = sample_profile(model, rng);
  std::set<std::string> offered;
  while (!r.body["terminal"].get<bool>()) {
    const auto q = r.body["question"]["id"].get<std::string>();
    CHECK(offered.insert(q).second);
    r = answer(svc, session, q, simulate_answer(model, profile, q, rng));
    REQUIRE(r.status == 200);
    bodies.push_back(r.body);
  }
  bodies.push_back(svc.handle("GET", "/sessions/" + session + "/result", "").body);
  return bodies;
}

}  // namespace

TEST_CASE("wire-level replay against a fresh instance is identical") {
  std::mt19937_64 rng(555);
  auto store = std::make_shared<InMemorySessionStore>();
  for (int m = 0; m < 25; ++m) {
    const auto model = testing::random_questionnaire(rng);
    const auto text = serialize_questionnaire(model);
    SurveyService first(store);
    const auto a_id = published(first, text);
    const auto recorded = drive(first, a_id, model, m);

    SurveyService fresh;
    const auto b_id = published(fresh, text);
    CHECK(drive(fresh, b_id, model, m) == recorded);

    // The persisted record replays through the library as well.
    const auto session = recorded.front()["session_id"].get<std::string>();
    const auto record = load_session(*store, session, a_id, kFormatVersion);
    CHECK_NOTHROW(replay_transcript(load_questionnaire(text), record));
  }
}

TEST_CASE("distinct sessions run in parallel") {
  SurveyService svc;
  const auto survey = published(svc, net_a_with_threshold(0.0));
  std::vector<std::thread> threads;
  std::vector<std::string> ids(8);
  std::vector<int> failures(8, 0);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 10; ++k) {
        auto r = svc.handle("POST", "/surveys/" + survey + "/sessions", "");
        if (r.status != 201) ++failures[t];
        const auto id = r.body["session_id"].get<std::string>();
        ids[t] = id;
        while (!r.body["terminal"].get<bool>()) {
          r = answer(svc, id, r.body["question"]["id"].get<std::string>(), t % 2);
          if (r.status != 200) ++failures[t];
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int f : failures) CHECK(f == 0);
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 8);
  CHECK(svc.handle("GET", "/surveys/" + survey, "").body["session_count"] == 80);
}

TEST_CASE("sessions persist to a file store") {
  const fs::path path = fs::temp_directory_path() / "adaptest_service_sessions.jsonl";
  fs::remove(path);
  std::string session;
  std::string survey;
  {
    SurveyService svc(std::make_shared<FileSessionStore>(path.string()), fixed_clock());
    survey = published(svc, net_a_text());
    session = svc.handle("POST", "/surveys/" + survey + "/sessions", "").body["session_id"];
    answer(svc, session, "Q1", 0);
  }
  FileSessionStore store(path.string());
  const auto record = load_session(store, session, survey, kFormatVersion);
  CHECK(record.status == SessionStatus::stopped_entropy);
  REQUIRE(record.grade.has_value());
  CHECK(*record.grade == doctest::Approx(0.9).epsilon(1e-12));
  CHECK_THROWS_AS(load_session(store, session, "sv-other", kFormatVersion), VersionConflictError);
  fs::remove(path);
}

TEST_CASE("configuration") {
  ServiceConfig c;
  parse_listen_address("0.0.0.0:9000", c);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9000);
  parse_listen_address(":9001", c);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9001);
  CHECK_THROWS_AS(parse_listen_address("localhost", c), StructuralError);
  CHECK_THROWS_AS(parse_listen_address("localhost:http", c), StructuralError);
}

TEST_CASE("HTTP smoke test over a real socket") {
  SurveyService svc;
  ServiceConfig config;
  config.port = 0;
  config.cors_origins = {"http://localhost:5173"};
  HttpServer server(svc, config);
  const int port = server.bind();
  std::thread serving([&] { server.serve(); });

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/surveys", net_a_text(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto survey = json::parse(created->body)["id"].get<std::string>();
  CHECK(client.Post("/surveys/" + survey + "/publish", "", "application/json")->status == 200);

  httplib::Headers origin = {{"Origin", "http://localhost:5173"}};
  auto start = client.Post("/surveys/" + survey + "/sessions", origin, "", "application/json");
  REQUIRE(start);
  CHECK(start->status == 201);
  CHECK(start->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  const auto session = json::parse(start->body)["session_id"].get<std::string>();

  auto done = client.Post("/sessions/" + session + "/answers",
                          R"({"question_id": "Q1", "answer": 0})", "application/json");
  REQUIRE(done);
  CHECK(json::parse(done->body)["grade"].get<double>() == doctest::Approx(0.9));

  auto preflight = client.Options("/sessions/" + session + "/answers", origin);
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
  CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  auto foreign = client.Get("/surveys", {{"Origin", "http://evil.example"}});
  REQUIRE(foreign);
  CHECK_FALSE(foreign->has_header("Access-Control-Allow-Origin"));
  CHECK(client.Get("/nothing")->status == 404);

  server.stop();
  serving.join();
}
