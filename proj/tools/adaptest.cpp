// adaptest: command-line front end.
//
//   adaptest validate --model m.json
//   adaptest format   --model m.json [--out canonical.json]
//   adaptest simulate --model m.json --runs N --policies ig,random,fixed --seed S --out report.json
//   adaptest ask      --model m.json
//   adaptest serve    [--listen host:port] [--store sessions.jsonl] [--cors origin,...]
//   adaptest generate --seed S [--skills K] [--questions N] [--out m.json]

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adaptest/model_io.hpp"
#include "adaptest/service.hpp"
#include "adaptest/simulate.hpp"

using namespace adaptest;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

int validate(const std::string& path) {
  ParseResult r = parse_questionnaire(read_text(path));
  for (const auto& d : r.diagnostics) std::cout << path << ": " << d.to_string() << "\n";
  if (!r.ok()) return 1;
  const auto& m = *r.model;
  std::cout << path << ": ok, " << m.network().size() << " variables, "
            << m.network().edge_count() << " edges, " << m.skills().size() << " skills, "
            << m.pool().size() << " questions\n";
  return 0;
}

int simulate(const std::string& path, std::size_t runs, const std::vector<std::string>& names,
             std::uint64_t seed, const std::string& out) {
  const auto model = load_questionnaire(read_text(path));
  std::vector<PolicySpec> policies;
  for (const auto& n : names) policies.push_back(PolicySpec::parse(n, derive_seed(seed, 2)));
  const BatchReport report = run_batch(model, runs, policies, seed);
  write_text(out, serialize_report(report));
  for (const auto& s : report.policies) {
    std::fprintf(stderr, "%-16s mean questions %.3f  median %.1f  grade error %.4f  map accuracy %.3f\n",
                 s.policy.c_str(), s.mean_questions, s.median_questions, s.mean_abs_grade_error,
                 s.map_accuracy);
  }
  for (const auto& c : report.comparisons) {
    std::fprintf(stderr, "%s vs %s: mean saving %.3f questions, t = %.3f, one-sided p = %.3g\n",
                 c.candidate.c_str(), c.baseline.c_str(), c.mean_difference, c.t_statistic,
                 c.p_value);
  }
  return 0;
}

int ask(const std::string& path) {
  const auto model = load_questionnaire(read_text(path));
  if (!model.metadata().title.empty()) std::cout << model.metadata().title << "\n";
  Session session(model);
  while (session.active()) {
    const auto pick = pick_question(model, session);
    const auto& q = model.question(pick->question_id);
    std::cout << "\n" << q.text << "\n";
    for (std::size_t i = 0; i < q.options.size(); ++i)
      std::cout << "  [" << i << "] " << q.options[i] << "\n";
    for (;;) {
      std::cout << "> " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line)) {
        std::cerr << "input closed before the questionnaire finished\n";
        return 1;
      }
      std::size_t index = 0;
      std::istringstream in(line);
      if (in >> index && in.peek() == EOF && index < q.options.size()) {
        try {
          session.record_answer(model, q.id, index);
          break;
        } catch (const InconsistentEvidenceError&) {
          std::cout << "that answer is impossible under the model\n";
          continue;
        }
      }
      std::cout << "type an option index between 0 and " << q.options.size() - 1 << "\n";
    }
  }
  std::cout << "\nstopped: " << to_string(session.status()) << " after "
            << session.transcript().size() << " question(s)\n";
  std::cout << "grade: " << grade(model, session.evidence()) << "\n";
  for (const auto& [label, p] : marginal_risks(model, session.evidence()))
    std::cout << "risk " << label << ": " << p << "\n";
  return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(ServiceConfig config) {
  std::shared_ptr<SessionStore> store;
  if (!config.store_path.empty()) store = std::make_shared<FileSessionStore>(config.store_path);
  SurveyService service(store);
  HttpServer server(service, config);
  const int port = server.bind();
  std::cerr << "listening on " << config.host << ":" << port
            << (config.store_path.empty() ? " (in-memory sessions)" : " (sessions in " + config.store_path + ")")
            << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive questionnaires over discrete Bayesian networks"};
  app.require_subcommand(1);

  std::string model;
  auto* validate_cmd = app.add_subcommand("validate", "Parse a questionnaire and report diagnostics");
  validate_cmd->add_option("--model", model, "Questionnaire document")->required();

  std::string out;
  auto* format_cmd = app.add_subcommand("format", "Print the canonical form of a questionnaire");
  format_cmd->add_option("--model", model, "Questionnaire document")->required();
  format_cmd->add_option("--out", out, "Output file (default stdout)");

  std::size_t runs = 1000;
  std::vector<std::string> policies = {"ig", "random", "fixed"};
  std::uint64_t seed = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Benchmark selection policies on simulated takers");
  sim_cmd->add_option("--model", model, "Questionnaire document")->required();
  sim_cmd->add_option("--runs", runs, "Number of simulated takers")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--policies", policies, "ig, random, fixed")->delimiter(',');
  sim_cmd->add_option("--seed", seed, "Batch seed");
  sim_cmd->add_option("--out", out, "Report file (default stdout)");

  auto* ask_cmd = app.add_subcommand("ask", "Take a questionnaire in the terminal");
  ask_cmd->add_option("--model", model, "Questionnaire document")->required();

  ServiceConfig config;
  std::string listen;
  std::string store;
  std::string cors;
  auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
  serve_cmd->add_option("--listen", listen, "host:port (env ADAPTEST_LISTEN, default 127.0.0.1:8080)");
  serve_cmd->add_option("--store", store, "Session store file (env ADAPTEST_STORE)");
  serve_cmd->add_option("--cors", cors, "Comma-separated allowed origins (env ADAPTEST_CORS_ORIGINS)");

  GeneratorOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random delta/gamma questionnaire");
  gen_cmd->add_option("--seed", seed, "Generator seed");
  gen_cmd->add_option("--skills", gen.skills, "Binary skills")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--questions", gen.questions, "Questions")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) return validate(model);
    if (*format_cmd) {
      write_text(out, serialize_questionnaire(load_questionnaire(read_text(model))));
      return 0;
    }
    if (*sim_cmd) return simulate(model, runs, policies, seed, out);
    if (*ask_cmd) return ask(model);
    if (*serve_cmd) {
      config = service_config_from_env(config);
      if (!listen.empty()) parse_listen_address(listen, config);
      if (!store.empty()) config.store_path = store;
      if (!cors.empty()) {
        config.cors_origins.clear();
        std::stringstream items(cors);
        for (std::string item; std::getline(items, item, ',');)
          if (!item.empty()) config.cors_origins.push_back(item);
      }
      return serve(config);
    }
    if (*gen_cmd) {
      Rng rng(seed);
      write_text(out, serialize_questionnaire(generate_questionnaire(rng, gen)));
      return 0;
    }
  } catch (const DocumentError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << model << ": " << d.to_string() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
