#include "adaptest/model_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "adaptest/elicit.hpp"
#include "adaptest/network.hpp"

namespace adaptest {

using nlohmann::json;

std::string Diagnostic::to_string() const {
  std::string out = code;
  if (line) out += " at " + std::to_string(*line) + ":" + std::to_string(column.value_or(0));
  out += " " + (path.empty() ? std::string("/") : path) + ": " + message;
  return out;
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  if (diagnostics.empty()) return "invalid questionnaire document";
  std::string msg = diagnostics.front().to_string();
  if (diagnostics.size() > 1) msg += " (+" + std::to_string(diagnostics.size() - 1) + " more)";
  return msg;
}

std::string escape_pointer(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string child(const std::string& path, std::string_view key) {
  return path + "/" + escape_pointer(key);
}

std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

std::string describe(const json& v) {
  return v.type_name();
}

struct VariableDoc {
  std::string path;
  std::string id;
  VariableRole role = VariableRole::skill;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::string text;
  std::vector<std::string> options;
  const json* cpt = nullptr;
  const json* dg = nullptr;
};

class Reader {
 public:
  std::vector<Diagnostic> diagnostics;

  void add(std::string code, std::string path, std::string message) {
    diagnostics.push_back({std::move(code), std::move(path), std::move(message), {}, {}});
  }

  bool object(const json& v, const std::string& path,
              std::initializer_list<std::string_view> allowed) {
    if (!v.is_object()) {
      add("wrong_type", path, "expected object, got " + describe(v));
      return false;
    }
    for (const auto& [key, _] : v.items()) {
      bool known = false;
      for (auto a : allowed) known = known || key == a;
      if (!known) add("unknown_field", child(path, key), "unknown field \"" + key + "\"");
    }
    return true;
  }

  const json* member(const json& obj, std::string_view key, const std::string& path,
                     bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required)
        add("missing_field", child(path, key), "missing required field \"" + std::string(key) + "\"");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string(const json& v, const std::string& path) {
    if (!v.is_string()) {
      add("wrong_type", path, "expected string, got " + describe(v));
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<double> number(const json& v, const std::string& path) {
    if (!v.is_number()) {
      add("wrong_type", path, "expected number, got " + describe(v));
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::size_t> index(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
      add("wrong_type", path, "expected integer, got " + describe(v));
      return std::nullopt;
    }
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    const auto i = v.get<std::int64_t>();
    if (i < 0) {
      add("invalid_value", path, "expected a non-negative integer, got " + std::to_string(i));
      return std::nullopt;
    }
    return static_cast<std::size_t>(i);
  }

  std::optional<bool> boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) {
      add("wrong_type", path, "expected boolean, got " + describe(v));
      return std::nullopt;
    }
    return v.get<bool>();
  }

  const json* array(const json& v, const std::string& path) {
    if (!v.is_array()) {
      add("wrong_type", path, "expected array, got " + describe(v));
      return nullptr;
    }
    return &v;
  }

  std::optional<std::vector<std::string>> strings(const json& v, const std::string& path) {
    if (!array(v, path)) return std::nullopt;
    std::vector<std::string> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto s = string(v[i], child(path, i));
      if (s) out.push_back(*s);
      else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<std::vector<double>> numbers(const json& v, const std::string& path) {
    if (!array(v, path)) return std::nullopt;
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = number(v[i], child(path, i));
      if (x) out.push_back(*x);
      else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<std::vector<std::size_t>> indices(const json& v, const std::string& path) {
    if (!array(v, path)) return std::nullopt;
    std::vector<std::size_t> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = index(v[i], child(path, i));
      if (x) out.push_back(*x);
      else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  void variables(const json& doc, std::string_view section, VariableRole role, bool required,
                 std::vector<VariableDoc>& out) {
    const std::string path = child("", section);
    const json* list = member(doc, section, "", required);
    if (!list || !array(*list, path)) return;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const json& v = (*list)[i];
      const std::string p = child(path, i);
      const bool ok = role == VariableRole::question
                          ? object(v, p, {"id", "text", "states", "options", "parents", "cpt", "dg"})
                          : object(v, p, {"id", "states", "parents", "cpt"});
      if (!ok) continue;

      VariableDoc d;
      d.path = p;
      d.role = role;
      if (const json* id = member(v, "id", p, true)) {
        if (auto s = string(*id, child(p, "id"))) {
          if (s->empty()) add("invalid_value", child(p, "id"), "variable id must not be empty");
          d.id = *s;
        }
      }
      if (const json* states = member(v, "states", p, true)) {
        if (auto s = strings(*states, child(p, "states"))) {
          if (s->empty()) add("invalid_value", child(p, "states"), "a variable needs at least one state");
          d.states = *s;
        }
      }
      if (const json* parents = member(v, "parents", p, false)) {
        if (auto s = strings(*parents, child(p, "parents"))) d.parents = *s;
      }
      d.cpt = member(v, "cpt", p, false);
      if (role == VariableRole::question) {
        if (const json* text = member(v, "text", p, true)) {
          if (auto s = string(*text, child(p, "text"))) d.text = *s;
        }
        if (const json* options = member(v, "options", p, false)) {
          if (auto s = strings(*options, child(p, "options"))) {
            if (s->size() != d.states.size() && !d.states.empty())
              add("invalid_value", child(p, "options"),
                  "expected " + std::to_string(d.states.size()) + " options, got " +
                      std::to_string(s->size()));
            d.options = *s;
          }
        }
        d.dg = member(v, "dg", p, false);
        if (d.cpt && d.dg)
          add("parameterization", p,
              "question \"" + d.id + "\" needs exactly one parameterization, got both cpt and dg");
        else if (!d.cpt && !d.dg)
          add("parameterization", p,
              "question \"" + d.id + "\" needs exactly one parameterization, got neither cpt nor dg");
      } else if (!d.cpt) {
        add("missing_field", child(p, "cpt"), "missing required field \"cpt\"");
      }
      out.push_back(std::move(d));
    }
  }

  // Rows of P(var | parents), one row per parent configuration.
  std::optional<Factor> cpt(const VariableDoc& d, const std::vector<std::size_t>& parent_cards) {
    const std::string p = child(d.path, "cpt");
    if (!array(*d.cpt, p)) return std::nullopt;
    std::size_t rows = 1;
    for (auto c : parent_cards) rows *= c;
    if (d.cpt->size() != rows) {
      add("cpt_shape", p,
          "expected " + std::to_string(rows) + " rows (one per parent configuration), got " +
              std::to_string(d.cpt->size()));
      return std::nullopt;
    }
    std::vector<double> table;
    table.reserve(rows * d.states.size());
    bool ok = true;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string rp = child(p, r);
      auto row = numbers((*d.cpt)[r], rp);
      if (!row) {
        ok = false;
        continue;
      }
      if (row->size() != d.states.size()) {
        add("cpt_shape", rp,
            "expected " + std::to_string(d.states.size()) + " entries, got " +
                std::to_string(row->size()));
        ok = false;
        continue;
      }
      for (std::size_t k = 0; k < row->size(); ++k) {
        if (!std::isfinite((*row)[k]) || (*row)[k] < 0) {
          add("invalid_value", child(rp, k), "probability must be finite and non-negative");
          ok = false;
        }
      }
      table.insert(table.end(), row->begin(), row->end());
    }
    if (!ok) return std::nullopt;
    std::vector<std::string> scope = d.parents;
    scope.push_back(d.id);
    std::vector<std::size_t> cards = parent_cards;
    cards.push_back(d.states.size());
    return Factor(std::move(scope), std::move(cards), std::move(table));
  }

  std::optional<DGQuestionSpec> dg(const VariableDoc& d,
                                   const std::vector<std::size_t>& parent_cards) {
    const std::string p = child(d.path, "dg");
    if (!object(*d.dg, p, {"mastery_states", "params"})) return std::nullopt;
    DGQuestionSpec spec{d.id, d.parents, {}, {}};
    bool ok = true;
    if (d.states.size() != 2) {
      add("dg_invalid", p,
          "delta/gamma needs a binary question, \"" + d.id + "\" has " +
              std::to_string(d.states.size()) + " states");
      ok = false;
    }
    if (const json* m = member(*d.dg, "mastery_states", p, false)) {
      const std::string mp = child(p, "mastery_states");
      if (auto ms = indices(*m, mp)) {
        if (ms->size() != d.parents.size()) {
          add("dg_invalid", mp,
              "expected one mastery state per parent (" + std::to_string(d.parents.size()) +
                  "), got " + std::to_string(ms->size()));
          ok = false;
        } else {
          for (std::size_t i = 0; i < ms->size(); ++i) {
            if ((*ms)[i] >= parent_cards[i]) {
              add("dg_invalid", child(mp, i),
                  "state " + std::to_string((*ms)[i]) + " out of range for parent \"" +
                      d.parents[i] + "\"");
              ok = false;
            }
          }
          spec.mastery_states = *ms;
        }
      } else {
        ok = false;
      }
    } else {
      spec.mastery_states.assign(d.parents.size(), 0);
    }

    const json* params = member(*d.dg, "params", p, true);
    if (!params) return std::nullopt;
    const std::string pp = child(p, "params");
    if (!array(*params, pp)) return std::nullopt;
    std::size_t configs = 1;
    for (auto c : parent_cards) configs *= c;
    if (params->size() != configs) {
      add("dg_invalid", pp,
          "expected " + std::to_string(configs) + " (delta, gamma) pairs, got " +
              std::to_string(params->size()));
      return std::nullopt;
    }
    for (std::size_t i = 0; i < params->size(); ++i) {
      const std::string ip = child(pp, i);
      if (!object((*params)[i], ip, {"delta", "gamma"})) {
        ok = false;
        continue;
      }
      const json* dj = member((*params)[i], "delta", ip, true);
      const json* gj = member((*params)[i], "gamma", ip, true);
      auto delta = dj ? number(*dj, child(ip, "delta")) : std::nullopt;
      auto gamma = gj ? number(*gj, child(ip, "gamma")) : std::nullopt;
      if (!delta || !gamma) {
        ok = false;
        continue;
      }
      const DGParams params_i{*delta, *gamma};
      try {
        dg_to_probabilities(params_i);
      } catch (const InfeasibleParametersError& e) {
        add("dg_infeasible", ip, e.what());
        ok = false;
      }
      spec.params.push_back(params_i);
    }
    if (!ok) return std::nullopt;
    return spec;
  }
};

std::optional<EntropyMode> entropy_mode_from(std::string_view s) {
  if (s == "joint") return EntropyMode::joint;
  if (s == "sum_of_marginals") return EntropyMode::sum_of_marginals;
  return std::nullopt;
}

ParseResult fail(std::vector<Diagnostic> diagnostics) {
  return {std::nullopt, std::move(diagnostics)};
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Rejects duplicate object keys, which the json parser would otherwise
// resolve silently to the last value.
class DuplicateKeyCheck {
 public:
  explicit DuplicateKeyCheck(std::vector<Diagnostic>& out) : out_(out) {}

  bool operator()(int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        frames_.push_back({false, {}, {}, 0});
        break;
      case json::parse_event_t::array_start:
        frames_.push_back({true, {}, {}, 0});
        break;
      case json::parse_event_t::key: {
        Frame& top = frames_.back();
        top.key = parsed.get<std::string>();
        if (!top.keys.insert(top.key).second)
          out_.push_back({"duplicate_key", path(), "duplicate key \"" + top.key + "\"", {}, {}});
        break;
      }
      case json::parse_event_t::object_end:
      case json::parse_event_t::array_end:
        frames_.pop_back();
        advance();
        break;
      case json::parse_event_t::value:
        advance();
        break;
    }
    return true;
  }

 private:
  struct Frame {
    bool array;
    std::set<std::string> keys;
    std::string key;
    std::size_t index;
  };

  void advance() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }

  std::string path() const {
    std::string out;
    for (const Frame& f : frames_)
      out = f.array ? child(out, f.index) : child(out, f.key);
    return out;
  }

  std::vector<Diagnostic>& out_;
  std::vector<Frame> frames_;
};

}  // namespace

DocumentError::DocumentError(std::vector<Diagnostic> diagnostics)
    : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

ParseResult parse_questionnaire(std::string_view text) {
  std::vector<Diagnostic> duplicates;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), DuplicateKeyCheck(duplicates));
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, column] = line_column(text, offset);
    std::string message = e.what();
    if (auto colon = message.find(": "); colon != std::string::npos) message = message.substr(colon + 2);
    return fail({{"syntax_error", "", message, line, column}});
  }
  if (!duplicates.empty()) return fail(std::move(duplicates));
  return parse_questionnaire_json(doc);
}

ParseResult parse_questionnaire_json(const json& doc) {
  Reader r;
  if (!doc.is_object()) {
    r.add("wrong_type", "", "expected a questionnaire object, got " + describe(doc));
    return fail(std::move(r.diagnostics));
  }

  // Version gate first: nothing else is interpreted under an unknown format.
  const json* version = r.member(doc, "format_version", "", true);
  if (!version) return fail(std::move(r.diagnostics));
  if (!version->is_number_integer()) {
    r.add("wrong_type", "/format_version", "expected integer, got " + describe(*version));
    return fail(std::move(r.diagnostics));
  }
  if (version->get<std::int64_t>() != kFormatVersion) {
    r.add("unsupported_version", "/format_version",
          "format_version " + version->dump() + " is not supported (expected " +
              std::to_string(kFormatVersion) + ")");
    return fail(std::move(r.diagnostics));
  }

  r.object(doc, "",
           {"format_version", "metadata", "skills", "auxiliary", "questions", "evaluation",
            "stop_threshold", "max_questions", "entropy_mode", "risks", "show_explanation"});

  QuestionnaireModel::Config config;
  if (const json* meta = r.member(doc, "metadata", "", false)) {
    if (r.object(*meta, "/metadata", {"title", "description"})) {
      if (const json* t = r.member(*meta, "title", "/metadata", false))
        if (auto s = r.string(*t, "/metadata/title")) config.metadata.title = *s;
      if (const json* d = r.member(*meta, "description", "/metadata", false))
        if (auto s = r.string(*d, "/metadata/description")) config.metadata.description = *s;
    }
  }

  std::vector<VariableDoc> vars;
  r.variables(doc, "skills", VariableRole::skill, true, vars);
  r.variables(doc, "auxiliary", VariableRole::auxiliary, false, vars);
  r.variables(doc, "questions", VariableRole::question, true, vars);

  std::vector<double> evaluation;
  if (const json* ev = r.member(doc, "evaluation", "", true)) {
    if (auto xs = r.numbers(*ev, "/evaluation")) {
      for (std::size_t i = 0; i < xs->size(); ++i)
        if (!std::isfinite((*xs)[i])) r.add("invalid_value", child("/evaluation", i), "value must be finite");
      evaluation = *xs;
    }
  }
  if (const json* h = r.member(doc, "stop_threshold", "", true)) {
    if (auto x = r.number(*h, "/stop_threshold")) {
      if (!std::isfinite(*x) || *x < 0)
        r.add("invalid_value", "/stop_threshold", "stop_threshold must be finite and >= 0");
      config.stop_threshold = *x;
    }
  }
  if (const json* m = r.member(doc, "max_questions", "", false); m && !m->is_null()) {
    if (auto n = r.index(*m, "/max_questions")) {
      if (*n == 0) r.add("invalid_value", "/max_questions", "max_questions must be positive or null");
      config.max_questions = *n;
    }
  }
  if (const json* m = r.member(doc, "entropy_mode", "", false)) {
    if (auto s = r.string(*m, "/entropy_mode")) {
      if (auto mode = entropy_mode_from(*s)) config.entropy_mode = *mode;
      else r.add("invalid_value", "/entropy_mode", "unknown entropy_mode \"" + *s + "\"");
    }
  }
  if (const json* s = r.member(doc, "show_explanation", "", false)) {
    if (auto b = r.boolean(*s, "/show_explanation")) config.show_explanation = *b;
  }
  std::map<std::string, std::vector<std::size_t>> risks;
  if (const json* rk = r.member(doc, "risks", "", false)) {
    if (!rk->is_object()) {
      r.add("wrong_type", "/risks", "expected object, got " + describe(*rk));
    } else {
      for (const auto& [label, subset] : rk->items()) {
        const std::string p = child("/risks", label);
        if (auto xs = r.indices(subset, p)) {
          if (xs->empty()) r.add("invalid_value", p, "risk \"" + label + "\" lists no states");
          risks[label] = *xs;
        }
      }
    }
  }
  if (!r.diagnostics.empty()) return fail(std::move(r.diagnostics));

  // Cross references.
  std::map<std::string, const VariableDoc*> by_id;
  for (const VariableDoc& d : vars) {
    if (!by_id.emplace(d.id, &d).second)
      r.add("duplicate_id", child(d.path, "id"), "variable id \"" + d.id + "\" is already defined");
  }
  for (const VariableDoc& d : vars) {
    for (std::size_t i = 0; i < d.parents.size(); ++i) {
      if (!by_id.count(d.parents[i]))
        r.add("unknown_reference", child(child(d.path, "parents"), i),
              "parent \"" + d.parents[i] + "\" of \"" + d.id + "\" is not defined");
      for (std::size_t j = 0; j < i; ++j)
        if (d.parents[j] == d.parents[i])
          r.add("duplicate_id", child(child(d.path, "parents"), i),
                "parent \"" + d.parents[i] + "\" listed twice");
    }
  }
  if (!r.diagnostics.empty()) return fail(std::move(r.diagnostics));

  // Parameters.
  std::vector<DiscreteVariable> variables;
  for (const VariableDoc& d : vars) variables.push_back({d.id, d.states, d.role});
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, Factor> cpts;
  std::map<std::string, DGQuestionSpec> specs;
  for (const VariableDoc& d : vars) {
    std::vector<std::size_t> parent_cards;
    for (const auto& p : d.parents) parent_cards.push_back(by_id.at(p)->states.size());
    parents[d.id] = d.parents;
    if (d.cpt) {
      if (auto f = r.cpt(d, parent_cards)) cpts.emplace(d.id, std::move(*f));
    } else if (auto spec = r.dg(d, parent_cards)) {
      try {
        cpts.emplace(d.id, compile_dg_cpt(*spec, variables));
        specs.emplace(d.id, std::move(*spec));
      } catch (const Error& e) {
        r.add("dg_invalid", child(d.path, "dg"), e.what());
      }
    }
  }
  if (!r.diagnostics.empty()) return fail(std::move(r.diagnostics));

  try {
    config.network = BayesianNetwork(variables, parents, cpts);
  } catch (const Error& e) {
    r.add("network_invalid", "", e.what());
    return fail(std::move(r.diagnostics));
  }
  for (const Violation& v : validate_network(config.network)) {
    const auto it = by_id.find(v.variable_id);
    r.add("network_invalid", it != by_id.end() ? it->second->path : "",
          std::string(to_string(v.kind)) + ": " + v.message);
  }
  if (!r.diagnostics.empty()) return fail(std::move(r.diagnostics));

  std::size_t joint = 1;
  for (const VariableDoc& d : vars) {
    if (d.role == VariableRole::skill) {
      config.skills.push_back(d.id);
      joint *= d.states.size();
    } else if (d.role == VariableRole::question) {
      QuestionDescriptor q{d.id, d.text, d.options, std::nullopt};
      if (auto it = specs.find(d.id); it != specs.end()) q.dg = it->second;
      config.pool.push_back(std::move(q));
    }
  }
  if (evaluation.size() != joint)
    r.add("evaluation_shape", "/evaluation",
          "expected " + std::to_string(joint) + " values (one per joint skill state), got " +
              std::to_string(evaluation.size()));
  for (const auto& [label, subset] : risks) {
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (subset[i] >= joint)
        r.add("risk_state_out_of_range", child(child("/risks", label), i),
              "joint state " + std::to_string(subset[i]) + " out of range (" +
                  std::to_string(joint) + " joint skill states)");
    }
  }
  if (!r.diagnostics.empty()) return fail(std::move(r.diagnostics));
  config.evaluation.table = std::move(evaluation);
  config.risks = std::move(risks);

  try {
    return {QuestionnaireModel(std::move(config)), {}};
  } catch (const Error& e) {
    r.add("model_invalid", "", e.what());
    return fail(std::move(r.diagnostics));
  }
}

QuestionnaireModel load_questionnaire(std::string_view text) {
  ParseResult result = parse_questionnaire(text);
  if (!result.ok()) throw DocumentError(std::move(result.diagnostics));
  return std::move(*result.model);
}

QuestionnaireModel load_questionnaire_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open questionnaire file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return load_questionnaire(text.str());
}

namespace {

json cpt_rows(const Factor& cpt) {
  const std::size_t card = cpt.cardinalities().back();
  json rows = json::array();
  for (std::size_t start = 0; start < cpt.size(); start += card) {
    json row = json::array();
    for (std::size_t k = 0; k < card; ++k) row.push_back(cpt[start + k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

json variable_json(const BayesianNetwork& net, const DiscreteVariable& v) {
  return {{"id", v.id}, {"states", v.states}, {"parents", net.parents(v.id)}};
}

}  // namespace

json questionnaire_to_json(const QuestionnaireModel& model) {
  const BayesianNetwork& net = model.network();
  json doc = json::object();
  doc["format_version"] = kFormatVersion;
  doc["metadata"] = {{"title", model.metadata().title},
                     {"description", model.metadata().description}};

  json skills = json::array();
  for (const auto& id : model.skills()) {
    json v = variable_json(net, net.variable(id));
    v["cpt"] = cpt_rows(net.cpt(id));
    skills.push_back(std::move(v));
  }
  doc["skills"] = std::move(skills);

  json auxiliary = json::array();
  for (const auto& var : net.variables()) {
    if (var.role != VariableRole::auxiliary) continue;
    json v = variable_json(net, var);
    v["cpt"] = cpt_rows(net.cpt(var.id));
    auxiliary.push_back(std::move(v));
  }
  doc["auxiliary"] = std::move(auxiliary);

  json questions = json::array();
  for (const auto& q : model.pool()) {
    json v = variable_json(net, net.variable(q.id));
    v["text"] = q.text;
    v["options"] = q.options;
    if (q.dg) {
      std::vector<std::size_t> mastery = q.dg->mastery_states;
      if (mastery.empty()) mastery.assign(q.dg->parents.size(), 0);
      json params = json::array();
      for (const auto& p : q.dg->params) params.push_back({{"delta", p.delta}, {"gamma", p.gamma}});
      v["dg"] = {{"mastery_states", mastery}, {"params", std::move(params)}};
    } else {
      v["cpt"] = cpt_rows(net.cpt(q.id));
    }
    questions.push_back(std::move(v));
  }
  doc["questions"] = std::move(questions);

  doc["evaluation"] = model.evaluation().table;
  doc["stop_threshold"] = model.stop_threshold();
  doc["max_questions"] = model.max_questions() ? json(*model.max_questions()) : json(nullptr);
  doc["entropy_mode"] = std::string(to_string(model.entropy_mode()));
  doc["risks"] = json::object();
  for (const auto& [label, subset] : model.risks()) doc["risks"][label] = subset;
  doc["show_explanation"] = model.show_explanation();
  return doc;
}

std::string serialize_questionnaire(const QuestionnaireModel& model) {
  return questionnaire_to_json(model).dump(2) + "\n";
}

}  // namespace adaptest
