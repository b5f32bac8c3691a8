#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptest/adaptive.hpp"
#include "adaptest/errors.hpp"

namespace adaptest {

inline constexpr int kFormatVersion = 1;

// One problem found while loading a questionnaire document. `path` is a JSON
// pointer into the document; `line`/`column` are set for syntax errors.
//
// Codes:
//   syntax_error, duplicate_key, unsupported_version, unknown_field,
//   missing_field, wrong_type, invalid_value, duplicate_id,
//   unknown_reference, parameterization, cpt_shape, dg_invalid,
//   dg_infeasible, evaluation_shape, risk_state_out_of_range,
//   network_invalid, model_invalid
struct Diagnostic {
  std::string code;
  std::string path;
  std::string message;
  std::optional<std::size_t> line;
  std::optional<std::size_t> column;

  std::string to_string() const;
};

struct ParseResult {
  std::optional<QuestionnaireModel> model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

class DocumentError : public Error {
 public:
  explicit DocumentError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Strict loader: unknown fields are rejected, every question needs exactly one
// of `cpt` or `dg`, delta/gamma specs are compiled, and the network must pass
// validate_network. Never throws on bad input; problems come back as
// diagnostics.
ParseResult parse_questionnaire(std::string_view text);
ParseResult parse_questionnaire_json(const nlohmann::json& document);

// Throws DocumentError carrying the diagnostics.
QuestionnaireModel load_questionnaire(std::string_view text);
QuestionnaireModel load_questionnaire_file(const std::string& path);

// Canonical form: sorted keys, two-space indent, trailing newline.
// serialize(parse(serialize(m))) == serialize(m).
nlohmann::json questionnaire_to_json(const QuestionnaireModel& model);
std::string serialize_questionnaire(const QuestionnaireModel& model);

}  // namespace adaptest
