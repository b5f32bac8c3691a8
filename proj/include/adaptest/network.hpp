#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "adaptest/factor.hpp"

namespace adaptest {

enum class VariableRole { skill, question, auxiliary };

std::string_view to_string(VariableRole role);

struct DiscreteVariable {
  std::string id;
  std::vector<std::string> states;
  VariableRole role = VariableRole::skill;

  std::size_t cardinality() const { return states.size(); }
  friend bool operator==(const DiscreteVariable&, const DiscreteVariable&) = default;
};

// Tolerance applied to every CPT row-sum check.
inline constexpr double kNormalizationTolerance = 1e-9;

// Discrete Bayesian network. The constructor only enforces referential
// integrity (ids resolve, each CPT has scope (parents..., variable) with
// matching cardinalities). Semantic rules such as acyclicity, normalization
// and the questionnaire structure are reported by validate_network().
class BayesianNetwork {
 public:
  BayesianNetwork() = default;
  BayesianNetwork(std::vector<DiscreteVariable> variables,
                  std::map<std::string, std::vector<std::string>> parents,
                  std::map<std::string, Factor> cpts);

  const std::vector<DiscreteVariable>& variables() const { return variables_; }
  std::size_t size() const { return variables_.size(); }
  bool has_variable(const std::string& id) const { return index_.count(id) != 0; }
  const DiscreteVariable& variable(const std::string& id) const;
  const std::vector<std::string>& parents(const std::string& id) const;
  std::vector<std::string> children(const std::string& id) const;
  const Factor& cpt(const std::string& id) const;
  const std::map<std::string, std::vector<std::string>>& parent_map() const { return parents_; }
  const std::map<std::string, Factor>& cpts() const { return cpts_; }
  std::size_t edge_count() const;

  // Throws StructuralError if `e` names an unknown variable or an
  // out-of-range state.
  void check_evidence(const Evidence& e) const;

  friend bool operator==(const BayesianNetwork&, const BayesianNetwork&) = default;

 private:
  std::vector<DiscreteVariable> variables_;
  std::map<std::string, std::vector<std::string>> parents_;
  std::map<std::string, Factor> cpts_;
  std::map<std::string, std::size_t> index_;
};

enum class ViolationKind {
  too_few_states,
  duplicate_state_label,
  cycle,
  cpt_not_normalized,
  question_has_child,
  question_without_skill_parent,
  skill_with_non_skill_parent,
  auxiliary_with_question_parent,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  std::string variable_id;
  ViolationKind kind;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

// Every violated invariant, sorted by variable id then kind.
ValidationReport validate_network(const BayesianNetwork& net);

}  // namespace adaptest
