#include "adaptest/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "adaptest/errors.hpp"

namespace adaptest {

std::string_view to_string(VariableRole role) {
  switch (role) {
    case VariableRole::skill:
      return "skill";
    case VariableRole::question:
      return "question";
    case VariableRole::auxiliary:
      return "auxiliary";
  }
  return "unknown";
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::too_few_states:
      return "too few states";
    case ViolationKind::duplicate_state_label:
      return "duplicate state label";
    case ViolationKind::cycle:
      return "cycle";
    case ViolationKind::cpt_not_normalized:
      return "CPT row not normalized";
    case ViolationKind::question_has_child:
      return "question has child";
    case ViolationKind::question_without_skill_parent:
      return "question without skill parent";
    case ViolationKind::skill_with_non_skill_parent:
      return "skill with non-skill parent";
    case ViolationKind::auxiliary_with_question_parent:
      return "auxiliary with question parent";
  }
  return "unknown";
}

BayesianNetwork::BayesianNetwork(std::vector<DiscreteVariable> variables,
                                 std::map<std::string, std::vector<std::string>> parents,
                                 std::map<std::string, Factor> cpts)
    : variables_(std::move(variables)), parents_(std::move(parents)), cpts_(std::move(cpts)) {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (!index_.emplace(variables_[i].id, i).second) {
      throw StructuralError("duplicate variable id '" + variables_[i].id + "'");
    }
  }
  for (const auto& [id, ps] : parents_) {
    if (!has_variable(id)) throw StructuralError("parent list for unknown variable '" + id + "'");
    for (const auto& p : ps) {
      if (!has_variable(p)) {
        throw StructuralError("variable '" + id + "' has unknown parent '" + p + "'");
      }
    }
    std::set<std::string> unique(ps.begin(), ps.end());
    if (unique.size() != ps.size()) {
      throw StructuralError("variable '" + id + "' lists a parent twice");
    }
  }
  for (const auto& v : variables_) {
    parents_.try_emplace(v.id);
    auto it = cpts_.find(v.id);
    if (it == cpts_.end()) throw StructuralError("variable '" + v.id + "' has no CPT");
    std::vector<std::string> scope = parents_.at(v.id);
    scope.push_back(v.id);
    if (it->second.scope() != scope) {
      throw StructuralError("CPT of '" + v.id + "' must have scope (parents..., variable)");
    }
    for (const auto& s : scope) {
      if (it->second.cardinality(s) != variable(s).cardinality()) {
        throw StructuralError("CPT of '" + v.id + "' disagrees on the cardinality of '" + s + "'");
      }
    }
  }
  for (const auto& [id, f] : cpts_) {
    if (!has_variable(id)) throw StructuralError("CPT for unknown variable '" + id + "'");
  }
}

const DiscreteVariable& BayesianNetwork::variable(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw StructuralError("unknown variable '" + id + "'");
  return variables_[it->second];
}

const std::vector<std::string>& BayesianNetwork::parents(const std::string& id) const {
  auto it = parents_.find(id);
  if (it == parents_.end()) throw StructuralError("unknown variable '" + id + "'");
  return it->second;
}

std::vector<std::string> BayesianNetwork::children(const std::string& id) const {
  if (!has_variable(id)) throw StructuralError("unknown variable '" + id + "'");
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    const auto& ps = parents_.at(v.id);
    if (std::find(ps.begin(), ps.end(), id) != ps.end()) out.push_back(v.id);
  }
  return out;
}

const Factor& BayesianNetwork::cpt(const std::string& id) const {
  auto it = cpts_.find(id);
  if (it == cpts_.end()) throw StructuralError("unknown variable '" + id + "'");
  return it->second;
}

std::size_t BayesianNetwork::edge_count() const {
  std::size_t n = 0;
  for (const auto& [id, ps] : parents_) n += ps.size();
  return n;
}

void BayesianNetwork::check_evidence(const Evidence& e) const {
  for (const auto& [id, state] : e) {
    const auto& v = variable(id);
    if (state >= v.cardinality()) {
      throw StructuralError("evidence state " + std::to_string(state) + " out of range for '" +
                            id + "'");
    }
  }
}

namespace {

bool reaches(const BayesianNetwork& net, const std::string& from, const std::string& target) {
  std::vector<std::string> stack = net.children(from);
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string v = std::move(stack.back());
    stack.pop_back();
    if (v == target) return true;
    if (!seen.insert(v).second) continue;
    for (auto& c : net.children(v)) stack.push_back(std::move(c));
  }
  return false;
}

}  // namespace

ValidationReport validate_network(const BayesianNetwork& net) {
  ValidationReport report;
  auto add = [&](const std::string& id, ViolationKind kind, std::string message) {
    report.push_back({id, kind, std::move(message)});
  };

  for (const auto& v : net.variables()) {
    if (v.cardinality() < 2) {
      add(v.id, ViolationKind::too_few_states, "variable needs at least 2 states");
    }
    std::set<std::string> labels(v.states.begin(), v.states.end());
    if (labels.size() != v.states.size()) {
      add(v.id, ViolationKind::duplicate_state_label, "state labels must be unique");
    }

    if (reaches(net, v.id, v.id)) add(v.id, ViolationKind::cycle, "variable lies on a directed cycle");

    const Factor& cpt = net.cpt(v.id);
    const std::size_t card = v.cardinality();
    for (std::size_t row = 0; row * card < cpt.size(); ++row) {
      double total = 0.0;
      for (std::size_t k = 0; k < card; ++k) total += cpt[row * card + k];
      if (std::abs(total - 1.0) > kNormalizationTolerance) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "CPT row " << row << " sums to " << total;
        add(v.id, ViolationKind::cpt_not_normalized, msg.str());
        break;
      }
    }

    const auto& parents = net.parents(v.id);
    switch (v.role) {
      case VariableRole::question: {
        if (!net.children(v.id).empty()) {
          add(v.id, ViolationKind::question_has_child, "question variables must be leaves");
        }
        bool skill_parent = std::any_of(parents.begin(), parents.end(), [&](const auto& p) {
          return net.variable(p).role == VariableRole::skill;
        });
        if (!skill_parent) {
          add(v.id, ViolationKind::question_without_skill_parent,
              "question needs at least one skill parent");
        }
        break;
      }
      case VariableRole::skill:
        for (const auto& p : parents) {
          if (net.variable(p).role != VariableRole::skill) {
            add(v.id, ViolationKind::skill_with_non_skill_parent,
                "skill has non-skill parent '" + p + "'");
            break;
          }
        }
        break;
      case VariableRole::auxiliary:
        for (const auto& p : parents) {
          if (net.variable(p).role == VariableRole::question) {
            add(v.id, ViolationKind::auxiliary_with_question_parent,
                "auxiliary variable has question parent '" + p + "'");
            break;
          }
        }
        break;
    }
  }

  std::stable_sort(report.begin(), report.end(), [](const Violation& a, const Violation& b) {
    if (a.variable_id != b.variable_id) return a.variable_id < b.variable_id;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return report;
}

}  // namespace adaptest
