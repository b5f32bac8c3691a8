#include "adaptest/elicit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adaptest/errors.hpp"

namespace adaptest {

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InfeasibleParametersError(std::string(name) + " = " + describe(v) +
                                    " outside [0, 1]");
  }
}

const DiscreteVariable& find(std::span<const DiscreteVariable> vars, const std::string& id) {
  auto it = std::find_if(vars.begin(), vars.end(), [&](const auto& v) { return v.id == id; });
  if (it == vars.end()) throw StructuralError("unknown variable '" + id + "'");
  return *it;
}

}  // namespace

bool is_feasible(const DGParams& dg) {
  return dg.delta >= 0.0 && dg.delta <= 1.0 && dg.gamma >= 0.0 && dg.gamma <= 1.0 &&
         dg.delta / 2.0 <= dg.gamma && dg.gamma <= 1.0 - dg.delta / 2.0;
}

AnswerProbabilities dg_to_probabilities(const DGParams& dg) {
  require_unit(dg.delta, "delta");
  require_unit(dg.gamma, "gamma");
  const double base = 1.0 - dg.gamma;
  const double p = base + dg.delta / 2.0;
  const double p_prime = base - dg.delta / 2.0;
  // The region test is authoritative; p and p' are clamped against rounding
  // on its boundary.
  if (dg.gamma < dg.delta / 2.0) {
    throw InfeasibleParametersError("implied p = " + describe(p) + " > 1");
  }
  if (dg.gamma > 1.0 - dg.delta / 2.0) {
    throw InfeasibleParametersError("implied p' = " + describe(p_prime) + " < 0");
  }
  return {std::min(p, 1.0), std::max(p_prime, 0.0)};
}

DGParams probabilities_to_dg(double with_skill, double without_skill) {
  require_unit(with_skill, "p");
  require_unit(without_skill, "p'");
  if (with_skill < without_skill) {
    throw NonMonotoneQuestionError("p = " + describe(with_skill) + " is below p' = " +
                                   describe(without_skill));
  }
  return {with_skill - without_skill, 1.0 - (with_skill + without_skill) / 2.0};
}

Factor compile_dg_cpt(const DGQuestionSpec& spec, std::span<const DiscreteVariable> variables) {
  const DiscreteVariable& question = find(variables, spec.question_id);
  if (question.cardinality() != 2) {
    throw StructuralError("question '" + spec.question_id +
                          "' must be binary to use delta/gamma parameters");
  }
  std::vector<std::size_t> mastery = spec.mastery_states;
  if (mastery.empty()) mastery.assign(spec.parents.size(), 0);
  if (mastery.size() != spec.parents.size()) {
    throw StructuralError("question '" + spec.question_id +
                          "' needs one mastery state per parent");
  }

  std::vector<std::string> scope = spec.parents;
  std::vector<std::size_t> cards;
  std::size_t configs = 1;
  for (std::size_t i = 0; i < spec.parents.size(); ++i) {
    const auto& parent = find(variables, spec.parents[i]);
    if (mastery[i] >= parent.cardinality()) {
      throw StructuralError("mastery state out of range for parent '" + parent.id + "'");
    }
    cards.push_back(parent.cardinality());
    configs *= parent.cardinality();
  }
  if (spec.params.size() != configs) {
    throw StructuralError("question '" + spec.question_id + "' has " +
                          std::to_string(spec.params.size()) + " parameter pairs, expected " +
                          std::to_string(configs));
  }
  scope.push_back(spec.question_id);
  cards.push_back(2);

  std::vector<double> table;
  table.reserve(configs * 2);
  for (std::size_t c = 0; c < configs; ++c) {
    AnswerProbabilities probs;
    try {
      probs = dg_to_probabilities(spec.params[c]);
    } catch (const InfeasibleParametersError& err) {
      throw InfeasibleParametersError("question '" + spec.question_id + "' configuration " +
                                      std::to_string(c) + ": " + err.what());
    }
    // Decode configuration c (last parent fastest) and test for full mastery.
    bool masters_all = true;
    std::size_t rest = c;
    for (std::size_t i = spec.parents.size(); i-- > 0;) {
      if (rest % cards[i] != mastery[i]) masters_all = false;
      rest /= cards[i];
    }
    const double correct = masters_all ? probs.with_skill : probs.without_skill;
    table.push_back(correct);
    table.push_back(1.0 - correct);
  }
  return Factor(std::move(scope), std::move(cards), std::move(table));
}

BayesianNetwork build_naive_bayes(const DiscreteVariable& target, const Factor& prior,
                                  const std::vector<std::pair<DiscreteVariable, Factor>>& questions) {
  DiscreteVariable root = target;
  root.role = VariableRole::skill;
  if (prior.scope() != std::vector<std::string>{root.id} ||
      prior.cardinalities().front() != root.cardinality()) {
    throw StructuralError("prior must be a factor over the target alone");
  }
  if (std::abs(prior.sum() - 1.0) > kNormalizationTolerance) {
    throw StructuralError("target prior is not normalized");
  }

  std::vector<DiscreteVariable> variables{root};
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, Factor> cpts{{root.id, prior}};
  for (const auto& [variable, cpt] : questions) {
    DiscreteVariable q = variable;
    q.role = VariableRole::question;
    if (cpt.scope() != std::vector<std::string>{root.id, q.id} ||
        cpt.cardinalities() != std::vector<std::size_t>{root.cardinality(), q.cardinality()}) {
      throw StructuralError("CPT of question '" + q.id + "' must have scope (target, question)");
    }
    parents[q.id] = {root.id};
    cpts.emplace(q.id, cpt);
    variables.push_back(std::move(q));
  }
  return BayesianNetwork(std::move(variables), std::move(parents), std::move(cpts));
}

}  // namespace adaptest
