#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptest/factor.hpp"
#include "adaptest/network.hpp"

namespace adaptest {

// Discrimination/difficulty parametrization of a binary question.
//   delta = p - p'           (discriminative power)
//   gamma = 1 - (p + p') / 2 (difficulty)
// where p and p' are the probabilities of a correct answer with and
// without the skill. Feasible iff delta/2 <= gamma <= 1 - delta/2.
struct DGParams {
  double delta = 0.0;
  double gamma = 0.5;

  friend bool operator==(const DGParams&, const DGParams&) = default;
};

struct AnswerProbabilities {
  double with_skill = 0.0;     // p
  double without_skill = 0.0;  // p'
};

bool is_feasible(const DGParams& dg);

// Throws InfeasibleParametersError naming the violated bound.
AnswerProbabilities dg_to_probabilities(const DGParams& dg);

// Throws InfeasibleParametersError for values outside [0, 1] and
// NonMonotoneQuestionError when p < p'.
DGParams probabilities_to_dg(double with_skill, double without_skill);

// Binary question parametrized by one (delta, gamma) pair per joint parent
// configuration, configurations in canonical factor order over `parents`.
//
// A configuration where every parent sits in its mastery state gets
// P(correct) = p of its pair; any other configuration gets p'. State 0 of the
// question is "correct".
struct DGQuestionSpec {
  std::string question_id;
  std::vector<std::string> parents;
  // Per parent, the state index meaning "has the skill". Empty = all 0.
  std::vector<std::size_t> mastery_states;
  std::vector<DGParams> params;

  friend bool operator==(const DGQuestionSpec&, const DGQuestionSpec&) = default;
};

// CPT with scope (parents..., question). `variables` must contain the
// question and every parent. Infeasible parameters raise
// InfeasibleParametersError citing the configuration index.
Factor compile_dg_cpt(const DGQuestionSpec& spec, std::span<const DiscreteVariable> variables);

// Star network with `target` (role skill) as the only parent of every
// question. Each question CPT must have scope (target, question).
BayesianNetwork build_naive_bayes(const DiscreteVariable& target, const Factor& prior,
                                  const std::vector<std::pair<DiscreteVariable, Factor>>& questions);

}  // namespace adaptest
