#pragma once

// Shared test fixtures: the two reference networks and random generators.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "adaptest/factor.hpp"
#include "adaptest/network.hpp"

namespace adaptest::testing {

inline DiscreteVariable binary(const std::string& id, VariableRole role) {
  return {id, {"yes", "no"}, role};
}

// Skill S with P(s)=0.5; Q1: P(q1|s)=0.9, P(q1|~s)=0.1; Q2: P(q2|s)=0.7, P(q2|~s)=0.3.
// State 0 is "yes" throughout.
inline BayesianNetwork net_a() {
  return BayesianNetwork(
      {binary("S", VariableRole::skill), binary("Q1", VariableRole::question),
       binary("Q2", VariableRole::question)},
      {{"Q1", {"S"}}, {"Q2", {"S"}}},
      {{"S", Factor({"S"}, {2}, {0.5, 0.5})},
       {"Q1", Factor({"S", "Q1"}, {2, 2}, {0.9, 0.1, 0.1, 0.9})},
       {"Q2", Factor({"S", "Q2"}, {2, 2}, {0.7, 0.3, 0.3, 0.7})}});
}

inline Factor uniform_cpt(const std::vector<std::string>& scope) {
  std::vector<std::size_t> cards(scope.size(), 2);
  std::size_t n = std::size_t{1} << scope.size();
  return Factor(scope, cards, std::vector<double>(n, 0.5));
}

// Three skills, four questions: S1->S2, S1->Q1, S1->Q2, S2->Q2, S2->Q3, S3->Q4.
inline std::map<std::string, std::vector<std::string>> net_b_parents() {
  return {{"S2", {"S1"}}, {"Q1", {"S1"}}, {"Q2", {"S1", "S2"}}, {"Q3", {"S2"}}, {"Q4", {"S3"}}};
}

inline std::vector<DiscreteVariable> net_b_variables() {
  return {binary("S1", VariableRole::skill),    binary("S2", VariableRole::skill),
          binary("S3", VariableRole::skill),    binary("Q1", VariableRole::question),
          binary("Q2", VariableRole::question), binary("Q3", VariableRole::question),
          binary("Q4", VariableRole::question)};
}

inline BayesianNetwork net_b_uniform() {
  auto parents = net_b_parents();
  std::map<std::string, Factor> cpts;
  for (const auto& v : net_b_variables()) {
    std::vector<std::string> scope = parents[v.id];
    scope.push_back(v.id);
    cpts.emplace(v.id, uniform_cpt(scope));
  }
  return BayesianNetwork(net_b_variables(), parents, cpts);
}

// Random CPT over scope (parents..., child); roughly `zero_rate` of entries
// are zeroed but every row keeps positive mass.
inline Factor random_cpt(std::mt19937_64& rng, const std::vector<std::string>& scope,
                         const std::vector<std::size_t>& cards, double zero_rate = 0.0) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::bernoulli_distribution zero(zero_rate);
  std::size_t total = 1;
  for (auto c : cards) total *= c;
  const std::size_t child = cards.back();
  std::vector<double> table(total);
  for (std::size_t row = 0; row < total / child; ++row) {
    double sum = 0.0;
    for (std::size_t k = 0; k < child; ++k) {
      double v = (k > 0 && zero(rng)) ? 0.0 : unit(rng);
      table[row * child + k] = v;
      sum += v;
    }
    for (std::size_t k = 0; k < child; ++k) table[row * child + k] /= sum;
  }
  return Factor(scope, cards, std::move(table));
}

inline BayesianNetwork with_cpts(const BayesianNetwork& shape, std::mt19937_64& rng,
                                 double zero_rate = 0.0) {
  std::map<std::string, Factor> cpts;
  for (const auto& v : shape.variables()) {
    const Factor& old = shape.cpt(v.id);
    cpts.emplace(v.id, random_cpt(rng, old.scope(), old.cardinalities(), zero_rate));
  }
  return BayesianNetwork(shape.variables(), shape.parent_map(), cpts);
}

// Random DAG of `n` binary variables (generic roles), each with up to
// `max_parents` parents drawn from earlier variables.
inline BayesianNetwork random_network(std::mt19937_64& rng, std::size_t n,
                                      std::size_t max_parents = 3, double zero_rate = 0.1) {
  std::vector<DiscreteVariable> vars;
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, Factor> cpts;
  for (std::size_t i = 0; i < n; ++i) {
    std::string id = "V" + std::to_string(i);
    vars.push_back(binary(id, VariableRole::auxiliary));
    std::vector<std::string> ps;
    if (i > 0) {
      std::uniform_int_distribution<std::size_t> count(0, std::min(i, max_parents));
      std::vector<std::size_t> pool(i);
      for (std::size_t k = 0; k < i; ++k) pool[k] = k;
      std::shuffle(pool.begin(), pool.end(), rng);
      std::size_t c = count(rng);
      std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(c));
      for (std::size_t k = 0; k < c; ++k) ps.push_back("V" + std::to_string(pool[k]));
    }
    std::vector<std::string> scope = ps;
    scope.push_back(id);
    cpts.emplace(id, random_cpt(rng, scope, std::vector<std::size_t>(scope.size(), 2), zero_rate));
    parents.emplace(id, std::move(ps));
  }
  return BayesianNetwork(vars, parents, cpts);
}

// Full joint sample in declaration order (variables must be topologically
// ordered, as random_network produces).
inline std::map<std::string, std::size_t> ancestral_sample(const BayesianNetwork& net,
                                                           std::mt19937_64& rng) {
  std::map<std::string, std::size_t> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& v : net.variables()) {
    std::vector<std::size_t> states;
    for (const auto& p : net.parents(v.id)) states.push_back(out.at(p));
    states.push_back(0);
    const Factor& cpt = net.cpt(v.id);
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t pick = v.cardinality() - 1;
    for (std::size_t k = 0; k < v.cardinality(); ++k) {
      states.back() = k;
      cumulative += cpt.at(states);
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    out[v.id] = pick;
  }
  return out;
}

}  // namespace adaptest::testing
