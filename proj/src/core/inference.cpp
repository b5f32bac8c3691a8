#include "adaptest/inference.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "adaptest/errors.hpp"

namespace adaptest {

namespace {

void check_targets(const BayesianNetwork& net, const std::vector<std::string>& targets,
                   const Evidence& e) {
  if (targets.empty()) throw StructuralError("posterior needs at least one target");
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (!net.has_variable(t)) throw StructuralError("unknown target variable '" + t + "'");
    if (!seen.insert(t).second) throw StructuralError("target '" + t + "' listed twice");
    if (e.contains(t)) throw StructuralError("target '" + t + "' is also evidenced");
  }
  net.check_evidence(e);
}

std::set<std::string> ancestral_closure(const BayesianNetwork& net,
                                        const std::vector<std::string>& seeds) {
  std::set<std::string> closure;
  std::vector<std::string> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    std::string v = std::move(stack.back());
    stack.pop_back();
    if (!closure.insert(v).second) continue;
    for (const auto& p : net.parents(v)) stack.push_back(p);
  }
  return closure;
}

Factor multiply_all(const std::vector<Factor>& factors) {
  Factor out;
  for (const auto& f : factors) out = factor_product(out, f);
  return out;
}

// Unnormalized P(targets, e), targets may be empty.
Factor eliminate(const BayesianNetwork& net, const std::vector<std::string>& targets,
                 const Evidence& e) {
  std::vector<std::string> seeds = targets;
  for (const auto& [id, state] : e) seeds.push_back(id);
  const std::set<std::string> relevant = ancestral_closure(net, seeds);

  std::vector<Factor> factors;
  factors.reserve(relevant.size());
  for (const auto& id : relevant) factors.push_back(factor_reduce(net.cpt(id), e));

  const std::set<std::string> keep(targets.begin(), targets.end());
  std::vector<std::string> hidden;
  for (const auto& id : relevant) {
    if (!keep.count(id) && !e.contains(id)) hidden.push_back(id);
  }

  std::vector<std::vector<std::string>> scopes;
  for (const auto& f : factors) scopes.push_back(f.scope());
  for (const auto& var : min_fill_order(scopes, std::move(hidden))) {
    std::vector<Factor> touching;
    std::vector<Factor> rest;
    for (auto& f : factors) (f.contains(var) ? touching : rest).push_back(std::move(f));
    rest.push_back(factor_marginalize(multiply_all(touching), var));
    factors = std::move(rest);
  }
  return multiply_all(factors);
}

}  // namespace

std::vector<std::string> min_fill_order(const std::vector<std::vector<std::string>>& scopes,
                                        std::vector<std::string> to_eliminate) {
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& scope : scopes) {
    for (const auto& a : scope) {
      auto& n = adj[a];
      for (const auto& b : scope) {
        if (a != b) n.insert(b);
      }
    }
  }
  std::set<std::string> pending(to_eliminate.begin(), to_eliminate.end());
  std::vector<std::string> order;
  order.reserve(pending.size());
  while (!pending.empty()) {
    std::string best;
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    // std::set iterates in id order, so the first minimum wins ties.
    for (const auto& v : pending) {
      const auto& nbrs = adj[v];
      std::size_t fill = 0;
      for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
        for (auto j = std::next(i); j != nbrs.end(); ++j) {
          if (!adj[*i].count(*j)) ++fill;
        }
      }
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    const auto nbrs = adj[best];
    for (const auto& a : nbrs) {
      adj[a].erase(best);
      for (const auto& b : nbrs) {
        if (a != b) adj[a].insert(b);
      }
    }
    adj.erase(best);
    pending.erase(best);
    order.push_back(best);
  }
  return order;
}

Factor posterior(const BayesianNetwork& net, const std::vector<std::string>& targets,
                 const Evidence& e) {
  check_targets(net, targets, e);
  Factor joint = eliminate(net, targets, e).reordered(targets);
  if (!(joint.sum() > 0.0)) {
    throw InconsistentEvidenceError("evidence has probability zero under the model");
  }
  return joint.normalized();
}

double evidence_probability(const BayesianNetwork& net, const Evidence& e) {
  net.check_evidence(e);
  return eliminate(net, {}, e).sum();
}

Factor enumerate_joint(const BayesianNetwork& net, const std::vector<std::string>& targets,
                       const Evidence& e) {
  check_targets(net, targets, e);
  const auto& vars = net.variables();
  const std::size_t n = vars.size();

  std::size_t joint_size = 1;
  for (const auto& v : vars) {
    if (joint_size > kEnumerationCap / v.cardinality()) {
      throw CapacityError("joint state space exceeds the enumeration cap");
    }
    joint_size *= v.cardinality();
  }

  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) slot[vars[i].id] = i;

  // For each variable, the assignment positions of its CPT scope.
  std::vector<std::vector<std::size_t>> cpt_slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : net.cpt(vars[i].id).scope()) cpt_slots[i].push_back(slot.at(s));
  }
  std::vector<std::size_t> target_slots;
  std::vector<std::size_t> target_cards;
  for (const auto& t : targets) {
    target_slots.push_back(slot.at(t));
    target_cards.push_back(net.variable(t).cardinality());
  }
  std::size_t target_size = 1;
  for (auto c : target_cards) target_size *= c;
  std::vector<double> table(target_size, 0.0);

  std::vector<std::size_t> assignment(n, 0);
  std::vector<std::size_t> local;
  for (std::size_t step = 0; step < joint_size; ++step) {
    bool consistent = true;
    for (const auto& [id, state] : e) {
      if (assignment[slot.at(id)] != state) {
        consistent = false;
        break;
      }
    }
    if (consistent) {
      double p = 1.0;
      for (std::size_t i = 0; i < n && p != 0.0; ++i) {
        local.clear();
        for (auto s : cpt_slots[i]) local.push_back(assignment[s]);
        p *= net.cpt(vars[i].id).at(local);
      }
      std::size_t flat = 0;
      for (std::size_t k = 0; k < target_slots.size(); ++k) {
        flat = flat * target_cards[k] + assignment[target_slots[k]];
      }
      table[flat] += p;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (++assignment[i] < vars[i].cardinality()) break;
      assignment[i] = 0;
    }
  }

  Factor joint(targets, target_cards, std::move(table));
  if (!(joint.sum() > 0.0)) {
    throw InconsistentEvidenceError("evidence has probability zero under the model");
  }
  return joint.normalized();
}

}  // namespace adaptest
