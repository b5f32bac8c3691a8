#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adaptest/factor.hpp"
#include "adaptest/network.hpp"

namespace adaptest {

// Exact P(targets | e) by variable elimination. The result's scope follows
// the order of `targets` and sums to 1.
//
// Only ancestors of targets and evidence take part; remaining variables are
// barren and sum out to 1. Elimination order is min-fill with ties broken by
// the smaller variable id.
//
// Throws StructuralError for empty/duplicate/unknown targets or a target
// that is also evidenced, InconsistentEvidenceError when P(e) = 0.
Factor posterior(const BayesianNetwork& net, const std::vector<std::string>& targets,
                 const Evidence& e);

// P(e), by the same elimination machinery.
double evidence_probability(const BayesianNetwork& net, const Evidence& e);

// Greedy min-fill order over `to_eliminate` for the interaction graph
// induced by `scopes`.
std::vector<std::string> min_fill_order(const std::vector<std::vector<std::string>>& scopes,
                                        std::vector<std::string> to_eliminate);

inline constexpr std::size_t kEnumerationCap = 10'000'000;

// Brute-force P(targets | e) by summing the full joint. Test oracle; same
// contract as posterior(). Throws CapacityError when the joint state space
// exceeds kEnumerationCap.
Factor enumerate_joint(const BayesianNetwork& net, const std::vector<std::string>& targets,
                       const Evidence& e);

}  // namespace adaptest
