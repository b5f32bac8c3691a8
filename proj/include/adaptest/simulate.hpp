#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptest/adaptive.hpp"

namespace adaptest {

// All simulation randomness comes from mt19937_64 engines whose seeds are
// derived from one batch seed with splitmix64, so every stream is
// reproducible and independent of execution order.
using Rng = std::mt19937_64;
inline constexpr std::string_view kRngAlgorithm = "mt19937_64 seeded via splitmix64";

std::uint64_t splitmix64(std::uint64_t x);
// Seed of sub-stream (a, b) of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Latent assignment of a simulated taker: every skill and auxiliary variable.
using Profile = std::map<std::string, std::size_t>;

// Ancestral sample of the skill and auxiliary variables from their prior.
Profile sample_profile(const QuestionnaireModel& model, Rng& rng);

// Answer drawn from P(q | parents = profile). Throws StructuralError when q
// is not a question or the profile misses one of its parents.
std::size_t simulate_answer(const QuestionnaireModel& model, const Profile& profile,
                            const std::string& q, Rng& rng);

// Index of the profile's skill assignment in the joint skill state order.
std::size_t joint_skill_index(const QuestionnaireModel& model, const Profile& profile);

struct SimulatedTaker {
  Profile profile;
  // Answers are drawn once per question from derive_seed(seed, pool index),
  // so a taker answers a question the same way under every policy.
  std::uint64_t seed = 0;
};

enum class PolicyKind { information_gain, random, fixed_order };

struct PolicySpec {
  PolicyKind kind = PolicyKind::information_gain;
  std::uint64_t seed = 0;  // random only

  // "ig" | "information_gain", "random", "fixed" | "fixed_order".
  static PolicySpec parse(std::string_view name, std::uint64_t seed = 0);
  std::string name() const;
};

struct SessionTrace {
  std::string policy;
  std::vector<TranscriptEntry> steps;
  SessionStatus status = SessionStatus::active;
  double grade = 0.0;
  double true_grade = 0.0;  // f(profile)
  std::size_t map_state = 0;
  std::size_t true_state = 0;

  std::size_t questions() const { return steps.size(); }
  bool recovered() const { return map_state == true_state; }
};

SessionTrace run_session(const QuestionnaireModel& model, const SimulatedTaker& taker,
                         const PolicySpec& policy);

struct PolicySummary {
  std::string policy;
  std::size_t runs = 0;
  double mean_questions = 0.0;
  double median_questions = 0.0;
  std::map<std::string, std::size_t> stop_reasons;
  double mean_abs_grade_error = 0.0;
  double map_accuracy = 0.0;
};

// One-sided paired t-test of H1: mean(baseline - candidate) > 0, i.e. the
// candidate asks fewer questions.
struct PairedComparison {
  std::string candidate;
  std::string baseline;
  std::size_t pairs = 0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;  // p < 0.05
};

PairedComparison paired_comparison(std::string candidate, std::string baseline,
                                   const std::vector<double>& candidate_values,
                                   const std::vector<double>& baseline_values);

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t taker_seed = 0;
  Profile profile;
  std::vector<SessionTrace> traces;  // one per policy, in policy order
};

struct BatchReport {
  std::uint64_t seed = 0;
  std::string rng;
  std::size_t runs = 0;
  std::string model_title;
  std::vector<PolicySummary> policies;
  // information_gain against every other policy, when it was run.
  std::vector<PairedComparison> comparisons;
  std::vector<RunRecord> run_records;
};

// Runs `n_runs` takers, each under every policy (paired design). Summaries
// are folds over run_records in index order.
BatchReport run_batch(const QuestionnaireModel& model, std::size_t n_runs,
                      const std::vector<PolicySpec>& policies, std::uint64_t seed);

PolicySummary summarize(const std::string& policy, const std::vector<SessionTrace>& traces);

nlohmann::json to_json(const BatchReport& report);
// Two-space indented JSON with a trailing newline; no timestamps, so equal
// seeds give byte-identical text.
std::string serialize_report(const BatchReport& report);

// Random questionnaire of binary skills and binary questions elicited with
// delta ~ U[delta_min, delta_max]; H* is a fraction of the prior entropy.
struct GeneratorOptions {
  std::size_t skills = 2;
  std::size_t questions = 10;
  double delta_min = 0.2;
  double delta_max = 0.9;
  double stop_fraction = 0.5;
};

QuestionnaireModel generate_questionnaire(Rng& rng, const GeneratorOptions& options = {});

}  // namespace adaptest
