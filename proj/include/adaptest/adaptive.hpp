#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaptest/elicit.hpp"
#include "adaptest/factor.hpp"
#include "adaptest/network.hpp"

namespace adaptest {

// f(s) for every joint skill state, in canonical factor order over the
// model's skill list.
struct EvaluationFunction {
  std::vector<double> table;

  friend bool operator==(const EvaluationFunction&, const EvaluationFunction&) = default;
};

struct QuestionDescriptor {
  std::string id;
  std::string text;
  std::vector<std::string> options;  // display text per answer state
  // Set when the CPT was compiled from delta/gamma parameters.
  std::optional<DGQuestionSpec> dg;

  friend bool operator==(const QuestionDescriptor&, const QuestionDescriptor&) = default;
};

// How H(S|e) is measured. `joint` is the entropy of the joint skill
// posterior; `sum_of_marginals` adds up per-skill entropies (an upper bound
// on the joint entropy, cheaper for many skills).
enum class EntropyMode { joint, sum_of_marginals };

std::string_view to_string(EntropyMode mode);

// Label -> joint skill state indices whose posterior mass is reported.
using RiskDecompositions = std::map<std::string, std::vector<std::size_t>>;

struct ModelMetadata {
  std::string title;
  std::string description;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

// Immutable unit of deployment: network, skill set, item pool, evaluation
// function and stopping configuration. `skills` lists every skill variable
// (its order fixes the joint-state order of the evaluation table) and `pool`
// every question variable, in asking-tie-break order. The constructor
// validates the network and every cross-reference and throws
// StructuralError otherwise.
class QuestionnaireModel {
 public:
  struct Config {
    ModelMetadata metadata;
    BayesianNetwork network;
    std::vector<std::string> skills;
    std::vector<QuestionDescriptor> pool;
    EvaluationFunction evaluation;
    double stop_threshold = 0.0;  // bits
    std::optional<std::size_t> max_questions;
    EntropyMode entropy_mode = EntropyMode::joint;
    RiskDecompositions risks;
    bool show_explanation = true;
  };

  explicit QuestionnaireModel(Config config);

  const ModelMetadata& metadata() const { return c_.metadata; }
  const BayesianNetwork& network() const { return c_.network; }
  const std::vector<std::string>& skills() const { return c_.skills; }
  const std::vector<QuestionDescriptor>& pool() const { return c_.pool; }
  const QuestionDescriptor& question(const std::string& id) const;
  bool in_pool(const std::string& id) const;
  const EvaluationFunction& evaluation() const { return c_.evaluation; }
  double stop_threshold() const { return c_.stop_threshold; }
  std::optional<std::size_t> max_questions() const { return c_.max_questions; }
  EntropyMode entropy_mode() const { return c_.entropy_mode; }
  const RiskDecompositions& risks() const { return c_.risks; }
  bool show_explanation() const { return c_.show_explanation; }
  std::size_t joint_skill_states() const;
  const Config& config() const { return c_; }

  friend bool operator==(const QuestionnaireModel& a, const QuestionnaireModel& b) {
    const Config& x = a.c_;
    const Config& y = b.c_;
    return x.metadata == y.metadata && x.network == y.network && x.skills == y.skills &&
           x.pool == y.pool && x.evaluation == y.evaluation &&
           x.stop_threshold == y.stop_threshold && x.max_questions == y.max_questions &&
           x.entropy_mode == y.entropy_mode && x.risks == y.risks &&
           x.show_explanation == y.show_explanation;
  }

 private:
  Config c_;
};

// Shannon entropy of a normalized factor. Base 2 gives bits. Throws
// StructuralError when the input does not sum to 1 within 1e-9.
double entropy(const Factor& dist, double base = 2.0);

// H(S|e) under the model's entropy mode.
double posterior_entropy(const QuestionnaireModel& model, const Evidence& e, double base = 2.0);

// H(S|Q,e) = sum_a P(Q=a|e) H(S|Q=a,e). Throws StructuralError when q is
// not in the pool or already answered.
double conditional_entropy(const QuestionnaireModel& model, const std::string& q,
                           const Evidence& e, double base = 2.0);

// max(0, H(S|e) - H(S|Q,e)).
double information_gain(const QuestionnaireModel& model, const std::string& q, const Evidence& e,
                        double base = 2.0);

enum class SessionStatus { active, stopped_entropy, stopped_pool_exhausted, stopped_max_questions };

std::string_view to_string(SessionStatus status);
std::optional<SessionStatus> session_status_from_string(std::string_view s);

struct TranscriptEntry {
  std::string question_id;
  std::size_t answer = 0;
  double gain = 0.0;           // information gain when the question was selected
  double entropy_after = 0.0;  // H(S|e) after the answer

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// Per-taker state: evidence, remaining pool, status and transcript. A single
// writer may mutate a session; distinct sessions are independent.
class Session {
 public:
  // Empty evidence, full pool; status is evaluated immediately, so a model
  // whose prior entropy is already at or below H* starts stopped.
  explicit Session(const QuestionnaireModel& model);

  const Evidence& evidence() const { return evidence_; }
  const std::vector<std::string>& remaining_pool() const { return remaining_; }
  const std::vector<std::string>& original_pool() const { return original_; }
  SessionStatus status() const { return status_; }
  bool active() const { return status_ == SessionStatus::active; }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

  // Adds q = answer to the evidence, removes q from the pool, appends to the
  // transcript and re-evaluates the stopping rule. Leaves the session
  // untouched on any error.
  //   StateError: session not active, or q not in the remaining pool.
  //   StructuralError: answer out of range.
  //   InconsistentEvidenceError: the answer has probability zero.
  const TranscriptEntry& record_answer(const QuestionnaireModel& model, const std::string& q,
                                       std::size_t answer);

 private:
  std::vector<std::string> original_;
  std::vector<std::string> remaining_;
  Evidence evidence_;
  SessionStatus status_ = SessionStatus::active;
  std::vector<TranscriptEntry> transcript_;
};

struct CandidateGain {
  std::string question_id;
  double gain = 0.0;

  friend bool operator==(const CandidateGain&, const CandidateGain&) = default;
};

// Gain tolerance for tie-breaking by pool order.
inline constexpr double kGainTieTolerance = 1e-9;

// Gains of every remaining question, sorted descending; gains within
// kGainTieTolerance keep pool order.
std::vector<CandidateGain> ranked_candidates(const QuestionnaireModel& model,
                                             const Session& session, double base = 2.0);

// Question with maximal information gain, or nullopt when the remaining pool
// is empty. Otherwise throws StateError if the session is not active.
std::optional<CandidateGain> pick_question(const QuestionnaireModel& model, const Session& session);

struct StopDecision {
  bool stop = false;
  SessionStatus reason = SessionStatus::active;
};

// Entropy rule first, then pool exhaustion, then max_questions.
StopDecision should_stop(const QuestionnaireModel& model, const Session& session);
StopDecision should_stop(const QuestionnaireModel& model, const Evidence& e,
                         std::size_t remaining);

// E_{P(S|e)}[f(S)].
double grade(const QuestionnaireModel& model, const Evidence& e);

// Posterior mass of each labelled subset of joint skill states.
std::map<std::string, double> marginal_risks(const QuestionnaireModel& model, const Evidence& e,
                                             const RiskDecompositions& decompositions);
std::map<std::string, double> marginal_risks(const QuestionnaireModel& model, const Evidence& e);

struct SkillPosterior {
  std::string skill_id;
  std::vector<double> distribution;

  friend bool operator==(const SkillPosterior&, const SkillPosterior&) = default;
};

struct ExplanationReport {
  std::vector<SkillPosterior> skill_posteriors;
  double joint_entropy = 0.0;
  std::vector<CandidateGain> per_candidate;  // empty once the session stopped
  double stop_margin = 0.0;                  // joint_entropy - H*

  friend bool operator==(const ExplanationReport&, const ExplanationReport&) = default;
};

ExplanationReport explain(const QuestionnaireModel& model, const Session& session);

}  // namespace adaptest
