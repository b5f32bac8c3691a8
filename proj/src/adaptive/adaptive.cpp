#include "adaptest/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adaptest/errors.hpp"
#include "adaptest/inference.hpp"

namespace adaptest {

std::string_view to_string(EntropyMode mode) {
  switch (mode) {
    case EntropyMode::joint:
      return "joint";
    case EntropyMode::sum_of_marginals:
      return "sum_of_marginals";
  }
  return "joint";
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active:
      return "active";
    case SessionStatus::stopped_entropy:
      return "stopped_entropy";
    case SessionStatus::stopped_pool_exhausted:
      return "stopped_pool_exhausted";
    case SessionStatus::stopped_max_questions:
      return "stopped_max_questions";
  }
  return "active";
}

std::optional<SessionStatus> session_status_from_string(std::string_view s) {
  for (auto status : {SessionStatus::active, SessionStatus::stopped_entropy,
                      SessionStatus::stopped_pool_exhausted, SessionStatus::stopped_max_questions}) {
    if (to_string(status) == s) return status;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// QuestionnaireModel

QuestionnaireModel::QuestionnaireModel(Config config) : c_(std::move(config)) {
  const auto& net = c_.network;
  if (auto report = validate_network(net); !report.empty()) {
    std::string msg = "invalid network:";
    for (const auto& v : report) msg += " [" + v.variable_id + ": " + v.message + "]";
    throw StructuralError(msg);
  }

  if (c_.skills.empty()) throw StructuralError("a questionnaire needs at least one skill");
  std::set<std::string> seen;
  for (const auto& s : c_.skills) {
    if (!net.has_variable(s) || net.variable(s).role != VariableRole::skill) {
      throw StructuralError("'" + s + "' is not a skill variable of the network");
    }
    if (!seen.insert(s).second) throw StructuralError("skill '" + s + "' listed twice");
  }
  for (auto& q : c_.pool) {
    if (!net.has_variable(q.id) || net.variable(q.id).role != VariableRole::question) {
      throw StructuralError("'" + q.id + "' is not a question variable of the network");
    }
    if (!seen.insert(q.id).second) throw StructuralError("question '" + q.id + "' listed twice");
    const auto& var = net.variable(q.id);
    if (q.options.empty()) q.options = var.states;
    if (q.options.size() != var.cardinality()) {
      throw StructuralError("question '" + q.id + "' needs one option text per state");
    }
    if (q.dg) {
      if (q.dg->question_id != q.id) {
        throw StructuralError("delta/gamma spec of '" + q.id + "' names another question");
      }
      Factor compiled = compile_dg_cpt(*q.dg, net.variables());
      const Factor& actual = net.cpt(q.id);
      if (compiled.scope() != actual.scope() || max_abs_difference(compiled, actual) > 1e-12) {
        throw StructuralError("CPT of '" + q.id + "' does not match its delta/gamma spec");
      }
    }
  }

  for (const auto& v : net.variables()) {
    if ((v.role == VariableRole::skill || v.role == VariableRole::question) && !seen.count(v.id)) {
      throw StructuralError(std::string(to_string(v.role)) + " variable '" + v.id +
                            "' is missing from the questionnaire");
    }
  }

  const std::size_t joint = joint_skill_states();
  if (c_.evaluation.table.size() != joint) {
    throw StructuralError("evaluation table has " + std::to_string(c_.evaluation.table.size()) +
                          " entries, skills have " + std::to_string(joint) + " joint states");
  }
  for (double v : c_.evaluation.table) {
    if (!std::isfinite(v)) throw StructuralError("evaluation values must be finite");
  }
  if (!(c_.stop_threshold >= 0.0) || !std::isfinite(c_.stop_threshold)) {
    throw StructuralError("stop threshold must be a finite value >= 0");
  }
  if (c_.max_questions && *c_.max_questions == 0) {
    throw StructuralError("max_questions must be positive");
  }
  for (const auto& [label, states] : c_.risks) {
    if (states.empty()) throw StructuralError("risk '" + label + "' lists no states");
    for (auto s : states) {
      if (s >= joint) {
        throw StructuralError("risk '" + label + "' references joint state " +
                              std::to_string(s) + " of " + std::to_string(joint));
      }
    }
  }
}

const QuestionDescriptor& QuestionnaireModel::question(const std::string& id) const {
  for (const auto& q : c_.pool) {
    if (q.id == id) return q;
  }
  throw StructuralError("'" + id + "' is not in the item pool");
}

bool QuestionnaireModel::in_pool(const std::string& id) const {
  return std::any_of(c_.pool.begin(), c_.pool.end(), [&](const auto& q) { return q.id == id; });
}

std::size_t QuestionnaireModel::joint_skill_states() const {
  std::size_t n = 1;
  for (const auto& s : c_.skills) n *= c_.network.variable(s).cardinality();
  return n;
}

// ---------------------------------------------------------------------------
// Entropy

double entropy(const Factor& dist, double base) {
  if (std::abs(dist.sum() - 1.0) > kNormalizationTolerance) {
    throw StructuralError("entropy needs a normalized distribution");
  }
  double h = 0.0;
  for (double p : dist.table()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(base);
}

namespace {

// Entropy of a normalized factor over the model's skills under its mode.
double skill_entropy(const QuestionnaireModel& model, const Factor& skills_posterior,
                     double base) {
  if (model.entropy_mode() == EntropyMode::joint) return entropy(skills_posterior, base);
  double h = 0.0;
  for (const auto& keep : model.skills()) {
    Factor marginal = skills_posterior;
    for (const auto& s : model.skills()) {
      if (s != keep) marginal = factor_marginalize(marginal, s);
    }
    h += entropy(marginal, base);
  }
  return h;
}

void require_unanswered_question(const QuestionnaireModel& model, const std::string& q,
                                 const Evidence& e) {
  if (!model.in_pool(q)) throw StructuralError("'" + q + "' is not in the item pool");
  if (e.contains(q)) throw StructuralError("question '" + q + "' is already answered");
}

double conditional_entropy_unchecked(const QuestionnaireModel& model, const std::string& q,
                                     const Evidence& e, double base) {
  std::vector<std::string> targets = model.skills();
  targets.push_back(q);
  const Factor joint = posterior(model.network(), targets, e);
  const std::size_t card = model.network().variable(q).cardinality();
  double h = 0.0;
  for (std::size_t a = 0; a < card; ++a) {
    Factor slice = factor_reduce(joint, Evidence{{q, a}});
    const double p_answer = slice.sum();
    if (!(p_answer > 0.0)) continue;
    h += p_answer * skill_entropy(model, slice.normalized(), base);
  }
  return h;
}

}  // namespace

double posterior_entropy(const QuestionnaireModel& model, const Evidence& e, double base) {
  return skill_entropy(model, posterior(model.network(), model.skills(), e), base);
}

double conditional_entropy(const QuestionnaireModel& model, const std::string& q,
                           const Evidence& e, double base) {
  require_unanswered_question(model, q, e);
  return conditional_entropy_unchecked(model, q, e, base);
}

double information_gain(const QuestionnaireModel& model, const std::string& q, const Evidence& e,
                        double base) {
  require_unanswered_question(model, q, e);
  return std::max(0.0, posterior_entropy(model, e, base) -
                           conditional_entropy_unchecked(model, q, e, base));
}

// ---------------------------------------------------------------------------
// Session

StopDecision should_stop(const QuestionnaireModel& model, const Evidence& e,
                         std::size_t remaining) {
  if (posterior_entropy(model, e) <= model.stop_threshold()) {
    return {true, SessionStatus::stopped_entropy};
  }
  if (remaining == 0) return {true, SessionStatus::stopped_pool_exhausted};
  if (model.max_questions() && e.size() >= *model.max_questions()) {
    return {true, SessionStatus::stopped_max_questions};
  }
  return {false, SessionStatus::active};
}

StopDecision should_stop(const QuestionnaireModel& model, const Session& session) {
  return should_stop(model, session.evidence(), session.remaining_pool().size());
}

Session::Session(const QuestionnaireModel& model) {
  for (const auto& q : model.pool()) original_.push_back(q.id);
  remaining_ = original_;
  status_ = should_stop(model, evidence_, remaining_.size()).reason;
}

const TranscriptEntry& Session::record_answer(const QuestionnaireModel& model,
                                              const std::string& q, std::size_t answer) {
  if (!active()) {
    throw StateError("session is not active (" + std::string(to_string(status_)) + ")");
  }
  auto it = std::find(remaining_.begin(), remaining_.end(), q);
  if (it == remaining_.end()) throw StateError("question '" + q + "' is not in the remaining pool");
  if (answer >= model.network().variable(q).cardinality()) {
    throw StructuralError("answer " + std::to_string(answer) + " out of range for '" + q + "'");
  }

  const double gain = information_gain(model, q, evidence_);
  Evidence next = evidence_.with(q, answer);
  const double h_after = posterior_entropy(model, next);

  evidence_ = std::move(next);
  remaining_.erase(it);
  transcript_.push_back({q, answer, gain, h_after});

  if (h_after <= model.stop_threshold()) {
    status_ = SessionStatus::stopped_entropy;
  } else if (remaining_.empty()) {
    status_ = SessionStatus::stopped_pool_exhausted;
  } else if (model.max_questions() && evidence_.size() >= *model.max_questions()) {
    status_ = SessionStatus::stopped_max_questions;
  }
  return transcript_.back();
}

// ---------------------------------------------------------------------------
// Selection

std::vector<CandidateGain> ranked_candidates(const QuestionnaireModel& model,
                                             const Session& session, double base) {
  const Evidence& e = session.evidence();
  std::vector<CandidateGain> gains;
  if (session.remaining_pool().empty()) return gains;
  const double h = posterior_entropy(model, e, base);
  for (const auto& q : session.remaining_pool()) {
    gains.push_back({q, std::max(0.0, h - conditional_entropy_unchecked(model, q, e, base))});
  }
  // Selection by repeated tolerant argmax; the remaining pool is in
  // declaration order, so the earliest near-maximal entry wins each round.
  std::vector<CandidateGain> ranked;
  ranked.reserve(gains.size());
  while (!gains.empty()) {
    double best = gains.front().gain;
    for (const auto& g : gains) best = std::max(best, g.gain);
    auto pick = std::find_if(gains.begin(), gains.end(), [&](const CandidateGain& g) {
      return g.gain >= best - kGainTieTolerance;
    });
    ranked.push_back(std::move(*pick));
    gains.erase(pick);
  }
  return ranked;
}

std::optional<CandidateGain> pick_question(const QuestionnaireModel& model,
                                           const Session& session) {
  if (session.remaining_pool().empty()) return std::nullopt;
  if (!session.active()) {
    throw StateError("cannot pick a question: session is " +
                     std::string(to_string(session.status())));
  }
  auto ranked = ranked_candidates(model, session);
  if (ranked.empty()) return std::nullopt;
  return ranked.front();
}

// ---------------------------------------------------------------------------
// Grading and reporting

double grade(const QuestionnaireModel& model, const Evidence& e) {
  const Factor post = posterior(model.network(), model.skills(), e);
  const auto& f = model.evaluation().table;
  double g = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) g += post[i] * f[i];
  return g;
}

std::map<std::string, double> marginal_risks(const QuestionnaireModel& model, const Evidence& e,
                                             const RiskDecompositions& decompositions) {
  const std::size_t joint = model.joint_skill_states();
  for (const auto& [label, states] : decompositions) {
    if (states.empty()) throw StructuralError("risk '" + label + "' lists no states");
    for (auto s : states) {
      if (s >= joint) {
        throw StructuralError("risk '" + label + "' references unknown joint state " +
                              std::to_string(s));
      }
    }
  }
  std::map<std::string, double> out;
  if (decompositions.empty()) return out;
  const Factor post = posterior(model.network(), model.skills(), e);
  for (const auto& [label, states] : decompositions) {
    double mass = 0.0;
    for (auto s : states) mass += post[s];
    out[label] = mass;
  }
  return out;
}

std::map<std::string, double> marginal_risks(const QuestionnaireModel& model, const Evidence& e) {
  return marginal_risks(model, e, model.risks());
}

ExplanationReport explain(const QuestionnaireModel& model, const Session& session) {
  ExplanationReport report;
  const Factor post = posterior(model.network(), model.skills(), session.evidence());
  for (const auto& keep : model.skills()) {
    Factor marginal = post;
    for (const auto& s : model.skills()) {
      if (s != keep) marginal = factor_marginalize(marginal, s);
    }
    report.skill_posteriors.push_back({keep, marginal.table()});
  }
  report.joint_entropy = skill_entropy(model, post, 2.0);
  if (session.active()) report.per_candidate = ranked_candidates(model, session);
  report.stop_margin = report.joint_entropy - model.stop_threshold();
  return report;
}

}  // namespace adaptest
