#include "adaptest/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "adaptest/elicit.hpp"
#include "adaptest/errors.hpp"
#include "adaptest/inference.hpp"

namespace adaptest {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

namespace {

// Uniform in [0, 1) from the top 53 bits; unlike the std distributions this
// gives the same stream on every standard library.
double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t draw(const Factor& cpt, std::size_t row, Rng& rng) {
  const std::size_t card = cpt.cardinalities().back();
  const double u = unit(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < card; ++k) {
    const double p = cpt[row * card + k];
    if (p > 0) last_positive = k;
    cum += p;
    if (u < cum) return k;
  }
  return last_positive;  // rounding left u above the row sum
}

// Row of the CPT of `id` selected by the assignment of its parents.
std::size_t cpt_row(const BayesianNetwork& net, const std::string& id, const Profile& profile) {
  const auto& parents = net.parents(id);
  std::size_t row = 0;
  for (const auto& p : parents) {
    auto it = profile.find(p);
    if (it == profile.end())
      throw StructuralError("profile has no state for \"" + p + "\", a parent of \"" + id + "\"");
    const std::size_t card = net.variable(p).cardinality();
    if (it->second >= card)
      throw StructuralError("profile state " + std::to_string(it->second) + " out of range for \"" +
                            p + "\"");
    row = row * card + it->second;
  }
  return row;
}

std::size_t argmax(const Factor& f) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i] > f[best]) best = i;
  return best;
}

}  // namespace

Profile sample_profile(const QuestionnaireModel& model, Rng& rng) {
  const BayesianNetwork& net = model.network();
  std::vector<const DiscreteVariable*> pending;
  for (const auto& v : net.variables())
    if (v.role != VariableRole::question) pending.push_back(&v);

  Profile profile;
  while (!pending.empty()) {
    // Declaration order among the variables whose parents are all sampled.
    auto ready = std::find_if(pending.begin(), pending.end(), [&](const DiscreteVariable* v) {
      const auto& ps = net.parents(v->id);
      return std::all_of(ps.begin(), ps.end(), [&](const auto& p) { return profile.count(p); });
    });
    if (ready == pending.end()) throw StructuralError("latent subgraph is not acyclic");
    const std::string& id = (*ready)->id;
    profile[id] = draw(net.cpt(id), cpt_row(net, id, profile), rng);
    pending.erase(ready);
  }
  return profile;
}

std::size_t simulate_answer(const QuestionnaireModel& model, const Profile& profile,
                            const std::string& q, Rng& rng) {
  const BayesianNetwork& net = model.network();
  if (!net.has_variable(q) || net.variable(q).role != VariableRole::question)
    throw StructuralError("\"" + q + "\" is not a question");
  return draw(net.cpt(q), cpt_row(net, q, profile), rng);
}

std::size_t joint_skill_index(const QuestionnaireModel& model, const Profile& profile) {
  std::size_t index = 0;
  for (const auto& s : model.skills()) {
    auto it = profile.find(s);
    if (it == profile.end()) throw StructuralError("profile has no state for skill \"" + s + "\"");
    index = index * model.network().variable(s).cardinality() + it->second;
  }
  return index;
}

PolicySpec PolicySpec::parse(std::string_view name, std::uint64_t seed) {
  if (name == "ig" || name == "information_gain") return {PolicyKind::information_gain, 0};
  if (name == "random") return {PolicyKind::random, seed};
  if (name == "fixed" || name == "fixed_order") return {PolicyKind::fixed_order, 0};
  throw StructuralError("unknown policy \"" + std::string(name) + "\"");
}

std::string PolicySpec::name() const {
  switch (kind) {
    case PolicyKind::information_gain: return "information_gain";
    case PolicyKind::random: return "random";
    case PolicyKind::fixed_order: return "fixed_order";
  }
  return "unknown";
}

SessionTrace run_session(const QuestionnaireModel& model, const SimulatedTaker& taker,
                         const PolicySpec& policy) {
  std::map<std::string, std::size_t> answers;
  for (std::size_t i = 0; i < model.pool().size(); ++i) {
    Rng r(derive_seed(taker.seed, i));
    answers[model.pool()[i].id] = simulate_answer(model, taker.profile, model.pool()[i].id, r);
  }
  Rng choice(derive_seed(policy.seed, taker.seed));

  Session session(model);
  while (session.active()) {
    const auto& remaining = session.remaining_pool();
    std::string q;
    switch (policy.kind) {
      case PolicyKind::information_gain: q = pick_question(model, session)->question_id; break;
      case PolicyKind::random:
        q = remaining[std::min(remaining.size() - 1,
                               static_cast<std::size_t>(unit(choice) * remaining.size()))];
        break;
      case PolicyKind::fixed_order: q = remaining.front(); break;
    }
    session.record_answer(model, q, answers.at(q));
  }

  SessionTrace trace;
  trace.policy = policy.name();
  trace.steps = session.transcript();
  trace.status = session.status();
  trace.grade = grade(model, session.evidence());
  trace.true_state = joint_skill_index(model, taker.profile);
  trace.true_grade = model.evaluation().table.at(trace.true_state);
  trace.map_state = argmax(posterior(model.network(), model.skills(), session.evidence()));
  return trace;
}

PolicySummary summarize(const std::string& policy, const std::vector<SessionTrace>& traces) {
  PolicySummary s;
  s.policy = policy;
  s.runs = traces.size();
  for (auto status : {SessionStatus::stopped_entropy, SessionStatus::stopped_pool_exhausted,
                      SessionStatus::stopped_max_questions})
    s.stop_reasons[std::string(to_string(status))] = 0;
  if (traces.empty()) return s;

  std::vector<double> counts;
  double error = 0.0;
  std::size_t recovered = 0;
  for (const auto& t : traces) {
    counts.push_back(static_cast<double>(t.questions()));
    ++s.stop_reasons[std::string(to_string(t.status))];
    error += std::abs(t.grade - t.true_grade);
    recovered += t.recovered() ? 1 : 0;
  }
  const double n = static_cast<double>(traces.size());
  s.mean_questions = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  std::sort(counts.begin(), counts.end());
  const std::size_t mid = counts.size() / 2;
  s.median_questions = counts.size() % 2 ? counts[mid] : (counts[mid - 1] + counts[mid]) / 2;
  s.mean_abs_grade_error = error / n;
  s.map_accuracy = static_cast<double>(recovered) / n;
  return s;
}

PairedComparison paired_comparison(std::string candidate, std::string baseline,
                                   const std::vector<double>& candidate_values,
                                   const std::vector<double>& baseline_values) {
  if (candidate_values.size() != baseline_values.size())
    throw StructuralError("paired comparison needs equally many values");
  PairedComparison c;
  c.candidate = std::move(candidate);
  c.baseline = std::move(baseline);
  c.pairs = candidate_values.size();
  if (c.pairs == 0) return c;

  std::vector<double> d(c.pairs);
  for (std::size_t i = 0; i < c.pairs; ++i) d[i] = baseline_values[i] - candidate_values[i];
  const double n = static_cast<double>(c.pairs);
  c.mean_difference = std::accumulate(d.begin(), d.end(), 0.0) / n;
  if (c.pairs < 2) return c;
  double ss = 0.0;
  for (double x : d) ss += (x - c.mean_difference) * (x - c.mean_difference);
  c.sd_difference = std::sqrt(ss / (n - 1));

  if (c.sd_difference == 0.0) {
    // Degenerate: every pair differs by the same amount.
    c.t_statistic = c.mean_difference > 0 ? std::numeric_limits<double>::infinity()
                    : c.mean_difference < 0 ? -std::numeric_limits<double>::infinity()
                                            : 0.0;
    c.p_value = c.mean_difference > 0 ? 0.0 : 1.0;
  } else {
    c.t_statistic = c.mean_difference / (c.sd_difference / std::sqrt(n));
    boost::math::students_t dist(n - 1);
    c.p_value = boost::math::cdf(boost::math::complement(dist, c.t_statistic));
  }
  c.significant = c.p_value < 0.05;
  return c;
}

BatchReport run_batch(const QuestionnaireModel& model, std::size_t n_runs,
                      const std::vector<PolicySpec>& policies, std::uint64_t seed) {
  if (n_runs == 0) throw StructuralError("run_batch needs at least one run");
  if (policies.empty()) throw StructuralError("run_batch needs at least one policy");

  BatchReport report;
  report.seed = seed;
  report.rng = std::string(kRngAlgorithm);
  report.runs = n_runs;
  report.model_title = model.metadata().title;

  for (std::size_t i = 0; i < n_runs; ++i) {
    RunRecord run;
    run.index = i;
    run.taker_seed = derive_seed(seed, 0, i);
    Rng profile_rng(derive_seed(seed, 1, i));
    run.profile = sample_profile(model, profile_rng);
    const SimulatedTaker taker{run.profile, run.taker_seed};
    for (const auto& policy : policies) run.traces.push_back(run_session(model, taker, policy));
    report.run_records.push_back(std::move(run));
  }

  std::vector<std::vector<double>> counts(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    std::vector<SessionTrace> traces;
    for (const auto& run : report.run_records) {
      traces.push_back(run.traces[p]);
      counts[p].push_back(static_cast<double>(run.traces[p].questions()));
    }
    report.policies.push_back(summarize(policies[p].name(), traces));
  }
  const auto ig = std::find_if(policies.begin(), policies.end(), [](const PolicySpec& p) {
    return p.kind == PolicyKind::information_gain;
  });
  if (ig != policies.end()) {
    const std::size_t c = static_cast<std::size_t>(ig - policies.begin());
    for (std::size_t p = 0; p < policies.size(); ++p) {
      if (p == c) continue;
      report.comparisons.push_back(
          paired_comparison(policies[c].name(), policies[p].name(), counts[c], counts[p]));
    }
  }
  return report;
}

json to_json(const BatchReport& report) {
  json policies = json::array();
  for (const auto& s : report.policies) {
    policies.push_back({{"policy", s.policy},
                        {"runs", s.runs},
                        {"mean_questions", s.mean_questions},
                        {"median_questions", s.median_questions},
                        {"stop_reasons", s.stop_reasons},
                        {"mean_abs_grade_error", s.mean_abs_grade_error},
                        {"map_accuracy", s.map_accuracy}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"candidate", c.candidate},
                           {"baseline", c.baseline},
                           {"pairs", c.pairs},
                           {"mean_difference", c.mean_difference},
                           {"sd_difference", c.sd_difference},
                           {"t_statistic", std::isfinite(c.t_statistic) ? json(c.t_statistic)
                                                                        : json(nullptr)},
                           {"p_value", c.p_value},
                           {"significant", c.significant}});
  }
  json runs = json::array();
  for (const auto& r : report.run_records) {
    json traces = json::array();
    for (const auto& t : r.traces) {
      json steps = json::array();
      for (const auto& s : t.steps)
        steps.push_back({{"question_id", s.question_id},
                         {"answer", s.answer},
                         {"gain", s.gain},
                         {"entropy_after", s.entropy_after}});
      traces.push_back({{"policy", t.policy},
                        {"steps", std::move(steps)},
                        {"status", std::string(to_string(t.status))},
                        {"grade", t.grade},
                        {"true_grade", t.true_grade},
                        {"map_state", t.map_state},
                        {"true_state", t.true_state}});
    }
    runs.push_back({{"index", r.index},
                    {"taker_seed", r.taker_seed},
                    {"profile", r.profile},
                    {"traces", std::move(traces)}});
  }
  return {{"seed", report.seed},
          {"rng", report.rng},
          {"runs", report.runs},
          {"model_title", report.model_title},
          {"policies", std::move(policies)},
          {"comparisons", std::move(comparisons)},
          {"run_records", std::move(runs)}};
}

std::string serialize_report(const BatchReport& report) { return to_json(report).dump(2) + "\n"; }

QuestionnaireModel generate_questionnaire(Rng& rng, const GeneratorOptions& options) {
  if (options.skills == 0 || options.questions == 0)
    throw StructuralError("generator needs at least one skill and one question");
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const std::vector<std::string> binary = {"yes", "no"};

  std::vector<DiscreteVariable> vars;
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, Factor> cpts;
  QuestionnaireModel::Config c;
  c.metadata = {"generated", "binary skills, delta/gamma questions"};

  std::vector<double> joint = {1.0};
  for (std::size_t i = 0; i < options.skills; ++i) {
    const std::string id = "S" + std::to_string(i + 1);
    const double p = uniform(0.3, 0.7);
    vars.push_back({id, binary, VariableRole::skill});
    cpts.emplace(id, Factor({id}, {2}, {p, 1 - p}));
    c.skills.push_back(id);
    std::vector<double> next;
    for (double x : joint) {
      next.push_back(x * p);
      next.push_back(x * (1 - p));
    }
    joint = std::move(next);
  }
  for (std::size_t i = 0; i < options.questions; ++i) {
    const std::string id = "Q" + std::to_string(i + 1);
    const std::string parent = c.skills[i % options.skills];
    const double delta = uniform(options.delta_min, options.delta_max);
    const double gamma = uniform(std::max(delta / 2, 0.3), std::min(1 - delta / 2, 0.7));
    vars.push_back({id, binary, VariableRole::question});
    parents[id] = {parent};
    DGQuestionSpec spec{id, {parent}, {0}, {{delta, gamma}, {delta, gamma}}};
    cpts.emplace(id, compile_dg_cpt(spec, vars));
    c.pool.push_back({id, id, {}, spec});
  }

  double h0 = 0.0;
  for (double x : joint)
    if (x > 0) h0 -= x * std::log2(x);
  c.network = BayesianNetwork(vars, parents, cpts);
  c.evaluation.table.resize(joint.size());
  for (std::size_t s = 0; s < joint.size(); ++s) {
    // Fraction of mastered skills; state 0 = yes.
    std::size_t mastered = 0;
    for (std::size_t k = 0; k < options.skills; ++k)
      mastered += ((s >> k) & 1) == 0 ? 1 : 0;
    c.evaluation.table[s] = static_cast<double>(mastered) / static_cast<double>(options.skills);
  }
  c.stop_threshold = options.stop_fraction * h0;
  return QuestionnaireModel(std::move(c));
}

}  // namespace adaptest
