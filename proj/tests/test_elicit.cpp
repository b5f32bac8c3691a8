#include <doctest.h>

#include <cmath>

#include "adaptest/adaptive.hpp"
#include "adaptest/elicit.hpp"
#include "adaptest/errors.hpp"
#include "adaptest/inference.hpp"
#include "support/models.hpp"

using namespace adaptest;
using testing::binary;

TEST_CASE("dg_to_probabilities") {
  // p = (1-g) + d/2, p' = (1-g) - d/2
  auto probs = dg_to_probabilities({0.8, 0.5});
  CHECK(probs.with_skill == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(probs.without_skill == doctest::Approx(0.1).epsilon(1e-15));

  probs = dg_to_probabilities({0.0, 0.5});
  CHECK(probs.with_skill == 0.5);
  CHECK(probs.without_skill == 0.5);

  try {
    dg_to_probabilities({0.8, 0.0});
    FAIL("expected InfeasibleParametersError");
  } catch (const InfeasibleParametersError& e) {
    CHECK(std::string(e.what()) == "implied p = 1.4 > 1");
  }
  try {
    dg_to_probabilities({0.8, 1.0});
    FAIL("expected InfeasibleParametersError");
  } catch (const InfeasibleParametersError& e) {
    CHECK(std::string(e.what()).find("p' = -0.4 < 0") != std::string::npos);
  }
  CHECK_THROWS_AS(dg_to_probabilities({1.2, 0.5}), InfeasibleParametersError);
}

TEST_CASE("probabilities_to_dg") {
  auto dg = probabilities_to_dg(0.9, 0.1);
  CHECK(dg.delta == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(dg.gamma == doctest::Approx(0.5).epsilon(1e-15));
  dg = probabilities_to_dg(0.5, 0.5);
  CHECK(dg.delta == 0.0);
  CHECK(dg.gamma == 0.5);
  CHECK_THROWS_AS(probabilities_to_dg(0.1, 0.9), NonMonotoneQuestionError);
  CHECK_THROWS_AS(probabilities_to_dg(1.1, 0.9), InfeasibleParametersError);
}

TEST_CASE("round trip and feasible region on a grid") {
  constexpr int kSteps = 100;
  for (int i = 0; i <= kSteps; ++i) {
    for (int j = 0; j <= kSteps; ++j) {
      const DGParams dg{i / double(kSteps), j / double(kSteps)};
      const bool region = dg.delta / 2 <= dg.gamma && dg.gamma <= 1 - dg.delta / 2;
      CHECK(is_feasible(dg) == region);
      if (region) {
        auto probs = dg_to_probabilities(dg);
        CHECK(probs.with_skill <= 1.0);
        CHECK(probs.without_skill >= 0.0);
        auto back = probabilities_to_dg(probs.with_skill, probs.without_skill);
        CHECK(std::abs(back.delta - dg.delta) <= 1e-12);
        CHECK(std::abs(back.gamma - dg.gamma) <= 1e-12);
      } else {
        CHECK_THROWS_AS(dg_to_probabilities(dg), InfeasibleParametersError);
      }
    }
  }
}

TEST_CASE("compile_dg_cpt") {
  const std::vector<DiscreteVariable> vars = {
      binary("A", VariableRole::skill), binary("B", VariableRole::skill),
      binary("Q", VariableRole::question),
      DiscreteVariable{"Q3", {"a", "b", "c"}, VariableRole::question}};

  SUBCASE("single Boolean parent") {
    DGQuestionSpec spec{"Q", {"A"}, {}, {{0.8, 0.5}, {0.8, 0.5}}};
    Factor cpt = compile_dg_cpt(spec, vars);
    CHECK(cpt.scope() == std::vector<std::string>{"A", "Q"});
    CHECK(cpt[0] == doctest::Approx(0.9));
    CHECK(cpt[1] == doctest::Approx(0.1));
    CHECK(cpt[2] == doctest::Approx(0.1));
    CHECK(cpt[3] == doctest::Approx(0.9));
  }
  SUBCASE("mastery state can be the second label") {
    DGQuestionSpec spec{"Q", {"A"}, {1}, {{0.8, 0.5}, {0.8, 0.5}}};
    Factor cpt = compile_dg_cpt(spec, vars);
    CHECK(cpt[0] == doctest::Approx(0.1));
    CHECK(cpt[2] == doctest::Approx(0.9));
  }
  SUBCASE("two parents, one pair per configuration") {
    DGQuestionSpec spec{"Q", {"A", "B"}, {}, {{0.8, 0.5}, {0.2, 0.5}, {0.4, 0.6}, {0.6, 0.5}}};
    Factor cpt = compile_dg_cpt(spec, vars);
    REQUIRE(cpt.size() == 8);
    // (A=0,B=0) masters both -> p; others -> p'.
    CHECK(cpt[0] == doctest::Approx(0.9));
    CHECK(cpt[2] == doctest::Approx(0.4));
    CHECK(cpt[4] == doctest::Approx(0.2));
    CHECK(cpt[6] == doctest::Approx(0.2));
    for (std::size_t row = 0; row < 4; ++row) {
      CHECK(cpt[2 * row] + cpt[2 * row + 1] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(compile_dg_cpt({"Q3", {"A"}, {}, {{0.5, 0.5}, {0.5, 0.5}}}, vars),
                    StructuralError);
    CHECK_THROWS_AS(compile_dg_cpt({"Q", {"A"}, {}, {{0.5, 0.5}}}, vars), StructuralError);
    CHECK_THROWS_AS(compile_dg_cpt({"Q", {"Z"}, {}, {{0.5, 0.5}, {0.5, 0.5}}}, vars),
                    StructuralError);
    try {
      compile_dg_cpt({"Q", {"A"}, {}, {{0.5, 0.5}, {0.8, 0.0}}}, vars);
      FAIL("expected InfeasibleParametersError");
    } catch (const InfeasibleParametersError& e) {
      CHECK(std::string(e.what()).find("configuration 1") != std::string::npos);
    }
  }
}

namespace {

QuestionnaireModel single_skill_dg(double delta, double gamma) {
  std::vector<DiscreteVariable> vars = {binary("S", VariableRole::skill),
                                        binary("Q", VariableRole::question)};
  DGQuestionSpec spec{"Q", {"S"}, {}, {{delta, gamma}, {delta, gamma}}};
  Factor cpt = compile_dg_cpt(spec, vars);
  QuestionnaireModel::Config c;
  c.network = BayesianNetwork(vars, {{"Q", {"S"}}},
                              {{"S", Factor({"S"}, {2}, {0.5, 0.5})}, {"Q", cpt}});
  c.skills = {"S"};
  c.pool = {{"Q", "q", {}, spec}};
  c.evaluation = {{1.0, 0.0}};
  return QuestionnaireModel(std::move(c));
}

}  // namespace

TEST_CASE("compiled CPTs are normalized and zero delta carries no information") {
  auto model = single_skill_dg(0.0, 0.3);
  CHECK(validate_network(model.network()).empty());
  CHECK(information_gain(model, "Q", {}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("higher delta at fixed gamma gives higher information gain") {
  const double gamma = 0.5;
  double previous = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const double delta = i / 10.0;
    const double gain = information_gain(single_skill_dg(delta, gamma), "Q", {});
    if (i > 0) CHECK(gain > previous);
    previous = gain;
  }
}

TEST_CASE("build_naive_bayes") {
  DiscreteVariable target{"target", {}, VariableRole::skill};
  for (int i = 0; i < 8; ++i) target.states.push_back("t" + std::to_string(i));
  std::vector<double> prior_table(8, 1.0 / 8);

  SUBCASE("48 questions give a 49-node star") {
    std::mt19937_64 rng(4);
    std::vector<std::pair<DiscreteVariable, Factor>> questions;
    for (int i = 0; i < 48; ++i) {
      DiscreteVariable q{"q" + std::to_string(i), {"a", "b", "c"}, VariableRole::question};
      questions.emplace_back(q, testing::random_cpt(rng, {"target", q.id}, {8, 3}));
    }
    auto net = build_naive_bayes(target, Factor({"target"}, {8}, prior_table), questions);
    CHECK(net.size() == 49);
    CHECK(net.edge_count() == 48);
    CHECK(net.children("target").size() == 48);
    CHECK(validate_network(net).empty());
  }
  SUBCASE("one question matches Bayes rule") {
    DiscreteVariable t{"T", {"a", "b"}, VariableRole::skill};
    auto net = build_naive_bayes(t, Factor({"T"}, {2}, {0.3, 0.7}),
                                 {{binary("Q", VariableRole::question),
                                   Factor({"T", "Q"}, {2, 2}, {0.8, 0.2, 0.4, 0.6})}});
    // P(a|Q=0) = 0.3*0.8 / (0.3*0.8 + 0.7*0.4) = 0.24 / 0.52
    Factor p = posterior(net, {"T"}, Evidence{{"Q", 0}});
    CHECK(p[0] == doctest::Approx(0.24 / 0.52).epsilon(1e-12));
  }
  SUBCASE("no questions leaves the prior") {
    auto net = build_naive_bayes(target, Factor({"target"}, {8}, prior_table), {});
    CHECK(net.size() == 1);
    Factor p = posterior(net, {"target"}, {});
    CHECK(p[3] == doctest::Approx(0.125));
  }
  SUBCASE("scope mismatch") {
    DiscreteVariable t{"T", {"a", "b"}, VariableRole::skill};
    CHECK_THROWS_AS(build_naive_bayes(t, Factor({"T"}, {2}, {0.5, 0.5}),
                                      {{binary("Q", VariableRole::question),
                                        Factor({"Q", "T"}, {2, 2}, {0.5, 0.5, 0.5, 0.5})}}),
                    StructuralError);
  }
}
