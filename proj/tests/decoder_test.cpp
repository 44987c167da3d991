// tests/decoder_test.cpp

// Copyright 2026 The protrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "protrack/decoder.hpp"
#include "protrack/synth.hpp"

namespace protrack {
namespace {

using testing::anonymous_vocabulary;
using testing::brute_force_best_with_edge;
using testing::brute_force_decode;
using testing::random_emissions;
using testing::random_model;

Procedure make_procedure(std::vector<std::string> steps, const std::string& raw_entity) {
  Procedure p;
  p.id = "p";
  p.steps = std::move(steps);
  p.entities.push_back(Entity::from_raw(raw_entity, raw_entity));
  return p;
}

TEST(Mentions, Examples) {
  const auto p = make_procedure(
      {"Water flows downwards thanks to gravity.", "Enters the dam at high pressure."},
      "water");
  EXPECT_EQ(detect_mentions(p, p.entities[0]), (MentionFlags{true, false}));

  const auto q = make_procedure({"the water boils", "steam rises"}, "H2O; water");
  EXPECT_EQ(detect_mentions(q, q.entities[0]), (MentionFlags{true, false}));
}

TEST(Mentions, TokenBoundaries) {
  const auto p = make_procedure(
      {"Saltwater evaporates.", "The carbon dioxide leaves.", "Carbon forms.", "dioxide"},
      "carbon dioxide");
  EXPECT_EQ(detect_mentions(p, p.entities[0]), (MentionFlags{false, true, false, false}));
  const auto w = make_procedure({"Saltwater evaporates."}, "water");
  EXPECT_EQ(detect_mentions(w, w.entities[0]), (MentionFlags{false}));
}

TEST(Mentions, InvariantToCaseAndPunctuation) {
  GeneratorConfig gen;
  gen.procedures = 20;
  const Corpus c = generate_corpus(gen);
  for (const auto& proc : c.procedures) {
    Procedure shouted = proc;
    for (auto& s : shouted.steps) {
      for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      std::string spaced;
      for (char ch : s) {
        if (ch == ' ') spaced += " , ";
        else spaced += ch;
      }
      s = "(" + spaced + ")!";
    }
    for (const auto& e : proc.entities) {
      EXPECT_EQ(detect_mentions(proc, e), detect_mentions(shouted, e));
    }
  }
}

TEST(Weighting, Examples) {
  const auto u = ScoreMatrix::from_rows({{2.0, -1.0}, {0.5, 3.0}});
  const auto w = weight_emissions(u, {true, false}, DecodeConfig{0.6, 0.7});
  EXPECT_DOUBLE_EQ(w(0, 0), 1.2);
  EXPECT_DOUBLE_EQ(w(0, 1), -0.6);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.35);
  EXPECT_DOUBLE_EQ(w(1, 1), 2.1);
  EXPECT_EQ(weight_emissions(u, {true, false}, DecodeConfig{1.0, 1.0}), u);
  EXPECT_THROW(weight_emissions(u, {true}, DecodeConfig{}), ValidationError);
  EXPECT_THROW(weight_emissions(u, {true, true}, DecodeConfig{0.0, 1.0}), ValidationError);
  EXPECT_THROW(weight_emissions(u, {true, true}, DecodeConfig{1.0, -1.0}), ValidationError);
}

TEST(Weighting, DefaultsMatchElementwiseRecomputation) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution flag(0.5);
  const DecodeConfig defaults;
  ASSERT_EQ(defaults.tau_exp, 0.6);
  ASSERT_EQ(defaults.tau_imp, 0.7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t steps = 1 + rng() % 10;
    const std::size_t n = 2 + rng() % 5;
    const auto u = random_emissions(steps, n, rng, -20.0, 20.0);
    MentionFlags flags(steps);
    for (std::size_t t = 0; t < steps; ++t) flags[t] = flag(rng);
    const auto w = weight_emissions(u, flags, defaults);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t s = 0; s < n; ++s) {
        EXPECT_NEAR(w(t, s), u(t, s) * (flags[t] ? 0.6 : 0.7), 1e-12);
      }
    }
  }
}

TEST(Viterbi, SingleStepIsArgmax) {
  const auto v = anonymous_vocabulary(3);
  const auto m = TransitionModel::from_scores(v, {-1.0, 0.0, kNegInf},
                                              std::vector<double>(9, 0.0));
  const auto r = viterbi(ScoreMatrix::from_rows({{2.5, 1.0, 9.0}}), m);
  EXPECT_EQ(r.states, (std::vector<StateIndex>{0}));
  EXPECT_EQ(r.score, 1.5);
}

TEST(Viterbi, TwoLabelsThreeStepsHandSet) {
  // start [ln .5, ln .5]; staying costs 0, switching -1
  const auto m = TransitionModel::from_scores(anonymous_vocabulary(2),
                                              {std::log(0.5), std::log(0.5)},
                                              {0.0, -1.0, -1.0, 0.0});
  const auto u = ScoreMatrix::from_rows({{0.8, 0.0}, {0.0, 0.5}, {0.0, 2.0}});
  const auto r = viterbi(u, m);
  const auto oracle = brute_force_decode(u, m);
  EXPECT_EQ(r.score, oracle.best);
  ASSERT_EQ(oracle.argmaxes.size(), 1u);
  EXPECT_EQ(r.states, oracle.argmaxes[0]);
  EXPECT_EQ(r.states, (std::vector<StateIndex>{1, 1, 1}));
}

TEST(Viterbi, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    const std::size_t steps = 1 + rng() % 6;
    const auto model = random_model(n, steps, 0.3, rng);
    const auto u = random_emissions(steps, n, rng);
    const auto r = viterbi(u, model);
    const auto oracle = brute_force_decode(u, model);
    ASSERT_EQ(r.score, oracle.best) << "trial " << trial;
    EXPECT_EQ(sequence_score(u, model, r.states), r.score);
    EXPECT_NE(std::find(oracle.argmaxes.begin(), oracle.argmaxes.end(), r.states),
              oracle.argmaxes.end());
  }
}

TEST(Viterbi, TiesGoToLowestIndex) {
  const auto m = TransitionModel::from_scores(anonymous_vocabulary(3), {0.0, 0.0, 0.0},
                                              std::vector<double>(9, 0.0));
  const auto r = viterbi(ScoreMatrix::from_rows({{1.0, 1.0, 0.0}, {0.0, 2.0, 2.0}}), m);
  EXPECT_EQ(r.states, (std::vector<StateIndex>{0, 1}));
}

TEST(Viterbi, JointScalingKeepsArgmax) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    const std::size_t steps = 1 + rng() % 8;
    const auto model = random_model(n, steps, 0.2, rng);
    const auto u = random_emissions(steps, n, rng);
    for (double c : {0.37, 2.5, 11.0}) {
      std::vector<double> start(model.start_scores().begin(), model.start_scores().end());
      std::vector<double> trans;
      for (StateIndex a = 0; a < n; ++a) {
        for (double x : model.transition_row(a)) trans.push_back(x * c);
      }
      for (auto& x : start) x *= c;
      ScoreMatrix scaled = u;
      for (std::size_t t = 0; t < steps; ++t) {
        for (double& x : scaled.row(t)) x *= c;
      }
      const auto scaled_model =
          TransitionModel::from_scores(model.vocabulary(), start, trans);
      EXPECT_EQ(viterbi(scaled, scaled_model).states, viterbi(u, model).states);
    }
  }
}

TEST(Viterbi, NoValidPath) {
  const auto& v = StateVocabulary::propara();
  const std::vector<std::vector<StateIndex>> seqs = {
      {v.require_index("create"), v.require_index("exist")}};
  const auto m = estimate_transitions(seqs, v);
  ScoreMatrix u(3, v.size());
  EXPECT_THROW(viterbi(u, m), NoValidPath);
  EXPECT_NO_THROW(viterbi(u, m.relaxed()));
  try {
    viterbi(u, m);
  } catch (const DecodeError& e) {
    SUCCEED();
  }
}

TEST(Viterbi, RejectsBadShapes) {
  const auto m = TransitionModel::from_scores(anonymous_vocabulary(2), {0.0, 0.0},
                                              {0.0, 0.0, 0.0, 0.0});
  EXPECT_THROW(viterbi(ScoreMatrix(0, 2), m), ValidationError);
  EXPECT_THROW(viterbi(ScoreMatrix(2, 3), m), ValidationError);
  auto u = ScoreMatrix(1, 2);
  u(0, 1) = std::nan("");
  EXPECT_THROW(viterbi(u, m), ValidationError);
}

class ProParaModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    GeneratorConfig gen;
    gen.procedures = 150;
    gen.seed = 21;
    corpus_ = new Corpus(generate_corpus(gen));
    model_ = new TransitionModel(estimate_transitions(*corpus_));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete corpus_;
  }
  static Corpus* corpus_;
  static TransitionModel* model_;
};

Corpus* ProParaModel::corpus_ = nullptr;
TransitionModel* ProParaModel::model_ = nullptr;

TEST_F(ProParaModel, NearOneHotRecoversGold) {
  for (const auto& proc : corpus_->procedures) {
    for (const auto& [eid, track] : corpus_->gold.at(proc.id).entries) {
      ScoreMatrix u(track.num_steps(), model_->size());
      for (std::size_t t = 0; t < track.num_steps(); ++t) {
        for (std::size_t s = 0; s < model_->size(); ++s) u(t, s) = -5.0;
        u(t, track.states[t]) = 5.0;
      }
      EntityEmissions em{u, std::vector<std::string>(track.num_steps() + 1, "unknown")};
      EXPECT_EQ(decode_entity(proc, eid, em, *model_, DecodeConfig{}).states, track.states);
    }
  }
}

TEST_F(ProParaModel, CorruptedStepIsRepaired) {
  const auto& v = model_->vocabulary();
  const StateIndex destroy = v.require_index("destroy");
  const StateIndex move = v.require_index("move");
  int checked = 0;
  for (const auto& proc : corpus_->procedures) {
    if (proc.num_steps() > 6) continue;
    for (const auto& [eid, track] : corpus_->gold.at(proc.id).entries) {
      const auto& s = track.states;
      auto it = std::find(s.begin(), s.end(), destroy);
      if (it == s.end() || it + 1 == s.end()) continue;
      const std::size_t t = static_cast<std::size_t>(it - s.begin()) + 1;
      ScoreMatrix u(s.size(), v.size());
      for (std::size_t k = 0; k < s.size(); ++k) u(k, s[k]) = 4.0;
      u(t, move) = 6.0;  // pulls the step after destroy toward move
      const auto r = viterbi(u, *model_);
      const auto oracle = brute_force_decode(u, *model_);
      EXPECT_EQ(r.score, oracle.best);
      for (std::size_t k = 1; k < r.states.size(); ++k) {
        EXPECT_TRUE(std::isfinite(model_->transition(r.states[k - 1], r.states[k])));
      }
      EXPECT_GT(r.score, brute_force_best_with_edge(u, *model_, destroy, move));
      EXPECT_NE(argmax_states(u), r.states);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST_F(ProParaModel, NeverMovesAfterDestroy) {
  const auto& v = model_->vocabulary();
  const StateIndex destroy = v.require_index("destroy");
  const StateIndex move = v.require_index("move");
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t steps = 1 + rng() % 10;
    const auto r = viterbi(random_emissions(steps, v.size(), rng, -8.0, 8.0), *model_);
    for (std::size_t k = 1; k < steps; ++k) {
      ASSERT_FALSE(r.states[k - 1] == destroy && r.states[k] == move);
    }
  }
}

TEST(TauFlip, WeightingChangesThePath) {
  const auto p = make_procedure({"Rain falls.", "The water pools."}, "water");
  const auto model = TransitionModel::from_scores(
      anonymous_vocabulary(2), {std::log(0.5), std::log(0.5)}, {0.0, kNegInf, kNegInf, 0.0});
  const EntityEmissions em{ScoreMatrix::from_rows({{1.0, 0.0}, {0.0, 1.1}}),
                           {"unknown", "unknown", "unknown"}};
  ASSERT_EQ(detect_mentions(p, p.entities[0]), (MentionFlags{false, true}));

  for (const DecodeConfig config : {DecodeConfig{0.6, 0.7}, DecodeConfig{1.0, 1.0}}) {
    const auto decoded = decode_entity(p, "water", em, model, config);
    const auto oracle =
        brute_force_decode(weight_emissions(em.state_logits, decoded.mentions, config), model);
    ASSERT_EQ(oracle.argmaxes.size(), 1u);
    EXPECT_EQ(decoded.states, oracle.argmaxes[0]);
    EXPECT_EQ(decoded.score, oracle.best);
  }
  EXPECT_EQ(decode_entity(p, "water", em, model, {0.6, 0.7}).states,
            (std::vector<StateIndex>{0, 0}));
  EXPECT_EQ(decode_entity(p, "water", em, model, {1.0, 1.0}).states,
            (std::vector<StateIndex>{1, 1}));
  const auto d = diagnose_weighting(em.state_logits, {false, true}, model, {0.6, 0.7});
  EXPECT_EQ(d.flipped_steps, 2u);
  EXPECT_EQ(d.negative_rows, 0u);
}

TEST(Emissions, FileRoundTrip) {
  GeneratorConfig gen;
  gen.procedures = 4;
  const Corpus c = generate_corpus(gen);
  OracleConfig oracle;
  oracle.state_noise = 0.2;
  const auto table = synth_emissions(c, oracle);
  const std::string text = serialize_emissions(table);
  const auto back = parse_emissions(text);
  EXPECT_EQ(serialize_emissions(back), text);
  EXPECT_NO_THROW(validate_emissions(back, c));
}

TEST(Emissions, ValidationCatchesShapeErrors) {
  GeneratorConfig gen;
  gen.procedures = 2;
  const Corpus c = generate_corpus(gen);
  auto table = synth_emissions(c, OracleConfig{});
  auto& entity = table.begin()->second.entities.begin()->second;
  entity.location_preds.pop_back();
  EXPECT_THROW(validate_emissions(table, c), ValidationError);
  EXPECT_THROW(parse_emissions(R"({"procedure_id":"p","entity_id":"e","state_logits":[[1,"x"]],"locations":["a","b"]})"),
               ValidationError);
}

}  // namespace
}  // namespace protrack
