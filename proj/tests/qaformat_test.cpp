// tests/qaformat_test.cpp

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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "protrack/qaformat.hpp"
#include "protrack/synth.hpp"

namespace protrack {
namespace {

const std::string kFixtures = PROTRACK_FIXTURE_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Hydropower : public ::testing::Test {
 protected:
  Corpus corpus = load_corpus(kFixtures + "/hydropower.jsonl", StateVocabulary::propara());
  const Procedure& proc() const { return corpus.procedures.at(0); }
  const AnnotationGrid* gold() const { return corpus.find_gold("hydropower"); }
};

TEST_F(Hydropower, StateInstanceMatchesFixture) {
  const auto inst = format_state_instance(proc(), "water", 2, corpus.vocabulary, gold());
  EXPECT_EQ(inst.input_text, slurp(kFixtures + "/qa/hydropower_water_state_step2.input"));
  EXPECT_EQ(inst.target_text, slurp(kFixtures + "/qa/hydropower_water_state_step2.target"));
  EXPECT_EQ(inst.input_text.rfind("What is the state of water in step 2?\n", 0), 0u);
}

TEST_F(Hydropower, LocationInstanceMatchesFixture) {
  const auto inst = format_location_instance(proc(), "water", 2, gold());
  EXPECT_EQ(inst.input_text,
            slurp(kFixtures + "/qa/hydropower_water_location_step2.input"));
  EXPECT_EQ(inst.target_text,
            slurp(kFixtures + "/qa/hydropower_water_location_step2.target"));
}

TEST_F(Hydropower, RangeAndEntityErrors) {
  EXPECT_THROW(format_state_instance(proc(), "water", 0, corpus.vocabulary), ValidationError);
  EXPECT_THROW(format_state_instance(proc(), "water", 7, corpus.vocabulary), ValidationError);
  EXPECT_THROW(format_location_instance(proc(), "water", 7), ValidationError);
  EXPECT_THROW(format_location_instance(proc(), "steam", 1), ValidationError);
  EXPECT_NO_THROW(format_location_instance(proc(), "water", 0));
}

TEST_F(Hydropower, SpecialLocationTargets) {
  // electricity is "-" before step 5, water is "?" at slot 0
  EXPECT_EQ(format_location_instance(proc(), "electricity", 0, gold()).target_text, "none");
  EXPECT_EQ(format_location_instance(proc(), "water", 0, gold()).target_text, "unknown");
  EXPECT_EQ(format_location_instance(proc(), "water", 0).target_text, "");
}

TEST_F(Hydropower, SurfaceUsesFirstAlias) {
  Procedure p = proc();
  p.entities.push_back(Entity::from_raw("h2o", "H2O; water vapor"));
  const auto inst = format_state_instance(p, "h2o", 1, corpus.vocabulary);
  EXPECT_EQ(inst.input_text.rfind("What is the state of H2O in step 1?", 0), 0u);
}

TEST(Choices, RecipesHasTwoOptions) {
  EXPECT_EQ(choices_line(StateVocabulary::recipes()), "(a) exist (b) absence");
  EXPECT_EQ(choices_line(StateVocabulary::propara()),
            "(a) create (b) exist (c) destroy (d) outside_before (e) outside_after (f) move");
}

TEST(Export, CountsForSingleEntity) {
  const std::string text =
      R"({"id":"p1","steps":["a","b","c","d","e","f"],"entities":[{"id":"w"}]})";
  const Corpus c = parse_corpus(text, StateVocabulary::propara());
  EXPECT_EQ(build_instances(c, {QAKind::kState}).size(), 6u);
  EXPECT_EQ(build_instances(c, {QAKind::kLocation}).size(), 7u);
  EXPECT_EQ(build_instances(c, {QAKind::kState, QAKind::kLocation}).size(), 13u);
}

TEST(Export, WrittenRecordsMatchIndependentCount) {
  GeneratorConfig gen;
  gen.procedures = 30;
  gen.seed = 5;
  const Corpus c = generate_corpus(gen);
  std::size_t expected = 0;
  for (const auto& p : c.procedures) expected += p.entities.size() * (2 * p.num_steps() + 1);

  const auto path =
      (std::filesystem::temp_directory_path() / "protrack_qa_export.jsonl").string();
  const std::size_t written =
      export_instances(c, {QAKind::kState, QAKind::kLocation}, path);
  EXPECT_EQ(written, expected);

  // Recount from the file bytes, one record per newline.
  const std::string bytes = slurp(path);
  EXPECT_EQ(static_cast<std::size_t>(std::count(bytes.begin(), bytes.end(), '\n')),
            expected);
  std::filesystem::remove(path);
}

TEST(Export, OrderingAndTargets) {
  GeneratorConfig gen;
  gen.procedures = 20;
  gen.seed = 9;
  const Corpus c = generate_corpus(gen);
  const auto instances = build_instances(c, {QAKind::kState, QAKind::kLocation});
  for (std::size_t i = 1; i < instances.size(); ++i) {
    const auto& a = instances[i - 1];
    const auto& b = instances[i];
    EXPECT_TRUE(std::tie(a.procedure_id, a.entity_id, a.step, a.kind) <
                std::tie(b.procedure_id, b.entity_id, b.step, b.kind));
  }
  const auto& labels = c.vocabulary.labels();
  for (const auto& inst : instances) {
    if (inst.kind != QAKind::kState) continue;
    EXPECT_GE(inst.step, 1u);
    EXPECT_NE(std::find(labels.begin(), labels.end(), inst.target_text), labels.end());
  }
}

TEST_F(Hydropower, LocationTargetsComeFromTheText) {
  std::string joined;
  for (const auto& s : proc().steps) joined += normalize_location_text(s) + " ";
  for (const auto& inst : build_instances(corpus, {QAKind::kLocation})) {
    if (inst.target_text == "none" || inst.target_text == "unknown") continue;
    EXPECT_NE(joined.find(normalize_location_text(inst.target_text)), std::string::npos)
        << inst.target_text;
  }
}

TEST(Export, IsPure) {
  GeneratorConfig gen;
  gen.procedures = 5;
  const Corpus c = generate_corpus(gen);
  std::string a, b;
  for (const auto& i : build_instances(c, {QAKind::kState})) a += instance_to_json_line(i);
  for (const auto& i : build_instances(c, {QAKind::kState})) b += instance_to_json_line(i);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace protrack
