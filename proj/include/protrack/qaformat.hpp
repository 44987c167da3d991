// protrack/qaformat.hpp

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

// Question-answering instances for the state (multi-choice) and location
// (extractive) sub-tasks.
//
// State input, for entity e at step t:
//
//   What is the state of e in step t?\n
//   (a) create (b) exist ... (f) move\n
//   step 1: ... step 2: ... step T: ...
//
// Location input:
//
//   Where is e located in step t?\n
//   step 1: ... step T: ... Other locations: none, unknown.
//
// Instance file: one JSON object per line with fields procedure_id,
// entity_id, step, kind ("state" | "location"), input, target.

#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "protrack/corpus.hpp"
#include "protrack/io.hpp"

namespace protrack {

enum class QAKind { kLocation, kState };

inline const char* to_string(QAKind kind) {
  return kind == QAKind::kState ? "state" : "location";
}

inline QAKind parse_qa_kind(std::string_view name) {
  if (name == "state") return QAKind::kState;
  if (name == "location") return QAKind::kLocation;
  throw ValidationError("unknown instance kind '" + std::string(name) + "'");
}

struct QAInstance {
  std::string procedure_id;
  std::string entity_id;
  std::size_t step = 0;
  QAKind kind = QAKind::kState;
  std::string input_text;
  std::string target_text;  // empty when no gold is available
};

inline std::string indexed_procedure(const Procedure& proc) {
  std::string out;
  for (std::size_t i = 0; i < proc.steps.size(); ++i) {
    if (i > 0) out += ' ';
    out += "step " + std::to_string(i + 1) + ": " + proc.steps[i];
  }
  return out;
}

inline std::string choices_line(const StateVocabulary& vocab) {
  std::string out;
  const auto& choices = vocab.choice_order();
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (i > 0) out += ' ';
    out += '(';
    out += static_cast<char>('a' + i);
    out += ") ";
    out += choices[i];
  }
  return out;
}

namespace detail {

inline const Track* gold_track(const AnnotationGrid* gold,
                               const std::string& entity_id) {
  if (gold == nullptr) return nullptr;
  auto it = gold->entries.find(entity_id);
  return it == gold->entries.end() ? nullptr : &it->second;
}

}  // namespace detail

inline QAInstance format_state_instance(const Procedure& proc,
                                        const std::string& entity_id,
                                        std::size_t step,
                                        const StateVocabulary& vocab,
                                        const AnnotationGrid* gold = nullptr) {
  const Entity& entity = proc.entity(entity_id);
  if (step < 1 || step > proc.num_steps()) {
    throw ValidationError("state instance step " + std::to_string(step) +
                          " outside 1.." + std::to_string(proc.num_steps()) +
                          " for procedure '" + proc.id + "'");
  }
  if (vocab.size() > 26) {
    throw ValidationError("vocabulary too large for lettered choices");
  }
  QAInstance inst;
  inst.procedure_id = proc.id;
  inst.entity_id = entity.id;
  inst.step = step;
  inst.kind = QAKind::kState;
  inst.input_text = "What is the state of " + entity.surface() + " in step " +
                    std::to_string(step) + "?\n" + choices_line(vocab) + "\n" +
                    indexed_procedure(proc);
  if (const Track* track = detail::gold_track(gold, entity.id)) {
    inst.target_text = vocab.label(track->states.at(step - 1));
  }
  return inst;
}

inline QAInstance format_location_instance(
    const Procedure& proc, const std::string& entity_id, std::size_t step,
    const AnnotationGrid* gold = nullptr) {
  const Entity& entity = proc.entity(entity_id);
  if (step > proc.num_steps()) {
    throw ValidationError("location instance step " + std::to_string(step) +
                          " outside 0.." + std::to_string(proc.num_steps()) +
                          " for procedure '" + proc.id + "'");
  }
  QAInstance inst;
  inst.procedure_id = proc.id;
  inst.entity_id = entity.id;
  inst.step = step;
  inst.kind = QAKind::kLocation;
  inst.input_text = "Where is " + entity.surface() + " located in step " +
                    std::to_string(step) + "?\n" + indexed_procedure(proc) +
                    " Other locations: none, unknown.";
  if (const Track* track = detail::gold_track(gold, entity.id)) {
    inst.target_text = track->locations.at(step).to_answer();
  }
  return inst;
}

// All instances of the requested kinds, ordered by (procedure id, entity id,
// step, kind). State instances cover steps 1..T, location instances 0..T.
inline std::vector<QAInstance> build_instances(const Corpus& corpus,
                                               const std::vector<QAKind>& kinds) {
  const bool want_state =
      std::find(kinds.begin(), kinds.end(), QAKind::kState) != kinds.end();
  const bool want_location =
      std::find(kinds.begin(), kinds.end(), QAKind::kLocation) != kinds.end();
  std::vector<QAInstance> out;
  for (const auto& proc : corpus.procedures) {
    const AnnotationGrid* gold = corpus.find_gold(proc.id);
    for (const auto& entity : proc.entities) {
      for (std::size_t t = 0; t <= proc.num_steps(); ++t) {
        if (want_location) {
          out.push_back(format_location_instance(proc, entity.id, t, gold));
        }
        if (want_state && t >= 1) {
          out.push_back(
              format_state_instance(proc, entity.id, t, corpus.vocabulary, gold));
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const QAInstance& a, const QAInstance& b) {
                     return std::tie(a.procedure_id, a.entity_id, a.step,
                                     a.kind) <
                            std::tie(b.procedure_id, b.entity_id, b.step,
                                     b.kind);
                   });
  return out;
}

inline std::string instance_to_json_line(const QAInstance& inst) {
  OrderedJson j;
  j["procedure_id"] = inst.procedure_id;
  j["entity_id"] = inst.entity_id;
  j["step"] = inst.step;
  j["kind"] = to_string(inst.kind);
  j["input"] = inst.input_text;
  j["target"] = inst.target_text;
  return j.dump() + "\n";
}

inline std::size_t export_instances(const Corpus& corpus,
                                    const std::vector<QAKind>& kinds,
                                    const std::string& out_path) {
  const auto instances = build_instances(corpus, kinds);
  std::string text;
  for (const auto& inst : instances) text += instance_to_json_line(inst);
  write_text_file(out_path, text);
  return instances.size();
}

}  // namespace protrack
