// protrack/pipeline.hpp

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

// decode -> resolve -> evaluate over a whole corpus.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "protrack/consistency.hpp"
#include "protrack/corpus.hpp"
#include "protrack/decoder.hpp"
#include "protrack/evaluator.hpp"
#include "protrack/parallel.hpp"
#include "protrack/transitions.hpp"

namespace protrack {

struct PipelineOptions {
  DecodeConfig config;
  bool relax = false;  // decode with -inf replaced by kRelaxedScore
  bool use_crf = true; // false: per-step argmax instead of Viterbi
  unsigned jobs = 1;
};

// Everything produced for one (procedure, entity).
struct EntityResult {
  std::string procedure_id;
  std::string entity_id;
  std::vector<StateIndex> raw_states;  // per-step argmax of the raw logits
  DecodedEntity decoded;
  ResolvedTrack resolved;
};

struct PipelineResult {
  std::vector<EntityResult> entities;  // sorted by (procedure id, entity id)
  PredictionSet predictions;
  EvalReport report;
  std::vector<std::string> warnings;
};

namespace detail {

struct WorkItem {
  const Procedure* proc;
  const std::string* entity_id;
  const EntityEmissions* emissions;
};

inline std::vector<WorkItem> work_items(const Corpus& corpus,
                                        const EmissionTable& emissions) {
  std::vector<WorkItem> items;
  for (const auto& [pid, set] : emissions) {
    const Procedure* proc = corpus.find_procedure(pid);
    for (const auto& [eid, e] : set.entities) {
      items.push_back({proc, &eid, &e});
    }
  }
  return items;
}

inline void check_model(const Corpus& corpus, const TransitionModel& model) {
  if (!(model.vocabulary() == corpus.vocabulary)) {
    throw ValidationError("transition model vocabulary '" +
                          model.vocabulary().name() +
                          "' does not match corpus vocabulary '" +
                          corpus.vocabulary.name() + "'");
  }
}

template <typename Fn>
auto attributed(const std::string& pid, const std::string& eid, Fn&& fn) {
  const std::string where = "(" + pid + ", " + eid + "): ";
  try {
    return fn();
  } catch (const NoValidPath& e) {
    throw NoValidPath(where + e.what());
  } catch (const DecodeError& e) {
    throw DecodeError(where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  }
}

}  // namespace detail

// Decodes and resolves every entity that has emissions. Results are in
// (procedure id, entity id) order regardless of `jobs`.
inline std::vector<EntityResult> decode_and_resolve(const Corpus& corpus,
                                                    const EmissionTable& emissions,
                                                    const TransitionModel& model,
                                                    const PipelineOptions& options) {
  options.config.validate();
  detail::check_model(corpus, model);
  validate_emissions(emissions, corpus);
  const TransitionModel relaxed = options.relax ? model.relaxed() : model;
  const auto items = detail::work_items(corpus, emissions);
  std::vector<EntityResult> results(items.size());
  parallel_for(items.size(), options.jobs, [&](std::size_t i) {
    const auto& item = items[i];
    EntityResult& r = results[i];
    r.procedure_id = item.proc->id;
    r.entity_id = *item.entity_id;
    detail::attributed(r.procedure_id, r.entity_id, [&] {
      const auto& logits = item.emissions->state_logits;
      r.raw_states = argmax_states(logits);
      if (options.use_crf) {
        r.decoded = decode_entity(*item.proc, r.entity_id, *item.emissions,
                                  relaxed, options.config);
      } else {
        r.decoded.mentions =
            detect_mentions(*item.proc, item.proc->entity(r.entity_id));
        r.decoded.states = r.raw_states;
      }
      r.resolved = resolve(r.decoded.states, item.emissions->location_preds,
                           corpus.vocabulary);
      return 0;
    });
  });
  return results;
}

inline PipelineResult run_pipeline(const Corpus& corpus,
                                   const EmissionTable& emissions,
                                   const TransitionModel& model,
                                   const PipelineOptions& options) {
  PipelineResult out;
  out.entities = decode_and_resolve(corpus, emissions, model, options);
  StateTable raw_states, crf_states;
  MentionTable mentions;
  std::size_t repairs = 0;
  for (const auto& r : out.entities) {
    auto& grid = out.predictions[r.procedure_id];
    grid.procedure_id = r.procedure_id;
    grid.entries[r.entity_id] = r.resolved.track();
    raw_states[r.procedure_id][r.entity_id] = r.raw_states;
    crf_states[r.procedure_id][r.entity_id] = r.decoded.states;
    mentions[r.procedure_id][r.entity_id] = r.decoded.mentions;
    repairs += r.resolved.repairs.size();
    if (!r.resolved.feasible) {
      out.warnings.push_back("(" + r.procedure_id + ", " + r.entity_id +
                             "): decoded states admit no consistent locations");
    }
  }
  for (const auto& proc : corpus.procedures) {
    const AnnotationGrid* grid = corpus.find_gold(proc.id);
    if (grid == nullptr) continue;
    for (const auto& [eid, track] : grid->entries) {
      if (detail::find_track(out.predictions, proc.id, eid) == nullptr) {
        out.warnings.push_back("(" + proc.id + ", " + eid +
                               "): no emissions; scored as an empty track");
      }
    }
  }
  if (!corpus.gold.empty()) {
    // Gold entities without emissions are absent from `predictions` and
    // therefore scored as empty tracks.
    PredictionSet scored;
    for (const auto& [pid, grid] : out.predictions) {
      const AnnotationGrid* gold = corpus.find_gold(pid);
      if (gold == nullptr) continue;
      for (const auto& [eid, track] : grid.entries) {
        if (gold->entries.count(eid)) {
          scored[pid].procedure_id = pid;
          scored[pid].entries[eid] = track;
        }
      }
    }
    out.report = evaluate(corpus, scored);
    out.report.split_raw = eval_split(corpus, raw_states, mentions);
    out.report.split_crf = eval_split(corpus, crf_states, mentions);
  } else {
    out.report.vocabulary = corpus.vocabulary.name();
  }
  out.report.repairs = repairs;
  return out;
}

// Prediction file, with the repair audit attached to each record.
inline std::string serialize_predictions(const std::vector<EntityResult>& results,
                                         const StateVocabulary& vocab) {
  std::string out;
  for (const auto& r : results) {
    OrderedJson j;
    j["procedure_id"] = r.procedure_id;
    j["entity_id"] = r.entity_id;
    OrderedJson track = track_to_json(r.resolved.track(), vocab);
    j["states"] = std::move(track["states"]);
    j["locations"] = std::move(track["locations"]);
    OrderedJson repairs = OrderedJson::array();
    for (const auto& rep : r.resolved.repairs) {
      OrderedJson item;
      item["slot"] = rep.slot;
      item["original"] = rep.original;
      item["repaired"] = rep.repaired.to_grid();
      item["rule"] = rep.rule;
      repairs.push_back(std::move(item));
    }
    j["repairs"] = std::move(repairs);
    out += j.dump();
    out += '\n';
  }
  return out;
}

// Decoded-state file written by `decode` and read by `resolve`:
//   {"procedure_id", "entity_id", "states", "score", "mentions", "locations"}
// where "locations" are the raw location answers carried through.
inline std::string serialize_decoded(const std::vector<EntityResult>& results,
                                     const EmissionTable& emissions,
                                     const StateVocabulary& vocab) {
  std::string out;
  for (const auto& r : results) {
    OrderedJson j;
    j["procedure_id"] = r.procedure_id;
    j["entity_id"] = r.entity_id;
    OrderedJson states = OrderedJson::array();
    for (StateIndex s : r.decoded.states) states.push_back(vocab.label(s));
    j["states"] = std::move(states);
    j["score"] = r.decoded.score;
    OrderedJson flags = OrderedJson::array();
    for (bool f : r.decoded.mentions) flags.push_back(f);
    j["mentions"] = std::move(flags);
    j["locations"] = emissions.at(r.procedure_id).entities.at(r.entity_id).location_preds;
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct DecodedRecord {
  std::string procedure_id;
  std::string entity_id;
  std::vector<StateIndex> states;
  std::vector<std::string> location_preds;
};

inline std::vector<DecodedRecord> parse_decoded(std::string_view text,
                                                const StateVocabulary& vocab,
                                                const std::string& source) {
  std::vector<DecodedRecord> out;
  for (const auto& record : parse_json_lines(text, source)) {
    RecordReader reader(record, source);
    DecodedRecord d;
    d.procedure_id = reader.string_field("procedure_id");
    d.entity_id = reader.string_field("entity_id");
    for (const auto& label : reader.string_array(reader.require("states"), "states")) {
      auto index = vocab.index_of(label);
      if (!index) reader.fail("unknown state label '" + label + "'");
      d.states.push_back(*index);
    }
    d.location_preds = reader.string_array(reader.require("locations"), "locations");
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace protrack
