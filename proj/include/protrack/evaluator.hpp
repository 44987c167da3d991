// protrack/evaluator.hpp

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

// Scoring of predicted grids against gold.
//
// Document level (per procedure, pooled over the split):
//   inputs       e with loc[0] != "-" and loc[T] == "-"
//   outputs      e with loc[0] == "-" and loc[T] != "-"
//   conversions  (t, destroyed, created, L): destroyed at t from L (slot
//                t-1) and created at t at L (slot t), L != "-"
//   moves        (e, t, loc[t-1], loc[t]) for every move at t
// Sentence level, over (procedure, entity, event) triples with event in
// {create, destroy, move}:
//   Cat-1  does the event occur at all (accuracy over every triple)
//   Cat-2  the set of event steps is exactly right (gold-positive triples)
//   Cat-3  the event is predicted and its locations at every gold event
//          step are right (gold-positive triples)
// Recipes: (entity, t, loc[t]) for every slot where the location changes.
//
// Tuples are compared exactly; locations by normalized text with "?" only
// matching "?". Precision over an empty prediction set and recall over an
// empty gold set are 1.

#pragma once

#include <array>
#include <optional>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "protrack/corpus.hpp"
#include "protrack/decoder.hpp"
#include "protrack/errors.hpp"
#include "protrack/io.hpp"

namespace protrack {

// Predicted grids keyed by procedure id.
using PredictionSet = std::map<std::string, AnnotationGrid>;

struct TupleScore {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  double precision() const {
    return predicted == 0 ? 1.0
                          : static_cast<double>(correct) /
                                static_cast<double>(predicted);
  }
  double recall() const {
    return gold == 0 ? 1.0
                     : static_cast<double>(correct) / static_cast<double>(gold);
  }
  double f1() const { return harmonic_mean(precision(), recall()); }

  static double harmonic_mean(double p, double r) {
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  TupleScore& operator+=(const TupleScore& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
};

inline constexpr std::array<const char*, 4> kDocQuestions = {
    "inputs", "outputs", "conversions", "moves"};

struct DocLevelBlock {
  std::array<TupleScore, 4> questions;  // kDocQuestions order

  double macro_precision() const {
    double sum = 0.0;
    for (const auto& q : questions) sum += q.precision();
    return sum / 4.0;
  }
  double macro_recall() const {
    double sum = 0.0;
    for (const auto& q : questions) sum += q.recall();
    return sum / 4.0;
  }
  double macro_f1() const {
    double sum = 0.0;
    for (const auto& q : questions) sum += q.f1();
    return sum / 4.0;
  }
};

struct Ratio {
  std::size_t correct = 0;
  std::size_t total = 0;

  double value() const {
    return total == 0 ? 1.0
                      : static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct SentenceLevelBlock {
  Ratio cat1, cat2, cat3;

  double macro() const { return (cat1.value() + cat2.value() + cat3.value()) / 3.0; }
  double micro() const {
    const std::size_t total = cat1.total + cat2.total + cat3.total;
    if (total == 0) return 1.0;
    return static_cast<double>(cat1.correct + cat2.correct + cat3.correct) /
           static_cast<double>(total);
  }
};

struct SplitAccuracy {
  Ratio explicit_steps;
  Ratio implicit_steps;
};

namespace detail {

inline const Track* find_track(const PredictionSet& preds, const std::string& pid,
                               const std::string& eid) {
  auto p = preds.find(pid);
  if (p == preds.end()) return nullptr;
  auto e = p->second.entries.find(eid);
  return e == p->second.entries.end() ? nullptr : &e->second;
}

inline std::string tuple_key(std::initializer_list<std::string> parts) {
  std::string key;
  for (const auto& part : parts) {
    key += part;
    key += '\x1f';
  }
  return key;
}

inline void score_sets(const std::set<std::string>& gold,
                       const std::set<std::string>& pred, TupleScore& out) {
  out.gold += gold.size();
  out.predicted += pred.size();
  for (const auto& g : gold) out.correct += pred.count(g);
}

// Fails when predictions cover procedures or entities the gold lacks, or
// when a predicted track has the wrong shape.
inline void check_coverage(const Corpus& gold, const PredictionSet& preds) {
  for (const auto& [pid, grid] : preds) {
    const AnnotationGrid* gold_grid = gold.find_gold(pid);
    const Procedure* proc = gold.find_procedure(pid);
    if (gold_grid == nullptr || proc == nullptr) {
      throw ValidationError("prediction for procedure '" + pid +
                            "' which has no gold grid");
    }
    for (const auto& [eid, track] : grid.entries) {
      if (gold_grid->entries.count(eid) == 0) {
        throw ValidationError("prediction for entity '" + eid +
                              "' of procedure '" + pid + "' which has no gold");
      }
      validate_track_shape(track, proc->num_steps(), gold.vocabulary,
                           "prediction (" + pid + ", " + eid + ")");
    }
  }
}

struct DocTuples {
  std::array<std::set<std::string>, 4> sets;
};

inline DocTuples doc_tuples(const std::string& pid,
                            const std::map<std::string, const Track*>& tracks,
                            const StateVocabulary& vocab) {
  DocTuples out;
  struct Event {
    std::string entity;
    std::string location;
  };
  std::map<std::size_t, std::vector<Event>> destroyed, created;
  for (const auto& [eid, track] : tracks) {
    if (track == nullptr) continue;
    const auto& loc = track->locations;
    const std::size_t steps = track->num_steps();
    if (!loc[0].is_nonexistent() && loc[steps].is_nonexistent()) {
      out.sets[0].insert(tuple_key({pid, eid}));
    }
    if (loc[0].is_nonexistent() && !loc[steps].is_nonexistent()) {
      out.sets[1].insert(tuple_key({pid, eid}));
    }
    for (std::size_t t = 1; t <= steps; ++t) {
      const StateIndex s = track->states[t - 1];
      if (vocab.is_destroy(s) && !loc[t - 1].is_nonexistent()) {
        destroyed[t].push_back({eid, loc[t - 1].key()});
      } else if (vocab.is_create(s) && !loc[t].is_nonexistent()) {
        created[t].push_back({eid, loc[t].key()});
      } else if (vocab.is_move(s)) {
        out.sets[3].insert(tuple_key({pid, eid, std::to_string(t),
                                      loc[t - 1].key(), loc[t].key()}));
      }
    }
  }
  for (const auto& [t, gone] : destroyed) {
    auto it = created.find(t);
    if (it == created.end()) continue;
    for (const auto& d : gone) {
      for (const auto& c : it->second) {
        if (d.location == c.location) {
          out.sets[2].insert(
              tuple_key({pid, std::to_string(t), d.entity, c.entity, d.location}));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

inline DocLevelBlock eval_document_level(const Corpus& gold,
                                         const PredictionSet& preds) {
  detail::check_coverage(gold, preds);
  DocLevelBlock block;
  for (const auto& proc : gold.procedures) {
    const AnnotationGrid* grid = gold.find_gold(proc.id);
    if (grid == nullptr) continue;
    std::map<std::string, const Track*> gold_tracks, pred_tracks;
    for (const auto& [eid, track] : grid->entries) {
      gold_tracks[eid] = &track;
      pred_tracks[eid] = detail::find_track(preds, proc.id, eid);
    }
    const auto g = detail::doc_tuples(proc.id, gold_tracks, gold.vocabulary);
    const auto p = detail::doc_tuples(proc.id, pred_tracks, gold.vocabulary);
    for (std::size_t q = 0; q < 4; ++q) {
      detail::score_sets(g.sets[q], p.sets[q], block.questions[q]);
    }
  }
  return block;
}

inline SentenceLevelBlock eval_sentence_level(const Corpus& gold,
                                              const PredictionSet& preds) {
  const auto& vocab = gold.vocabulary;
  if (!vocab.create_index() || !vocab.destroy_index() || !vocab.move_index()) {
    throw ValidationError("sentence-level evaluation needs create, destroy "
                          "and move states; vocabulary '" + vocab.name() +
                          "' lacks them");
  }
  detail::check_coverage(gold, preds);
  const std::array<StateIndex, 3> events = {
      *vocab.create_index(), *vocab.destroy_index(), *vocab.move_index()};

  auto event_steps = [](const Track* track, StateIndex event) {
    std::vector<std::size_t> steps;
    if (track == nullptr) return steps;
    for (std::size_t t = 1; t <= track->num_steps(); ++t) {
      if (track->states[t - 1] == event) steps.push_back(t);
    }
    return steps;
  };
  auto arguments = [&](const Track& track, StateIndex event, std::size_t t) {
    const auto& loc = track.locations;
    if (event == *vocab.create_index()) return loc[t].key();
    if (event == *vocab.destroy_index()) return loc[t - 1].key();
    return loc[t - 1].key() + '\x1f' + loc[t].key();
  };

  SentenceLevelBlock block;
  for (const auto& proc : gold.procedures) {
    const AnnotationGrid* grid = gold.find_gold(proc.id);
    if (grid == nullptr) continue;
    for (const auto& [eid, gold_track] : grid->entries) {
      const Track* pred_track = detail::find_track(preds, proc.id, eid);
      for (StateIndex event : events) {
        const auto g = event_steps(&gold_track, event);
        const auto p = event_steps(pred_track, event);
        ++block.cat1.total;
        if (g.empty() == p.empty()) ++block.cat1.correct;
        if (g.empty()) continue;
        ++block.cat2.total;
        ++block.cat3.total;
        if (g == p) ++block.cat2.correct;
        if (p.empty()) continue;
        bool locations_match = true;
        for (std::size_t t : g) {
          if (arguments(gold_track, event, t) != arguments(*pred_track, event, t)) {
            locations_match = false;
            break;
          }
        }
        if (locations_match) ++block.cat3.correct;
      }
    }
  }
  return block;
}

inline TupleScore eval_recipes_locations(const Corpus& gold,
                                         const PredictionSet& preds) {
  if (gold.vocabulary.tracks_moves()) {
    throw ValidationError("location-change evaluation expects the recipes "
                          "vocabulary, got '" + gold.vocabulary.name() + "'");
  }
  detail::check_coverage(gold, preds);
  auto changes = [](const std::string& pid, const std::string& eid,
                    const Track* track, std::set<std::string>& out) {
    if (track == nullptr) return;
    const auto& loc = track->locations;
    for (std::size_t t = 1; t < loc.size(); ++t) {
      if (!loc[t].same_place(loc[t - 1])) {
        out.insert(detail::tuple_key({pid, eid, std::to_string(t), loc[t].key()}));
      }
    }
  };
  TupleScore score;
  for (const auto& proc : gold.procedures) {
    const AnnotationGrid* grid = gold.find_gold(proc.id);
    if (grid == nullptr) continue;
    std::set<std::string> g, p;
    for (const auto& [eid, track] : grid->entries) {
      changes(proc.id, eid, &track, g);
      changes(proc.id, eid, detail::find_track(preds, proc.id, eid), p);
    }
    detail::score_sets(g, p, score);
  }
  return score;
}

// Per-(procedure, entity) state sequences and mention flags.
using StateTable = std::map<std::string, std::map<std::string, std::vector<StateIndex>>>;
using MentionTable = std::map<std::string, std::map<std::string, MentionFlags>>;

// Step-level state accuracy split by whether the entity is mentioned in the
// step. Missing predictions count as wrong.
inline SplitAccuracy eval_split(const Corpus& gold, const StateTable& pred_states,
                                const MentionTable& mentions) {
  SplitAccuracy out;
  for (const auto& proc : gold.procedures) {
    const AnnotationGrid* grid = gold.find_gold(proc.id);
    if (grid == nullptr) continue;
    for (const auto& [eid, track] : grid->entries) {
      const std::vector<StateIndex>* pred = nullptr;
      if (auto p = pred_states.find(proc.id); p != pred_states.end()) {
        if (auto e = p->second.find(eid); e != p->second.end()) pred = &e->second;
      }
      const MentionFlags* flags = nullptr;
      if (auto p = mentions.find(proc.id); p != mentions.end()) {
        if (auto e = p->second.find(eid); e != p->second.end()) flags = &e->second;
      }
      MentionFlags computed;
      if (flags == nullptr) {
        computed = detect_mentions(proc, proc.entity(eid));
        flags = &computed;
      }
      if (flags->size() != track.num_steps() ||
          (pred != nullptr && pred->size() != track.num_steps())) {
        throw ValidationError("split evaluation: length mismatch for (" +
                              proc.id + ", " + eid + ")");
      }
      for (std::size_t t = 0; t < track.num_steps(); ++t) {
        Ratio& bucket = (*flags)[t] ? out.explicit_steps : out.implicit_steps;
        ++bucket.total;
        if (pred != nullptr && (*pred)[t] == track.states[t]) ++bucket.correct;
      }
    }
  }
  return out;
}

struct EvalReport {
  std::string vocabulary;
  std::optional<DocLevelBlock> doc_level;
  std::optional<SentenceLevelBlock> sentence_level;
  std::optional<TupleScore> recipes_location;
  std::optional<SplitAccuracy> split_raw;  // per-step argmax before the CRF
  std::optional<SplitAccuracy> split_crf;  // after weighted Viterbi
  std::size_t tracks = 0;
  std::size_t inconsistent_tracks = 0;
  std::size_t repairs = 0;
};

// Scores every protocol that applies to the corpus vocabulary.
inline EvalReport evaluate(const Corpus& gold, const PredictionSet& preds) {
  EvalReport report;
  report.vocabulary = gold.vocabulary.name();
  if (gold.vocabulary.tracks_moves()) {
    report.doc_level = eval_document_level(gold, preds);
    if (gold.vocabulary.create_index() && gold.vocabulary.destroy_index()) {
      report.sentence_level = eval_sentence_level(gold, preds);
    }
  } else {
    report.recipes_location = eval_recipes_locations(gold, preds);
  }
  for (const auto& [pid, grid] : preds) {
    for (const auto& [eid, track] : grid.entries) {
      ++report.tracks;
      if (!check_consistency(track, gold.vocabulary).empty()) {
        ++report.inconsistent_tracks;
      }
    }
  }
  return report;
}

// Sub-corpus holding a single procedure, for per-procedure breakdowns.
inline Corpus single_procedure(const Corpus& corpus, const Procedure& proc) {
  Corpus out;
  out.vocabulary = corpus.vocabulary;
  out.procedures.push_back(proc);
  if (const AnnotationGrid* g = corpus.find_gold(proc.id)) {
    out.gold.emplace(proc.id, *g);
  }
  return out;
}

namespace detail {

inline OrderedJson tuple_json(const TupleScore& s) {
  OrderedJson j;
  j["gold"] = s.gold;
  j["predicted"] = s.predicted;
  j["correct"] = s.correct;
  j["precision"] = s.precision();
  j["recall"] = s.recall();
  j["f1"] = s.f1();
  return j;
}

inline OrderedJson ratio_json(const Ratio& r) {
  OrderedJson j;
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["score"] = r.value();
  return j;
}

inline OrderedJson split_json(const SplitAccuracy& s) {
  OrderedJson j;
  j["explicit"] = ratio_json(s.explicit_steps);
  j["implicit"] = ratio_json(s.implicit_steps);
  return j;
}

inline std::string fixed4(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", v);
  return buffer;
}

}  // namespace detail

inline OrderedJson report_to_json(const EvalReport& r) {
  OrderedJson j;
  j["vocabulary"] = r.vocabulary;
  if (r.doc_level) {
    OrderedJson doc;
    for (std::size_t q = 0; q < 4; ++q) {
      doc[kDocQuestions[q]] = detail::tuple_json(r.doc_level->questions[q]);
    }
    OrderedJson macro;
    macro["precision"] = r.doc_level->macro_precision();
    macro["recall"] = r.doc_level->macro_recall();
    macro["f1"] = r.doc_level->macro_f1();
    doc["macro"] = std::move(macro);
    j["document_level"] = std::move(doc);
  }
  if (r.sentence_level) {
    OrderedJson sent;
    sent["cat1"] = detail::ratio_json(r.sentence_level->cat1);
    sent["cat2"] = detail::ratio_json(r.sentence_level->cat2);
    sent["cat3"] = detail::ratio_json(r.sentence_level->cat3);
    sent["macro"] = r.sentence_level->macro();
    sent["micro"] = r.sentence_level->micro();
    j["sentence_level"] = std::move(sent);
  }
  if (r.recipes_location) {
    j["location_changes"] = detail::tuple_json(*r.recipes_location);
  }
  if (r.split_raw || r.split_crf) {
    OrderedJson split;
    if (r.split_raw) split["argmax"] = detail::split_json(*r.split_raw);
    if (r.split_crf) split["crf"] = detail::split_json(*r.split_crf);
    j["mention_split"] = std::move(split);
  }
  OrderedJson tracks;
  tracks["predicted"] = r.tracks;
  tracks["inconsistent"] = r.inconsistent_tracks;
  tracks["repairs"] = r.repairs;
  j["tracks"] = std::move(tracks);
  return j;
}

inline std::string format_report(const EvalReport& r) {
  using detail::fixed4;
  std::ostringstream out;
  if (r.doc_level) {
    out << "document-level\n";
    out << "question\tgold\tpred\tcorrect\tP\tR\tF1\n";
    for (std::size_t q = 0; q < 4; ++q) {
      const auto& s = r.doc_level->questions[q];
      out << kDocQuestions[q] << '\t' << s.gold << '\t' << s.predicted << '\t'
          << s.correct << '\t' << fixed4(s.precision()) << '\t'
          << fixed4(s.recall()) << '\t' << fixed4(s.f1()) << '\n';
    }
    out << "macro\t-\t-\t-\t" << fixed4(r.doc_level->macro_precision()) << '\t'
        << fixed4(r.doc_level->macro_recall()) << '\t'
        << fixed4(r.doc_level->macro_f1()) << '\n';
  }
  if (r.sentence_level) {
    const auto& s = *r.sentence_level;
    out << "sentence-level\n";
    out << "category\tcorrect\ttotal\tscore\n";
    out << "cat1\t" << s.cat1.correct << '\t' << s.cat1.total << '\t'
        << fixed4(s.cat1.value()) << '\n';
    out << "cat2\t" << s.cat2.correct << '\t' << s.cat2.total << '\t'
        << fixed4(s.cat2.value()) << '\n';
    out << "cat3\t" << s.cat3.correct << '\t' << s.cat3.total << '\t'
        << fixed4(s.cat3.value()) << '\n';
    out << "macro\t-\t-\t" << fixed4(s.macro()) << '\n';
    out << "micro\t-\t-\t" << fixed4(s.micro()) << '\n';
  }
  if (r.recipes_location) {
    const auto& s = *r.recipes_location;
    out << "location-changes\n";
    out << "gold\tpred\tcorrect\tP\tR\tF1\n";
    out << s.gold << '\t' << s.predicted << '\t' << s.correct << '\t'
        << fixed4(s.precision()) << '\t' << fixed4(s.recall()) << '\t'
        << fixed4(s.f1()) << '\n';
  }
  if (r.split_raw || r.split_crf) {
    out << "mention-split state accuracy\n";
    out << "decoder\texplicit\timplicit\n";
    if (r.split_raw) {
      out << "argmax\t" << fixed4(r.split_raw->explicit_steps.value()) << '\t'
          << fixed4(r.split_raw->implicit_steps.value()) << '\n';
    }
    if (r.split_crf) {
      out << "crf\t" << fixed4(r.split_crf->explicit_steps.value()) << '\t'
          << fixed4(r.split_crf->implicit_steps.value()) << '\n';
    }
  }
  out << "tracks\t" << r.tracks << "\tinconsistent\t" << r.inconsistent_tracks
      << "\trepairs\t" << r.repairs << '\n';
  return out.str();
}

// Prediction file: one JSON object per line,
//   {"procedure_id": ..., "entity_id": ..., "states": [...], "locations": [...]}
// with "-"/"?" location encodings. Optional "repairs" entries are ignored on
// read.
inline PredictionSet parse_predictions(std::string_view text,
                                       const StateVocabulary& vocab,
                                       const std::string& source = "<predictions>") {
  PredictionSet preds;
  for (const auto& record : parse_json_lines(text, source)) {
    RecordReader reader(record, source);
    const std::string pid = reader.string_field("procedure_id");
    const std::string eid = reader.string_field("entity_id");
    Track track = parse_track(reader, record.value, vocab,
                              "prediction (" + pid + ", " + eid + ")");
    auto& grid = preds[pid];
    grid.procedure_id = pid;
    if (!grid.entries.emplace(eid, std::move(track)).second) {
      reader.fail("duplicate prediction for (" + pid + ", " + eid + ")");
    }
  }
  return preds;
}

inline PredictionSet load_predictions(const std::string& path,
                                      const StateVocabulary& vocab) {
  return parse_predictions(read_text_file(path), vocab, path);
}

}  // namespace protrack
