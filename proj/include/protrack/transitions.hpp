// protrack/transitions.hpp

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

// Start and transition log-scores estimated by counting gold state
// sequences. Scores are natural-log relative frequencies with no smoothing:
// anything never observed scores exactly -inf.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "protrack/corpus.hpp"
#include "protrack/io.hpp"
#include "protrack/vocabulary.hpp"

namespace protrack {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Score substituted for -inf when decoding with relaxation enabled.
inline constexpr double kRelaxedScore = -1e4;

class TransitionModel {
 public:
  explicit TransitionModel(StateVocabulary vocab)
      : vocab_(std::move(vocab)),
        start_(vocab_.size(), kNegInf),
        trans_(vocab_.size() * vocab_.size(), kNegInf),
        start_counts_(vocab_.size(), 0),
        trans_counts_(vocab_.size() * vocab_.size(), 0) {}

  // Builds a model from explicit scores (row-major transition matrix). Count
  // tables stay zero.
  static TransitionModel from_scores(StateVocabulary vocab,
                                     std::vector<double> start,
                                     std::vector<double> trans) {
    TransitionModel m(std::move(vocab));
    const std::size_t n = m.size();
    if (start.size() != n || trans.size() != n * n) {
      throw ValidationError("transition score dimensions do not match the "
                            "vocabulary size");
    }
    for (double v : start) check_score(v);
    for (double v : trans) check_score(v);
    m.start_ = std::move(start);
    m.trans_ = std::move(trans);
    return m;
  }

  const StateVocabulary& vocabulary() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }

  double start(StateIndex s) const { return start_.at(s); }
  double transition(StateIndex from, StateIndex to) const {
    return trans_.at(from * size() + to);
  }
  std::span<const double> start_scores() const { return start_; }
  std::span<const double> transition_row(StateIndex from) const {
    return std::span<const double>(trans_).subspan(from * size(), size());
  }

  std::uint64_t start_count(StateIndex s) const { return start_counts_.at(s); }
  std::uint64_t transition_count(StateIndex from, StateIndex to) const {
    return trans_counts_.at(from * size() + to);
  }
  std::uint64_t outgoing_count(StateIndex from) const {
    std::uint64_t total = 0;
    for (StateIndex to = 0; to < size(); ++to) total += transition_count(from, to);
    return total;
  }
  std::uint64_t num_sequences() const { return sequences_; }

  // Same model with every -inf score replaced by kRelaxedScore.
  TransitionModel relaxed() const {
    TransitionModel m = *this;
    for (double& v : m.start_) {
      if (std::isinf(v)) v = kRelaxedScore;
    }
    for (double& v : m.trans_) {
      if (std::isinf(v)) v = kRelaxedScore;
    }
    return m;
  }

  friend TransitionModel estimate_transitions(
      std::span<const std::vector<StateIndex>> sequences,
      const StateVocabulary& vocab);
  friend TransitionModel parse_model(std::string_view text,
                                     const std::string& source);

 private:
  static void check_score(double v) {
    if (std::isnan(v) || (std::isinf(v) && v > 0)) {
      throw ValidationError("transition scores must be finite or -inf");
    }
  }

  StateVocabulary vocab_;
  std::vector<double> start_;
  std::vector<double> trans_;
  std::vector<std::uint64_t> start_counts_;
  std::vector<std::uint64_t> trans_counts_;
  std::uint64_t sequences_ = 0;
};

// Counts step-1 states and consecutive state pairs, then takes
// ln(count / total) per row. The fold is order independent.
inline TransitionModel estimate_transitions(
    std::span<const std::vector<StateIndex>> sequences,
    const StateVocabulary& vocab) {
  TransitionModel m(vocab);
  const std::size_t n = vocab.size();
  for (const auto& seq : sequences) {
    if (seq.empty()) continue;
    for (StateIndex s : seq) {
      if (s >= n) {
        throw ValidationError("state sequence contains a label outside "
                              "vocabulary '" + vocab.name() + "'");
      }
    }
    ++m.sequences_;
    ++m.start_counts_[seq[0]];
    for (std::size_t t = 1; t < seq.size(); ++t) {
      ++m.trans_counts_[seq[t - 1] * n + seq[t]];
    }
  }
  if (m.sequences_ == 0) {
    throw ValidationError("cannot estimate transitions from no sequences");
  }
  for (StateIndex s = 0; s < n; ++s) {
    if (m.start_counts_[s] > 0) {
      m.start_[s] = std::log(static_cast<double>(m.start_counts_[s]) /
                             static_cast<double>(m.sequences_));
    }
  }
  for (StateIndex from = 0; from < n; ++from) {
    const std::uint64_t total = m.outgoing_count(from);
    if (total == 0) continue;
    for (StateIndex to = 0; to < n; ++to) {
      const std::uint64_t c = m.trans_counts_[from * n + to];
      if (c > 0) {
        m.trans_[from * n + to] =
            std::log(static_cast<double>(c) / static_cast<double>(total));
      }
    }
  }
  return m;
}

// Estimates from every gold track of the corpus.
inline TransitionModel estimate_transitions(const Corpus& corpus) {
  std::vector<std::vector<StateIndex>> sequences;
  for (const auto& proc : corpus.procedures) {
    const AnnotationGrid* grid = corpus.find_gold(proc.id);
    if (grid == nullptr) continue;
    for (const auto& [entity_id, track] : grid->entries) {
      sequences.push_back(track.states);
    }
  }
  return estimate_transitions(sequences, corpus.vocabulary);
}

// True iff some length-`num_steps` sequence has a finite start + transition
// score.
inline bool validate_path_exists(const TransitionModel& model,
                                 std::size_t num_steps) {
  if (num_steps == 0) return false;
  const std::size_t n = model.size();
  std::vector<bool> reachable(n);
  for (StateIndex s = 0; s < n; ++s) reachable[s] = std::isfinite(model.start(s));
  for (std::size_t t = 1; t < num_steps; ++t) {
    std::vector<bool> next(n, false);
    for (StateIndex from = 0; from < n; ++from) {
      if (!reachable[from]) continue;
      for (StateIndex to = 0; to < n; ++to) {
        if (std::isfinite(model.transition(from, to))) next[to] = true;
      }
    }
    reachable.swap(next);
  }
  for (bool r : reachable) {
    if (r) return true;
  }
  return false;
}

struct RareTransition {
  StateIndex from = 0;
  StateIndex to = 0;
  std::uint64_t count = 0;
};

// Observed transitions with 0 < count < min_count. Audit only; scores are
// never changed.
inline std::vector<RareTransition> rare_transitions(const TransitionModel& model,
                                                    std::uint64_t min_count) {
  std::vector<RareTransition> out;
  for (StateIndex from = 0; from < model.size(); ++from) {
    for (StateIndex to = 0; to < model.size(); ++to) {
      const auto c = model.transition_count(from, to);
      if (c > 0 && c < min_count) out.push_back({from, to, c});
    }
  }
  return out;
}

// Model file. Field order is fixed; scores are printed with 17 significant
// digits and -inf is the string "-inf".
inline std::string serialize_model(const TransitionModel& model) {
  const auto& vocab = model.vocabulary();
  const std::size_t n = model.size();
  auto quoted = [](const std::string& s) { return Json(s).dump(); };
  std::string out = "{\n";
  out += "  \"vocabulary\": " + quoted(vocab.name()) + ",\n";
  out += "  \"labels\": [";
  for (std::size_t i = 0; i < n; ++i) {
    out += (i ? ", " : "") + quoted(vocab.label(i));
  }
  out += "],\n  \"nonexistent\": [";
  const auto nonexistent = vocab.nonexistent_labels();
  for (std::size_t i = 0; i < nonexistent.size(); ++i) {
    out += (i ? ", " : "") + quoted(nonexistent[i]);
  }
  out += "],\n  \"sequences\": " + std::to_string(model.num_sequences()) + ",\n";
  out += "  \"start_scores\": [";
  for (std::size_t i = 0; i < n; ++i) {
    out += (i ? ", " : "") + format_score(model.start(i));
  }
  out += "],\n  \"transition_scores\": [\n";
  for (std::size_t from = 0; from < n; ++from) {
    out += "    [";
    for (std::size_t to = 0; to < n; ++to) {
      out += (to ? ", " : "") + format_score(model.transition(from, to));
    }
    out += from + 1 < n ? "],\n" : "]\n";
  }
  out += "  ],\n  \"start_counts\": [";
  for (std::size_t i = 0; i < n; ++i) {
    out += (i ? ", " : "") + std::to_string(model.start_count(i));
  }
  out += "],\n  \"transition_counts\": [\n";
  for (std::size_t from = 0; from < n; ++from) {
    out += "    [";
    for (std::size_t to = 0; to < n; ++to) {
      out += (to ? ", " : "") + std::to_string(model.transition_count(from, to));
    }
    out += from + 1 < n ? "],\n" : "]\n";
  }
  out += "  ]\n}\n";
  return out;
}

namespace detail {

inline double parse_score(const Json& v, const std::string& source) {
  if (v.is_string() && v.get<std::string>() == "-inf") return kNegInf;
  if (!v.is_number()) {
    throw ValidationError(source + ": scores must be numbers or \"-inf\"");
  }
  return v.get<double>();
}

}  // namespace detail

inline TransitionModel parse_model(std::string_view text,
                                   const std::string& source = "<model>") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(source + ": JSON parse error: " + e.what());
  }
  auto field = [&](const char* name) -> const Json& {
    if (!j.is_object() || !j.contains(name)) {
      throw ValidationError(source + ": missing field '" + name + "'");
    }
    return j[name];
  };
  try {
    const auto name = field("vocabulary").get<std::string>();
    const auto labels = field("labels").get<std::vector<std::string>>();
    const auto nonexistent = field("nonexistent").get<std::vector<std::string>>();
    StateVocabulary vocab(name, labels, nonexistent);
    if (name == "propara" || name == "recipes") {
      const auto& builtin = StateVocabulary::by_name(name);
      if (!(builtin == vocab)) {
        throw ValidationError(source + ": labels do not match built-in "
                              "vocabulary '" + name + "'");
      }
      vocab = builtin;
    }
    const std::size_t n = vocab.size();
    TransitionModel m(vocab);
    const Json& start = field("start_scores");
    const Json& trans = field("transition_scores");
    const Json& start_counts = field("start_counts");
    const Json& trans_counts = field("transition_counts");
    if (start.size() != n || trans.size() != n || start_counts.size() != n ||
        trans_counts.size() != n) {
      throw ValidationError(source + ": table dimensions do not match labels");
    }
    for (std::size_t i = 0; i < n; ++i) {
      m.start_[i] = detail::parse_score(start[i], source);
      m.start_counts_[i] = start_counts[i].get<std::uint64_t>();
      if (trans[i].size() != n || trans_counts[i].size() != n) {
        throw ValidationError(source + ": transition row " + std::to_string(i) +
                              " has the wrong length");
      }
      for (std::size_t k = 0; k < n; ++k) {
        m.trans_[i * n + k] = detail::parse_score(trans[i][k], source);
        m.trans_counts_[i * n + k] = trans_counts[i][k].get<std::uint64_t>();
      }
    }
    for (double v : m.start_) TransitionModel::check_score(v);
    for (double v : m.trans_) TransitionModel::check_score(v);
    m.sequences_ = field("sequences").get<std::uint64_t>();
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(source + ": malformed model file: " + e.what());
  }
}

inline TransitionModel load_model(const std::string& path) {
  return parse_model(read_text_file(path), path);
}

inline void save_model(const TransitionModel& model, const std::string& path) {
  write_text_file(path, serialize_model(model));
}

}  // namespace protrack
