// protrack/decoder.hpp

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

// Mention-guided weighted Viterbi decoding of per-step state logits.
//
// Each row of the T x |labels| logit matrix is scaled by tau_exp when the
// entity is mentioned in that step and by tau_imp otherwise, then the best
// label sequence under
//
//   start[y_1] + sum_t U'[t, y_t] + sum_{t>1} trans[y_{t-1}, y_t]
//
// is found by dynamic programming. Transitions never seen in training score
// -inf and can never be part of the answer.

#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protrack/corpus.hpp"
#include "protrack/errors.hpp"
#include "protrack/io.hpp"
#include "protrack/transitions.hpp"

namespace protrack {

// Dense row-major matrix of scores: one row per step, one column per label.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    ScoreMatrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw ValidationError("ragged score matrix");
      }
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Model outputs for one entity of one procedure.
struct EntityEmissions {
  ScoreMatrix state_logits;                 // T x |labels|
  std::vector<std::string> location_preds;  // T + 1 raw answers
};

struct EmissionSet {
  std::string procedure_id;
  std::map<std::string, EntityEmissions> entities;  // entity id -> outputs
};

using EmissionTable = std::map<std::string, EmissionSet>;  // by procedure id

// flag[t] is true when the entity is explicitly mentioned in step t+1.
using MentionFlags = std::vector<bool>;

struct DecodeConfig {
  double tau_exp = 0.6;
  double tau_imp = 0.7;

  void validate() const {
    if (!(tau_exp > 0.0) || !(tau_imp > 0.0) || !std::isfinite(tau_exp) ||
        !std::isfinite(tau_imp)) {
      throw ValidationError("tau_exp and tau_imp must be positive and finite");
    }
  }
};

// Lowercased maximal runs of ASCII letters/digits. Bytes >= 0x80 count as
// word characters so UTF-8 words stay whole.
inline std::vector<std::string> mention_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline bool contains_token_run(const std::vector<std::string>& haystack,
                               const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) {
      match = haystack[i + k] == needle[k];
    }
    if (match) return true;
  }
  return false;
}

// A step mentions the entity when any alias occurs in it as a contiguous run
// of tokens.
inline MentionFlags detect_mentions(const Procedure& proc, const Entity& entity) {
  std::vector<std::vector<std::string>> alias_tokens;
  for (const auto& alias : entity.aliases) {
    alias_tokens.push_back(mention_tokens(alias));
  }
  MentionFlags flags(proc.num_steps(), false);
  for (std::size_t t = 0; t < proc.num_steps(); ++t) {
    const auto step_tokens = mention_tokens(proc.steps[t]);
    for (const auto& needle : alias_tokens) {
      if (contains_token_run(step_tokens, needle)) {
        flags[t] = true;
        break;
      }
    }
  }
  return flags;
}

inline ScoreMatrix weight_emissions(const ScoreMatrix& logits,
                                    const MentionFlags& flags,
                                    const DecodeConfig& config) {
  config.validate();
  if (flags.size() != logits.rows()) {
    throw ValidationError("mention flags cover " + std::to_string(flags.size()) +
                          " steps but the logit matrix has " +
                          std::to_string(logits.rows()) + " rows");
  }
  ScoreMatrix out = logits;
  for (std::size_t t = 0; t < out.rows(); ++t) {
    const double tau = flags[t] ? config.tau_exp : config.tau_imp;
    for (double& v : out.row(t)) v *= tau;
  }
  return out;
}

struct ViterbiResult {
  std::vector<StateIndex> states;
  double score = kNegInf;
};

// Exact max-sum decoding. Accumulation order per step is
// (best_prev + trans) + emission. Ties go to the lowest label index, both
// for backpointers and for the final state.
inline ViterbiResult viterbi(const ScoreMatrix& emissions,
                             const TransitionModel& model) {
  const std::size_t steps = emissions.rows();
  const std::size_t n = model.size();
  if (steps == 0) throw ValidationError("cannot decode an empty sequence");
  if (emissions.cols() != n) {
    throw ValidationError("emission matrix has " +
                          std::to_string(emissions.cols()) +
                          " columns but the model has " + std::to_string(n) +
                          " labels");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (double v : emissions.row(t)) {
      if (!std::isfinite(v)) throw ValidationError("emission scores must be finite");
    }
  }

  std::vector<double> best(n);
  std::vector<double> next(n);
  std::vector<StateIndex> backpointer(steps * n, 0);
  for (StateIndex s = 0; s < n; ++s) best[s] = model.start(s) + emissions(0, s);

  for (std::size_t t = 1; t < steps; ++t) {
    for (StateIndex to = 0; to < n; ++to) {
      double top = kNegInf;
      StateIndex arg = 0;
      bool found = false;
      for (StateIndex from = 0; from < n; ++from) {
        const double cand = best[from] + model.transition(from, to);
        if (!found || cand > top) {
          top = cand;
          arg = from;
          found = true;
        }
      }
      // -inf + finite stays -inf; the emission never rescues a dead cell.
      next[to] = top + emissions(t, to);
      backpointer[t * n + to] = arg;
    }
    best.swap(next);
  }

  StateIndex last = 0;
  for (StateIndex s = 1; s < n; ++s) {
    if (best[s] > best[last]) last = s;
  }
  if (std::isinf(best[last])) {
    throw NoValidPath("no label sequence of length " + std::to_string(steps) +
                      " has a finite score under the transition model");
  }
  ViterbiResult result;
  result.score = best[last];
  result.states.assign(steps, 0);
  result.states[steps - 1] = last;
  for (std::size_t t = steps - 1; t > 0; --t) {
    result.states[t - 1] = backpointer[t * n + result.states[t]];
  }
  return result;
}

// Score of a given sequence, summed in the same order as viterbi().
inline double sequence_score(const ScoreMatrix& emissions,
                             const TransitionModel& model,
                             std::span<const StateIndex> states) {
  double score = model.start(states[0]) + emissions(0, states[0]);
  for (std::size_t t = 1; t < states.size(); ++t) {
    score = score + model.transition(states[t - 1], states[t]);
    score = score + emissions(t, states[t]);
  }
  return score;
}

// Per-row argmax without any transition structure (lowest index on ties).
inline std::vector<StateIndex> argmax_states(const ScoreMatrix& emissions) {
  std::vector<StateIndex> out(emissions.rows(), 0);
  for (std::size_t t = 0; t < emissions.rows(); ++t) {
    const auto row = emissions.row(t);
    for (StateIndex s = 1; s < row.size(); ++s) {
      if (row[s] > row[out[t]]) out[t] = s;
    }
  }
  return out;
}

struct DecodedEntity {
  std::vector<StateIndex> states;
  double score = kNegInf;
  MentionFlags mentions;
};

inline DecodedEntity decode_entity(const Procedure& proc,
                                   const std::string& entity_id,
                                   const EntityEmissions& emissions,
                                   const TransitionModel& model,
                                   const DecodeConfig& config) {
  const Entity& entity = proc.entity(entity_id);
  DecodedEntity out;
  out.mentions = detect_mentions(proc, entity);
  auto result = viterbi(weight_emissions(emissions.state_logits, out.mentions,
                                         config),
                        model);
  out.states = std::move(result.states);
  out.score = result.score;
  return out;
}

struct WeightingDiagnostics {
  std::size_t steps = 0;
  // Rows whose best raw logit is negative: scaling them by tau < 1 raises
  // their contribution instead of lowering it.
  std::size_t negative_rows = 0;
  // Steps whose decoded label differs from unweighted (tau = 1) decoding.
  std::size_t flipped_steps = 0;
};

inline WeightingDiagnostics diagnose_weighting(const ScoreMatrix& logits,
                                               const MentionFlags& flags,
                                               const TransitionModel& model,
                                               const DecodeConfig& config) {
  WeightingDiagnostics d;
  d.steps = logits.rows();
  const auto local = argmax_states(logits);
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    if (logits(t, local[t]) < 0.0) ++d.negative_rows;
  }
  const auto weighted = viterbi(weight_emissions(logits, flags, config), model);
  const auto plain = viterbi(logits, model);
  for (std::size_t t = 0; t < d.steps; ++t) {
    if (weighted.states[t] != plain.states[t]) ++d.flipped_steps;
  }
  return d;
}

// Emission file: one JSON object per line,
//   {"procedure_id": ..., "entity_id": ...,
//    "state_logits": [[...], ...],   // T rows, vocabulary label order
//    "locations": ["none", "dam", ...]}  // T+1 raw location answers
inline std::string emission_to_json_line(const std::string& procedure_id,
                                         const std::string& entity_id,
                                         const EntityEmissions& e) {
  OrderedJson j;
  j["procedure_id"] = procedure_id;
  j["entity_id"] = entity_id;
  OrderedJson rows = OrderedJson::array();
  for (std::size_t t = 0; t < e.state_logits.rows(); ++t) {
    const auto row = e.state_logits.row(t);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["state_logits"] = std::move(rows);
  j["locations"] = e.location_preds;
  return j.dump() + "\n";
}

inline std::string serialize_emissions(const EmissionTable& table) {
  std::string out;
  for (const auto& [pid, set] : table) {
    for (const auto& [eid, e] : set.entities) {
      out += emission_to_json_line(pid, eid, e);
    }
  }
  return out;
}

inline EmissionTable parse_emissions(std::string_view text,
                                     const std::string& source = "<emissions>") {
  EmissionTable table;
  for (const auto& record : parse_json_lines(text, source)) {
    RecordReader reader(record, source);
    const std::string pid = reader.string_field("procedure_id");
    const std::string eid = reader.string_field("entity_id");
    const Json& rows = reader.require("state_logits");
    if (!rows.is_array()) reader.fail("'state_logits' must be an array");
    std::vector<std::vector<double>> matrix;
    for (const auto& row : rows) {
      if (!row.is_array()) reader.fail("'state_logits' rows must be arrays");
      std::vector<double> values;
      for (const auto& v : row) {
        if (!v.is_number()) reader.fail("logits must be numbers");
        values.push_back(v.get<double>());
      }
      matrix.push_back(std::move(values));
    }
    EntityEmissions e;
    try {
      e.state_logits = ScoreMatrix::from_rows(matrix);
    } catch (const ValidationError& err) {
      reader.fail(err.what());
    }
    e.location_preds = reader.string_array(reader.require("locations"), "locations");
    auto& set = table[pid];
    set.procedure_id = pid;
    if (!set.entities.emplace(eid, std::move(e)).second) {
      reader.fail("duplicate emissions for (" + pid + ", " + eid + ")");
    }
  }
  return table;
}

inline EmissionTable load_emissions(const std::string& path) {
  return parse_emissions(read_text_file(path), path);
}

// Dimension and finiteness checks against the corpus. Emissions for
// procedures or entities not in the corpus are errors; missing ones are not.
inline void validate_emissions(const EmissionTable& table, const Corpus& corpus) {
  const std::size_t n = corpus.vocabulary.size();
  for (const auto& [pid, set] : table) {
    const Procedure* proc = corpus.find_procedure(pid);
    if (proc == nullptr) {
      throw ValidationError("emissions refer to unknown procedure '" + pid + "'");
    }
    for (const auto& [eid, e] : set.entities) {
      const std::string context = "emissions for (" + pid + ", " + eid + ")";
      if (proc->find_entity(eid) == nullptr) {
        throw ValidationError(context + ": unknown entity");
      }
      const std::size_t steps = proc->num_steps();
      if (e.state_logits.rows() != steps || e.state_logits.cols() != n) {
        throw ValidationError(context + ": logit matrix is " +
                              std::to_string(e.state_logits.rows()) + "x" +
                              std::to_string(e.state_logits.cols()) +
                              ", expected " + std::to_string(steps) + "x" +
                              std::to_string(n));
      }
      for (std::size_t t = 0; t < steps; ++t) {
        for (double v : e.state_logits.row(t)) {
          if (!std::isfinite(v)) {
            throw ValidationError(context + ": non-finite logit");
          }
        }
      }
      if (e.location_preds.size() != steps + 1) {
        throw ValidationError(context + ": expected " +
                              std::to_string(steps + 1) +
                              " location predictions, got " +
                              std::to_string(e.location_preds.size()));
      }
    }
  }
}

}  // namespace protrack
