// protrack/corpus.hpp

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

// Procedures, entities and annotation grids, plus the corpus file format.
//
// Corpus file: one JSON object per line.
//
//   {"id": "p1",
//    "steps": ["Water flows downwards.", "..."],
//    "entities": [{"id": "water; liquid", "raw_name": "water; liquid"}],
//    "gold": {"water; liquid": {"states": ["move", ...],        // T labels
//                               "locations": ["?", "dam", ...]}}} // T+1 slots
//
// "raw_name" defaults to "id"; aliases are the ";"-separated parts of it.
// "gold" is optional. Location slot 0 is the location before step 1, slot t
// the location after step t; "-" is nonexistent, "?" unknown.

#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protrack/errors.hpp"
#include "protrack/io.hpp"
#include "protrack/location.hpp"
#include "protrack/vocabulary.hpp"

namespace protrack {

struct Entity {
  std::string id;
  std::string raw_name;
  std::vector<std::string> aliases;

  // Splits `raw_name` on ';' and trims each part.
  static Entity from_raw(std::string id, std::string raw_name) {
    Entity e;
    e.id = std::move(id);
    e.raw_name = std::move(raw_name);
    std::size_t start = 0;
    while (start <= e.raw_name.size()) {
      std::size_t end = e.raw_name.find(';', start);
      if (end == std::string::npos) end = e.raw_name.size();
      std::string part = e.raw_name.substr(start, end - start);
      const auto first = part.find_first_not_of(" \t\r\n");
      const auto last = part.find_last_not_of(" \t\r\n");
      if (first == std::string::npos) {
        throw ValidationError("entity '" + e.id + "' has an empty alias");
      }
      e.aliases.push_back(part.substr(first, last - first + 1));
      start = end + 1;
    }
    return e;
  }

  const std::string& surface() const { return aliases.front(); }
};

struct Procedure {
  std::string id;
  std::vector<std::string> steps;
  std::vector<Entity> entities;

  std::size_t num_steps() const { return steps.size(); }

  const Entity* find_entity(std::string_view entity_id) const {
    for (const auto& e : entities) {
      if (e.id == entity_id) return &e;
    }
    return nullptr;
  }

  const Entity& entity(std::string_view entity_id) const {
    if (const Entity* e = find_entity(entity_id)) return *e;
    throw ValidationError("entity '" + std::string(entity_id) +
                          "' is not part of procedure '" + id + "'");
  }
};

// States for steps 1..T (stored 0-based) and locations for slots 0..T.
struct Track {
  std::vector<StateIndex> states;
  std::vector<LocationValue> locations;

  std::size_t num_steps() const { return states.size(); }
};

struct AnnotationGrid {
  std::string procedure_id;
  std::map<std::string, Track> entries;  // entity id -> track
};

struct Violation {
  std::size_t step = 0;  // 1-based step whose state the rule belongs to
  std::string rule;
  std::string message;
};

// Checks the state/location agreement rules on one track. Shape must already
// be valid (T states, T+1 locations, labels inside the vocabulary).
//
//   nonexistent  state_t in nonexistent set or destroy -> loc[t] = "-"
//   create       loc[t-1] = "-" and loc[t] != "-"
//   exist        loc[t] = loc[t-1]          (vocabularies with "move")
//                loc[t] != "-"              (otherwise)
//   move         loc[t] != "-" and loc[t] != loc[t-1] unless both are "?"
//   start        state_1 = outside_before -> loc[0] = "-"
inline std::vector<Violation> check_consistency(const Track& track,
                                                const StateVocabulary& vocab) {
  std::vector<Violation> out;
  const auto& loc = track.locations;
  auto add = [&](std::size_t step, const char* rule, std::string message) {
    out.push_back({step, rule, std::move(message)});
  };
  if (!track.states.empty() && vocab.is_outside_before(track.states[0]) &&
      !loc[0].is_nonexistent()) {
    add(1, "start", "outside_before at step 1 requires slot 0 to be '-'");
  }
  for (std::size_t t = 1; t <= track.states.size(); ++t) {
    const StateIndex s = track.states[t - 1];
    const std::string& label = vocab.label(s);
    if (vocab.is_nonexistent(s) || vocab.is_destroy(s)) {
      if (!loc[t].is_nonexistent()) {
        add(t, "nonexistent", label + " requires location '-' after the step");
      }
    } else if (vocab.is_create(s)) {
      if (!loc[t - 1].is_nonexistent()) {
        add(t, "create", "create requires location '-' before the step");
      }
      if (loc[t].is_nonexistent()) {
        add(t, "create", "create requires a location after the step");
      }
    } else if (vocab.is_exist(s)) {
      if (vocab.tracks_moves()) {
        if (!loc[t].same_place(loc[t - 1])) {
          add(t, "exist", "exist requires the location to stay unchanged");
        }
      } else if (loc[t].is_nonexistent()) {
        add(t, "exist", "exist requires a location");
      }
    } else if (vocab.is_move(s)) {
      if (loc[t].is_nonexistent()) {
        add(t, "move", "move requires a location after the step");
      } else if (loc[t].same_place(loc[t - 1]) && !loc[t].is_unknown()) {
        add(t, "move", "move requires the location to change");
      }
    }
  }
  return out;
}

inline std::string describe(const Violation& v) {
  return "step " + std::to_string(v.step) + " [" + v.rule + "] " + v.message;
}

// Length and label checks for a track against a T-step procedure.
inline void validate_track_shape(const Track& track, std::size_t num_steps,
                                 const StateVocabulary& vocab,
                                 const std::string& context) {
  if (track.states.size() != num_steps) {
    throw ValidationError(context + ": states has length " +
                          std::to_string(track.states.size()) + ", expected " +
                          std::to_string(num_steps));
  }
  if (track.locations.size() != num_steps + 1) {
    throw ValidationError(context + ": locations has length " +
                          std::to_string(track.locations.size()) +
                          ", expected " + std::to_string(num_steps + 1));
  }
  for (StateIndex s : track.states) {
    if (s >= vocab.size()) {
      throw ValidationError(context + ": state index out of vocabulary");
    }
  }
}

struct Corpus {
  StateVocabulary vocabulary = StateVocabulary::propara();
  std::vector<Procedure> procedures;
  std::map<std::string, AnnotationGrid> gold;  // procedure id -> grid

  const Procedure* find_procedure(std::string_view id) const {
    for (const auto& p : procedures) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }

  const AnnotationGrid* find_gold(const std::string& id) const {
    auto it = gold.find(id);
    return it == gold.end() ? nullptr : &it->second;
  }
};

inline Track parse_track(const RecordReader& reader, const Json& value,
                         const StateVocabulary& vocab,
                         const std::string& context) {
  if (!value.is_object()) reader.fail(context + ": track must be an object");
  auto states_it = value.find("states");
  auto locations_it = value.find("locations");
  if (states_it == value.end()) reader.fail(context + ": missing 'states'");
  if (locations_it == value.end()) {
    reader.fail(context + ": missing 'locations'");
  }
  Track track;
  for (const auto& label : reader.string_array(*states_it, "states")) {
    auto index = vocab.index_of(label);
    if (!index) {
      reader.fail(context + ": unknown state label '" + label +
                  "' for vocabulary '" + vocab.name() + "'");
    }
    track.states.push_back(*index);
  }
  for (const auto& loc : reader.string_array(*locations_it, "locations")) {
    track.locations.push_back(LocationValue::from_grid(loc));
  }
  return track;
}

inline OrderedJson track_to_json(const Track& track,
                                 const StateVocabulary& vocab) {
  OrderedJson j;
  OrderedJson states = OrderedJson::array();
  for (StateIndex s : track.states) states.push_back(vocab.label(s));
  OrderedJson locations = OrderedJson::array();
  for (const auto& loc : track.locations) locations.push_back(loc.to_grid());
  j["states"] = std::move(states);
  j["locations"] = std::move(locations);
  return j;
}

// Parses corpus text. Gold grids are validated for shape and consistency;
// any violation is an error naming the procedure, entity and rule.
inline Corpus parse_corpus(std::string_view text, const StateVocabulary& vocab,
                           const std::string& source = "<corpus>") {
  Corpus corpus;
  corpus.vocabulary = vocab;
  std::set<std::string> seen_ids;
  for (const auto& record : parse_json_lines(text, source)) {
    RecordReader reader(record, source);
    Procedure proc;
    proc.id = reader.string_field("id");
    if (!seen_ids.insert(proc.id).second) {
      reader.fail("duplicate procedure id '" + proc.id + "'");
    }
    proc.steps = reader.string_array(reader.require("steps"), "steps");
    if (proc.steps.empty()) {
      reader.fail("procedure '" + proc.id + "' has no steps");
    }
    for (const auto& step : proc.steps) {
      if (step.find_first_not_of(" \t\r\n") == std::string::npos) {
        reader.fail("procedure '" + proc.id + "' has an empty step");
      }
    }
    const Json& entities = reader.require("entities");
    if (!entities.is_array()) reader.fail("'entities' must be an array");
    std::set<std::string> entity_ids;
    for (const auto& item : entities) {
      if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
        reader.fail("procedure '" + proc.id +
                    "': every entity needs a string 'id'");
      }
      std::string id = item["id"].get<std::string>();
      std::string raw = id;
      if (item.contains("raw_name")) {
        if (!item["raw_name"].is_string()) {
          reader.fail("entity '" + id + "': 'raw_name' must be a string");
        }
        raw = item["raw_name"].get<std::string>();
      }
      if (!entity_ids.insert(id).second) {
        reader.fail("procedure '" + proc.id + "': duplicate entity id '" + id +
                    "'");
      }
      try {
        proc.entities.push_back(Entity::from_raw(std::move(id), std::move(raw)));
      } catch (const ValidationError& e) {
        reader.fail("procedure '" + proc.id + "': " + e.what());
      }
    }
    if (const Json* gold = reader.optional("gold")) {
      if (!gold->is_object()) reader.fail("'gold' must be an object");
      AnnotationGrid grid;
      grid.procedure_id = proc.id;
      for (const auto& [entity_id, value] : gold->items()) {
        const std::string context =
            "procedure '" + proc.id + "', entity '" + entity_id + "'";
        if (!proc.find_entity(entity_id)) {
          reader.fail(context + ": gold refers to an unknown entity");
        }
        Track track = parse_track(reader, value, vocab, context);
        try {
          validate_track_shape(track, proc.num_steps(), vocab, context);
        } catch (const ValidationError& e) {
          reader.fail(e.what());
        }
        auto violations = check_consistency(track, vocab);
        if (!violations.empty()) {
          reader.fail(context + ": inconsistent gold grid: " +
                      describe(violations.front()));
        }
        grid.entries.emplace(entity_id, std::move(track));
      }
      corpus.gold.emplace(proc.id, std::move(grid));
    }
    corpus.procedures.push_back(std::move(proc));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path,
                          const StateVocabulary& vocab) {
  return parse_corpus(read_text_file(path), vocab, path);
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& proc : corpus.procedures) {
    OrderedJson j;
    j["id"] = proc.id;
    j["steps"] = proc.steps;
    OrderedJson entities = OrderedJson::array();
    for (const auto& e : proc.entities) {
      OrderedJson item;
      item["id"] = e.id;
      item["raw_name"] = e.raw_name;
      entities.push_back(std::move(item));
    }
    j["entities"] = std::move(entities);
    if (const AnnotationGrid* grid = corpus.find_gold(proc.id)) {
      OrderedJson gold = OrderedJson::object();
      for (const auto& e : proc.entities) {
        auto it = grid->entries.find(e.id);
        if (it != grid->entries.end()) {
          gold[e.id] = track_to_json(it->second, corpus.vocabulary);
        }
      }
      j["gold"] = std::move(gold);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct SplitStats {
  std::size_t procedures = 0;
  double avg_steps = 0.0;
  double avg_entities = 0.0;
};

inline SplitStats split_stats(const Corpus& corpus) {
  SplitStats stats;
  stats.procedures = corpus.procedures.size();
  if (stats.procedures == 0) return stats;
  double steps = 0.0;
  double entities = 0.0;
  for (const auto& p : corpus.procedures) {
    steps += static_cast<double>(p.num_steps());
    entities += static_cast<double>(p.entities.size());
  }
  stats.avg_steps = steps / static_cast<double>(stats.procedures);
  stats.avg_entities = entities / static_cast<double>(stats.procedures);
  return stats;
}

// One decimal, as reported in dataset tables.
inline std::string format_one_decimal(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f", value);
  return buffer;
}

inline std::string format_stats_table(
    const std::vector<std::pair<std::string, SplitStats>>& rows) {
  std::ostringstream out;
  out << "split\tprocedures\tavg_steps\tavg_entities\n";
  for (const auto& [name, s] : rows) {
    out << name << '\t' << s.procedures << '\t' << format_one_decimal(s.avg_steps)
        << '\t' << format_one_decimal(s.avg_entities) << '\n';
  }
  return out.str();
}

}  // namespace protrack
