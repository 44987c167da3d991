// protrack/consistency.hpp

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

// Merges a decoded state sequence with per-slot location answers into a
// grid that satisfies check_consistency(). States always win; locations are
// overwritten and every overwrite is recorded.
//
//   R1  slot 0 is "-" if state_1 is outside_before or create, else the
//       parsed answer for slot 0
//   R2  create at t: slot t-1 is "-"; slot t is the answer, "?" if the
//       answer is "none"
//   R3  destroy or a nonexistent state at t: slot t is "-"
//   R4  exist at t: slot t takes the place of slot t-1, keeping the answer's
//       own spelling if it names the same place (vocabularies without "move":
//       slot t is the answer, "?" if the answer is "none")
//   R5  move at t: slot t is the answer, "?" if it is "none" or equals
//       slot t-1
//
// Because R4 chains slots together, a "-" forced by R2 on slot t-1 also
// applies to every slot tied to it by a run of exist states. A run that is
// forced to "-" and also required to exist has no consistent assignment;
// such state sequences are reported as infeasible and resolved with "-".

#pragma once

#include <span>
#include <string>
#include <vector>

#include "protrack/corpus.hpp"
#include "protrack/errors.hpp"
#include "protrack/location.hpp"
#include "protrack/vocabulary.hpp"

namespace protrack {

struct Repair {
  std::size_t slot = 0;
  std::string original;  // raw answer for the slot
  LocationValue repaired;
  std::string rule;  // "R1" .. "R5"
};

struct ResolvedTrack {
  std::vector<StateIndex> states;
  std::vector<LocationValue> locations;
  std::vector<Repair> repairs;
  bool feasible = true;

  Track track() const { return Track{states, locations}; }
};

namespace detail {

// Slot ranges tied together by location-preserving exist states.
struct SlotRun {
  std::size_t head = 0;
  std::size_t last = 0;
  bool must_be_absent = false;
  bool must_exist = false;
  const char* absent_rule = nullptr;
};

inline std::vector<SlotRun> slot_runs(std::span<const StateIndex> states,
                                      const StateVocabulary& vocab) {
  std::vector<SlotRun> runs;
  runs.push_back({0, 0});
  for (std::size_t t = 1; t <= states.size(); ++t) {
    const StateIndex s = states[t - 1];
    if (vocab.tracks_moves() && vocab.is_exist(s)) {
      runs.back().last = t;
    } else {
      runs.push_back({t, t});
    }
  }
  auto run_of = [&](std::size_t slot) -> SlotRun& {
    for (auto& r : runs) {
      if (slot >= r.head && slot <= r.last) return r;
    }
    return runs.back();
  };
  auto force_absent = [](SlotRun& r, const char* rule) {
    if (!r.must_be_absent) r.absent_rule = rule;
    r.must_be_absent = true;
  };
  if (!states.empty() &&
      (vocab.is_outside_before(states[0]) || vocab.is_create(states[0]))) {
    force_absent(runs.front(), "R1");
  }
  for (std::size_t t = 1; t <= states.size(); ++t) {
    const StateIndex s = states[t - 1];
    if (vocab.is_create(s)) {
      force_absent(run_of(t - 1), "R2");
      run_of(t).must_exist = true;
    } else if (vocab.is_destroy(s) || vocab.is_nonexistent(s)) {
      force_absent(run_of(t), "R3");
    } else if (vocab.is_move(s)) {
      run_of(t).must_exist = true;
    } else if (vocab.is_exist(s) && !vocab.tracks_moves()) {
      run_of(t).must_exist = true;
    }
  }
  return runs;
}

}  // namespace detail

// True iff some location assignment makes the state sequence consistent.
inline bool state_sequence_feasible(std::span<const StateIndex> states,
                                    const StateVocabulary& vocab) {
  for (StateIndex s : states) {
    if (s >= vocab.size()) throw ValidationError("state index out of vocabulary");
  }
  for (const auto& run : detail::slot_runs(states, vocab)) {
    if (run.must_be_absent && run.must_exist) return false;
  }
  return true;
}

inline ResolvedTrack resolve(std::span<const StateIndex> states,
                             std::span<const std::string> location_preds,
                             const StateVocabulary& vocab) {
  const std::size_t steps = states.size();
  if (location_preds.size() != steps + 1) {
    throw ValidationError("resolve: " + std::to_string(steps) +
                          " states need " + std::to_string(steps + 1) +
                          " location predictions, got " +
                          std::to_string(location_preds.size()));
  }
  for (StateIndex s : states) {
    if (s >= vocab.size()) {
      throw ValidationError("resolve: state index out of vocabulary '" +
                            vocab.name() + "'");
    }
  }

  ResolvedTrack out;
  out.states.assign(states.begin(), states.end());
  out.locations.resize(steps + 1);
  std::vector<LocationValue> parsed;
  parsed.reserve(steps + 1);
  for (const auto& p : location_preds) {
    parsed.push_back(LocationValue::from_prediction(p));
  }
  auto existing = [](const LocationValue& v) {
    return v.is_nonexistent() ? LocationValue::unknown() : v;
  };

  for (const auto& run : detail::slot_runs(states, vocab)) {
    const std::size_t h = run.head;
    LocationValue value;
    const char* rule = "R1";
    if (run.must_be_absent) {
      if (run.must_exist) out.feasible = false;
      value = LocationValue::nonexistent();
      rule = run.absent_rule;
    } else if (h == 0) {
      value = parsed[0];
    } else {
      const StateIndex s = states[h - 1];
      if (vocab.is_create(s)) {
        value = existing(parsed[h]);
        rule = "R2";
      } else if (vocab.is_move(s)) {
        value = parsed[h];
        if (value.is_nonexistent() || value.same_place(out.locations[h - 1])) {
          value = LocationValue::unknown();
        }
        rule = "R5";
      } else if (vocab.is_exist(s)) {
        value = existing(parsed[h]);
        rule = "R4";
      } else {
        value = parsed[h];
        rule = "R3";
      }
    }
    for (std::size_t slot = h; slot <= run.last; ++slot) {
      // An exist slot naming the same place keeps its own surface form.
      const bool keep = slot > h && parsed[slot].same_place(value);
      out.locations[slot] = keep ? parsed[slot] : value;
      if (!keep && !(value == parsed[slot])) {
        const char* slot_rule = (slot == h || run.must_be_absent) ? rule : "R4";
        out.repairs.push_back({slot, location_preds[slot], value, slot_rule});
      }
    }
  }
  return out;
}

}  // namespace protrack
