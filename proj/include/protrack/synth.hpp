// protrack/synth.hpp

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

// Synthetic stand-ins for a trained model and for annotated data.
//
// The emission oracle is a noisy channel over gold: at each step the
// observed label is the gold label with probability 1 - e and a uniformly
// chosen other label otherwise. The observed label gets logit ln(1 - e), the
// rest ln(e / (|labels| - 1)); a step with e = 0 gets +10 / -10. Locations
// are the gold answer with probability 1 - d and "unknown" otherwise.
//
// All randomness comes from one mt19937_64 stream consumed in corpus order,
// with hand-rolled conversions so output bytes match across standard
// libraries.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "protrack/consistency.hpp"
#include "protrack/corpus.hpp"
#include "protrack/decoder.hpp"
#include "protrack/errors.hpp"

namespace protrack {

class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); n > 0.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  std::size_t between(std::size_t lo, std::size_t hi) {
    return lo + below(hi - lo + 1);
  }

  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

enum class NoiseBias { kExplicitStep, kImplicitStep, kOddStep, kEvenStep };

struct OracleConfig {
  double state_noise = 0.0;     // e
  double location_noise = 0.0;  // d
  std::map<NoiseBias, double> corruption_bias;  // extra state noise
  std::uint64_t seed = 0;

  double bias(NoiseBias b) const {
    auto it = corruption_bias.find(b);
    return it == corruption_bias.end() ? 0.0 : it->second;
  }

  // Effective state noise of one step (1-based).
  double state_rate(bool mentioned, std::size_t step) const {
    double rate = state_noise;
    rate += bias(mentioned ? NoiseBias::kExplicitStep : NoiseBias::kImplicitStep);
    rate += bias(step % 2 == 1 ? NoiseBias::kOddStep : NoiseBias::kEvenStep);
    return rate;
  }

  void validate() const {
    auto in_range = [](double v) { return v >= 0.0 && v < 1.0; };
    if (!in_range(state_noise) || !in_range(location_noise)) {
      throw ValidationError("oracle noise rates must lie in [0, 1)");
    }
    for (const auto& [key, extra] : corruption_bias) {
      if (!in_range(extra)) {
        throw ValidationError("oracle bias rates must lie in [0, 1)");
      }
    }
    for (bool mentioned : {false, true}) {
      for (std::size_t step : {1, 2}) {
        if (!in_range(state_rate(mentioned, step))) {
          throw ValidationError("combined oracle noise rate must lie in [0, 1)");
        }
      }
    }
  }
};

inline constexpr double kNoiselessMargin = 10.0;

inline EmissionTable synth_emissions(const Corpus& corpus,
                                     const OracleConfig& config) {
  config.validate();
  const std::size_t n = corpus.vocabulary.size();
  SynthRng rng(config.seed);
  EmissionTable table;
  for (const auto& proc : corpus.procedures) {
    const AnnotationGrid* grid = corpus.find_gold(proc.id);
    if (grid == nullptr) continue;
    EmissionSet& set = table[proc.id];
    set.procedure_id = proc.id;
    for (const auto& [eid, track] : grid->entries) {
      const auto flags = detect_mentions(proc, proc.entity(eid));
      EntityEmissions e;
      e.state_logits = ScoreMatrix(proc.num_steps(), n);
      for (std::size_t t = 0; t < proc.num_steps(); ++t) {
        const double rate = config.state_rate(flags[t], t + 1);
        StateIndex observed = track.states[t];
        if (n > 1 && rng.chance(rate)) {
          StateIndex other = rng.below(n - 1);
          if (other >= observed) ++other;
          observed = other;
        }
        const double hit = rate == 0.0 ? kNoiselessMargin : std::log(1.0 - rate);
        const double miss =
            rate == 0.0 ? -kNoiselessMargin
                        : std::log(rate / static_cast<double>(n > 1 ? n - 1 : 1));
        for (StateIndex s = 0; s < n; ++s) {
          e.state_logits(t, s) = s == observed ? hit : miss;
        }
      }
      for (const auto& loc : track.locations) {
        e.location_preds.push_back(rng.chance(config.location_noise)
                                       ? std::string("unknown")
                                       : loc.to_answer());
      }
      set.entities.emplace(eid, std::move(e));
    }
  }
  return table;
}

struct GeneratorConfig {
  std::size_t procedures = 50;
  std::size_t min_steps = 4;
  std::size_t max_steps = 9;
  std::size_t min_entities = 2;
  std::size_t max_entities = 5;
  std::string id_prefix = "synth";
  std::uint64_t seed = 0;
};

namespace detail {

inline const std::vector<std::string>& entity_pool() {
  static const std::vector<std::string> pool = {
      "water",  "oxygen", "sugar",  "seed",    "rock",   "magma",  "ice",
      "carbon", "energy", "pollen", "sediment", "steam", "plant",  "fossil",
      "nectar", "salt",   "acid",   "gas",     "soot",   "spore"};
  return pool;
}

inline const std::vector<std::string>& place_pool() {
  static const std::vector<std::string> pool = {
      "soil",   "river", "cloud", "ocean",  "leaf",   "root", "crust",
      "lake",   "air",   "cell",  "valley", "stream", "shell", "pond"};
  return pool;
}

}  // namespace detail

// ProPara-style procedures with consistent gold grids. Entities either exist
// from the start or are created mid-procedure (half of the time taking the
// place of an entity destroyed at that step), then stay, move or get
// destroyed. Destroyed entities never come back, so destroy is only ever
// followed by outside_after. Step texts mention entities that change at
// that step far more often than idle ones.
inline Corpus generate_corpus(const GeneratorConfig& config) {
  if (config.min_steps < 1 || config.min_steps > config.max_steps ||
      config.min_entities < 1 || config.min_entities > config.max_entities ||
      config.max_entities > detail::entity_pool().size()) {
    throw ValidationError("invalid generator configuration");
  }
  const StateVocabulary& vocab = StateVocabulary::propara();
  const StateIndex kCreate = vocab.require_index("create");
  const StateIndex kExist = vocab.require_index("exist");
  const StateIndex kMove = vocab.require_index("move");
  const StateIndex kDestroy = vocab.require_index("destroy");
  const StateIndex kBefore = vocab.require_index("outside_before");
  const StateIndex kAfter = vocab.require_index("outside_after");
  const auto& places = detail::place_pool();

  SynthRng rng(config.seed);
  Corpus corpus;
  corpus.vocabulary = vocab;
  for (std::size_t p = 0; p < config.procedures; ++p) {
    Procedure proc;
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%04zu", config.id_prefix.c_str(), p);
    proc.id = id;
    const std::size_t steps = rng.between(config.min_steps, config.max_steps);
    const std::size_t count = rng.between(config.min_entities, config.max_entities);

    std::vector<std::string> names = detail::entity_pool();
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(names[i], names[i + rng.below(names.size() - i)]);
    }
    names.resize(count);

    AnnotationGrid grid;
    grid.procedure_id = proc.id;
    struct Destruction {
      std::size_t step;
      LocationValue place;
    };
    std::vector<Destruction> destructions;
    std::vector<Track> tracks;
    for (const auto& name : names) {
      Track track;
      track.states.assign(steps, kExist);
      track.locations.assign(steps + 1, LocationValue::nonexistent());
      std::size_t t0 = 0;  // first step after which the entity exists
      LocationValue here;
      if (steps >= 2 && rng.chance(0.3)) {
        std::size_t create_step = rng.between(1, steps);
        here = LocationValue::span(places[rng.below(places.size())]);
        if (!destructions.empty() && rng.chance(0.5)) {
          const auto& d = destructions[rng.below(destructions.size())];
          create_step = d.step;
          here = d.place;
        }
        for (std::size_t t = 1; t < create_step; ++t) track.states[t - 1] = kBefore;
        track.states[create_step - 1] = kCreate;
        track.locations[create_step] = here;
        t0 = create_step;
      } else {
        here = rng.chance(0.1) ? LocationValue::unknown()
                               : LocationValue::span(places[rng.below(places.size())]);
        track.locations[0] = here;
      }
      bool alive = true;
      for (std::size_t t = t0 + 1; t <= steps; ++t) {
        if (!alive) {
          track.states[t - 1] = kAfter;
          continue;
        }
        const double u = rng.uniform();
        if (u < 0.12) {
          track.states[t - 1] = kDestroy;
          if (!here.is_nonexistent()) destructions.push_back({t, here});
          alive = false;
        } else if (u < 0.45) {
          LocationValue next;
          do {
            next = LocationValue::span(places[rng.below(places.size())]);
          } while (next.same_place(here));
          track.states[t - 1] = kMove;
          track.locations[t] = next;
          here = next;
        } else {
          track.states[t - 1] = kExist;
          track.locations[t] = here;
        }
      }
      if (!check_consistency(track, vocab).empty()) {
        throw std::logic_error("generator produced an inconsistent track");
      }
      grid.entries.emplace(name, track);
      tracks.push_back(std::move(track));
      proc.entities.push_back(Entity::from_raw(name, name));
    }

    static const std::vector<std::string> verbs = {
        "shifts", "gathers", "changes", "settles", "turns", "drifts"};
    for (std::size_t t = 1; t <= steps; ++t) {
      std::vector<std::string> mentioned;
      for (std::size_t i = 0; i < count; ++i) {
        const StateIndex s = tracks[i].states[t - 1];
        double p = 0.25;
        if (s == kCreate || s == kMove || s == kDestroy) p = 0.85;
        if (s == kBefore || s == kAfter) p = 0.05;
        if (rng.chance(p)) mentioned.push_back(names[i]);
      }
      std::string text;
      if (mentioned.empty()) {
        text = "Then the process " + verbs[rng.below(verbs.size())] + " slowly.";
      } else {
        text = "The";
        for (std::size_t k = 0; k < mentioned.size(); ++k) {
          if (k > 0) text += k + 1 == mentioned.size() ? " and the" : ", the";
          text += " " + mentioned[k];
        }
        std::string verb = verbs[rng.below(verbs.size())];
        if (mentioned.size() > 1) verb.pop_back();  // plural subject
        text += " " + verb + " near the " +
                places[rng.below(places.size())] + ".";
      }
      proc.steps.push_back(std::move(text));
    }
    corpus.gold.emplace(proc.id, std::move(grid));
    corpus.procedures.push_back(std::move(proc));
  }
  return corpus;
}

}  // namespace protrack
