// protrack/vocabulary.hpp

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

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protrack/errors.hpp"

namespace protrack {

// Position of a label inside a vocabulary. Logit rows, transition rows and
// columns are all laid out in this order.
using StateIndex = std::size_t;

// Closed set of entity state labels.
//
// The label order is fixed at construction and defines the column order of
// every emission matrix and transition table built over this vocabulary.
// The multi-choice presentation order used by question formatting may differ
// (see choice_order()).
//
// The consistency rules attach meaning to four label names when present:
// "create", "destroy", "move" and "exist". When the vocabulary has no "move"
// label (Recipes), location changes are carried by the location sequence
// alone and "exist" only asserts that the entity is somewhere.
class StateVocabulary {
 public:
  StateVocabulary(std::string name, std::vector<std::string> labels,
                  std::vector<std::string> nonexistent,
                  std::vector<std::string> choice_order = {})
      : name_(std::move(name)),
        labels_(std::move(labels)),
        choice_order_(std::move(choice_order)) {
    if (labels_.empty()) {
      throw ValidationError("vocabulary '" + name_ + "' has no labels");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) {
        throw ValidationError("vocabulary '" + name_ + "' has an empty label");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (labels_[i] == labels_[j]) {
          throw ValidationError("vocabulary '" + name_ +
                                "' repeats label '" + labels_[i] + "'");
        }
      }
    }
    nonexistent_.assign(labels_.size(), false);
    for (const auto& label : nonexistent) {
      nonexistent_[require_index(label)] = true;
    }
    if (choice_order_.empty()) {
      choice_order_ = labels_;
    } else {
      auto sorted_choices = choice_order_;
      auto sorted_labels = labels_;
      std::sort(sorted_choices.begin(), sorted_choices.end());
      std::sort(sorted_labels.begin(), sorted_labels.end());
      if (sorted_choices != sorted_labels) {
        throw ValidationError("vocabulary '" + name_ +
                              "': choice order must permute the labels");
      }
    }
    create_ = index_of("create");
    destroy_ = index_of("destroy");
    move_ = index_of("move");
    exist_ = index_of("exist");
    before_ = index_of("outside_before");
  }

  // create, exist, move, destroy, outside_before, outside_after.
  static const StateVocabulary& propara() {
    static const StateVocabulary vocab(
        "propara",
        {"create", "exist", "move", "destroy", "outside_before",
         "outside_after"},
        {"outside_before", "outside_after"},
        {"create", "exist", "destroy", "outside_before", "outside_after",
         "move"});
    return vocab;
  }

  // exist, absence.
  static const StateVocabulary& recipes() {
    static const StateVocabulary vocab("recipes", {"exist", "absence"},
                                       {"absence"});
    return vocab;
  }

  static const StateVocabulary& by_name(std::string_view name) {
    if (name == "propara") return propara();
    if (name == "recipes") return recipes();
    throw ValidationError("unknown vocabulary '" + std::string(name) +
                          "' (expected propara or recipes)");
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& choice_order() const { return choice_order_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& label(StateIndex i) const { return labels_.at(i); }

  std::optional<StateIndex> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    return std::nullopt;
  }

  StateIndex require_index(std::string_view label) const {
    if (auto i = index_of(label)) return *i;
    throw ValidationError("unknown state label '" + std::string(label) +
                          "' for vocabulary '" + name_ + "'");
  }

  bool is_nonexistent(StateIndex i) const { return nonexistent_.at(i); }

  std::vector<std::string> nonexistent_labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (nonexistent_[i]) out.push_back(labels_[i]);
    }
    return out;
  }

  bool is_create(StateIndex i) const { return create_ == i; }
  bool is_destroy(StateIndex i) const { return destroy_ == i; }
  bool is_move(StateIndex i) const { return move_ == i; }
  bool is_exist(StateIndex i) const { return exist_ == i; }
  bool is_outside_before(StateIndex i) const { return before_ == i; }

  // True when movement is expressed through a "move" state, which makes
  // "exist" a location-preserving state.
  bool tracks_moves() const { return move_.has_value(); }

  std::optional<StateIndex> create_index() const { return create_; }
  std::optional<StateIndex> destroy_index() const { return destroy_; }
  std::optional<StateIndex> move_index() const { return move_; }

  friend bool operator==(const StateVocabulary& a, const StateVocabulary& b) {
    return a.name_ == b.name_ && a.labels_ == b.labels_ &&
           a.nonexistent_ == b.nonexistent_;
  }

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::vector<bool> nonexistent_;
  std::vector<std::string> choice_order_;
  std::optional<StateIndex> create_, destroy_, move_, exist_, before_;
};

}  // namespace protrack
