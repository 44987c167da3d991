// protrack/tuner.hpp

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

// Exhaustive grid search over (tau_exp, tau_imp).

#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "protrack/evaluator.hpp"
#include "protrack/parallel.hpp"
#include "protrack/pipeline.hpp"

namespace protrack {

struct GridSpec {
  std::vector<double> tau_exp_values;
  std::vector<double> tau_imp_values;

  std::size_t cells() const { return tau_exp_values.size() * tau_imp_values.size(); }
};

// lo, lo + step, ..., up to hi inclusive. Values are snapped to 9 decimals so
// that e.g. the seventh value of 0.1:1.5:0.1 is exactly the double 0.7.
inline std::vector<double> grid_axis(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo > 0.0) || hi < lo || !std::isfinite(hi)) {
    throw ValidationError("grid axis needs 0 < lo <= hi and step > 0");
  }
  std::vector<double> values;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    values.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return values;
}

// Both taus over 0.1, 0.2, ..., 1.5 (225 cells).
inline GridSpec default_grid() {
  const auto axis = grid_axis(0.1, 1.5, 0.1);
  return GridSpec{axis, axis};
}

// "lo:hi:step" for both axes, or "lo:hi:step,lo:hi:step" for tau_exp and
// tau_imp separately.
inline GridSpec parse_grid(const std::string& text) {
  auto parse_axis = [](const std::string& part) {
    double lo = 0, hi = 0, step = 0;
    char tail = 0;
    if (std::sscanf(part.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) != 3) {
      throw ValidationError("grid axis '" + part + "' is not lo:hi:step");
    }
    return grid_axis(lo, hi, step);
  };
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    const auto axis = parse_axis(text);
    return GridSpec{axis, axis};
  }
  return GridSpec{parse_axis(text.substr(0, comma)), parse_axis(text.substr(comma + 1))};
}

struct GridCell {
  double tau_exp = 0.0;
  double tau_imp = 0.0;
  double objective = 0.0;
};

struct TuneResult {
  DecodeConfig best;
  double objective = 0.0;
  std::vector<GridCell> table;  // tau_exp-major, ascending
};

// Document-level macro F1 for move-tracking vocabularies, location-change F1
// otherwise.
inline double tuning_objective(const EvalReport& report) {
  if (report.doc_level) return report.doc_level->macro_f1();
  if (report.recipes_location) return report.recipes_location->f1();
  return 0.0;
}

// Evaluates decode + resolve + evaluate for every cell and returns the
// maximizer; ties go to the smaller tau_exp, then the smaller tau_imp.
inline TuneResult tune(const Corpus& dev, const EmissionTable& emissions,
                       const TransitionModel& model, const GridSpec& grid,
                       unsigned jobs = 1, bool relax = false) {
  if (grid.cells() == 0) throw ValidationError("tuning grid is empty");
  if (dev.gold.empty()) throw ValidationError("tuning needs a gold dev corpus");
  TuneResult result;
  result.table.resize(grid.cells());
  for (std::size_t i = 0; i < grid.tau_exp_values.size(); ++i) {
    for (std::size_t k = 0; k < grid.tau_imp_values.size(); ++k) {
      auto& cell = result.table[i * grid.tau_imp_values.size() + k];
      cell.tau_exp = grid.tau_exp_values[i];
      cell.tau_imp = grid.tau_imp_values[k];
    }
  }
  parallel_for(result.table.size(), jobs, [&](std::size_t i) {
    auto& cell = result.table[i];
    PipelineOptions options;
    options.config = DecodeConfig{cell.tau_exp, cell.tau_imp};
    options.relax = relax;
    try {
      cell.objective =
          tuning_objective(run_pipeline(dev, emissions, model, options).report);
    } catch (const Error& e) {
      char where[96];
      std::snprintf(where, sizeof(where), "grid cell (tau_exp=%g, tau_imp=%g): ",
                    cell.tau_exp, cell.tau_imp);
      if (dynamic_cast<const DecodeError*>(&e)) throw DecodeError(where + std::string(e.what()));
      throw ValidationError(where + std::string(e.what()));
    }
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    const auto& a = result.table[i];
    const auto& b = result.table[best];
    if (a.objective > b.objective ||
        (a.objective == b.objective &&
         (a.tau_exp < b.tau_exp || (a.tau_exp == b.tau_exp && a.tau_imp < b.tau_imp)))) {
      best = i;
    }
  }
  result.best = DecodeConfig{result.table[best].tau_exp, result.table[best].tau_imp};
  result.objective = result.table[best].objective;
  return result;
}

inline OrderedJson tune_result_to_json(const TuneResult& r) {
  OrderedJson j;
  j["tau_exp"] = r.best.tau_exp;
  j["tau_imp"] = r.best.tau_imp;
  j["objective"] = r.objective;
  OrderedJson table = OrderedJson::array();
  for (const auto& c : r.table) {
    OrderedJson cell;
    cell["tau_exp"] = c.tau_exp;
    cell["tau_imp"] = c.tau_imp;
    cell["objective"] = c.objective;
    table.push_back(std::move(cell));
  }
  j["grid"] = std::move(table);
  return j;
}

}  // namespace protrack
