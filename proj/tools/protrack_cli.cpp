// tools/protrack_cli.cpp

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

// Command-line front end. Exit codes: 0 success, 2 validation error,
// 3 decode error, 4 I/O error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "protrack/protrack.hpp"

namespace {

using namespace protrack;

constexpr int kExitValidation = 2;
constexpr int kExitDecode = 3;
constexpr int kExitIo = 4;

struct Options {
  std::vector<std::string> corpus_paths;
  std::string emissions;
  std::string model;
  std::string vocab = "propara";
  double tau_exp = 0.6;
  double tau_imp = 0.7;
  std::uint64_t seed = 0;
  std::string out;
  bool relax = false;
  unsigned jobs = 1;

  std::string kinds = "state,location";
  std::uint64_t min_count = 0;
  double state_noise = 0.0;
  double location_noise = 0.0;
  double implicit_noise = 0.0;
  double explicit_noise = 0.0;
  std::size_t procedures = 0;
  std::string corpus_out;
  std::string decoded;
  std::string predictions;
  std::string grid;
  bool per_procedure = false;
  bool diagnose = false;
  bool no_crf = false;

  const std::string& corpus() const {
    if (corpus_paths.empty()) throw ValidationError("--corpus is required");
    return corpus_paths.front();
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

int cmd_stats(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  std::vector<std::pair<std::string, SplitStats>> rows;
  Corpus all;
  all.vocabulary = vocab;
  for (const auto& path : o.corpus_paths) {
    Corpus c = load_corpus(path, vocab);
    rows.emplace_back(std::filesystem::path(path).stem().string(), split_stats(c));
    for (auto& p : c.procedures) all.procedures.push_back(std::move(p));
  }
  if (rows.size() > 1) rows.emplace_back("total", split_stats(all));
  write_or_print(o.out, format_stats_table(rows));
  return 0;
}

int cmd_format_qa(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus corpus = load_corpus(o.corpus(), vocab);
  std::vector<QAKind> kinds;
  std::size_t start = 0;
  while (start <= o.kinds.size()) {
    auto end = o.kinds.find(',', start);
    if (end == std::string::npos) end = o.kinds.size();
    kinds.push_back(parse_qa_kind(o.kinds.substr(start, end - start)));
    start = end + 1;
  }
  if (o.out.empty()) throw ValidationError("--out is required");
  const std::size_t count = export_instances(corpus, kinds, o.out);
  std::cerr << "wrote " << count << " instances to " << o.out << "\n";
  return 0;
}

int cmd_estimate(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus corpus = load_corpus(o.corpus(), vocab);
  const TransitionModel model = estimate_transitions(corpus);
  write_or_print(o.out, serialize_model(model));
  if (o.min_count > 0) {
    for (const auto& r : rare_transitions(model, o.min_count)) {
      std::cerr << "rare transition " << vocab.label(r.from) << " -> "
                << vocab.label(r.to) << ": " << r.count << "\n";
    }
  }
  return 0;
}

int cmd_synth(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  Corpus corpus;
  if (o.procedures > 0) {
    if (vocab.name() != "propara") {
      throw ValidationError("corpus generation supports the propara vocabulary only");
    }
    GeneratorConfig gen;
    gen.procedures = o.procedures;
    gen.seed = o.seed;
    corpus = generate_corpus(gen);
    if (!o.corpus_out.empty()) write_text_file(o.corpus_out, serialize_corpus(corpus));
  } else {
    corpus = load_corpus(o.corpus(), vocab);
  }
  OracleConfig config;
  config.state_noise = o.state_noise;
  config.location_noise = o.location_noise;
  config.seed = o.seed;
  if (o.implicit_noise > 0) config.corruption_bias[NoiseBias::kImplicitStep] = o.implicit_noise;
  if (o.explicit_noise > 0) config.corruption_bias[NoiseBias::kExplicitStep] = o.explicit_noise;
  write_or_print(o.out, serialize_emissions(synth_emissions(corpus, config)));
  return 0;
}

PipelineOptions pipeline_options(const Options& o) {
  PipelineOptions options;
  options.config = DecodeConfig{o.tau_exp, o.tau_imp};
  options.relax = o.relax;
  options.use_crf = !o.no_crf;
  options.jobs = o.jobs;
  return options;
}

int cmd_decode(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus corpus = load_corpus(o.corpus(), vocab);
  const EmissionTable emissions = load_emissions(o.emissions);
  const TransitionModel model = load_model(o.model);
  const auto results = decode_and_resolve(corpus, emissions, model, pipeline_options(o));
  write_or_print(o.out, serialize_decoded(results, emissions, vocab));
  if (o.diagnose) {
    WeightingDiagnostics total;
    const DecodeConfig config{o.tau_exp, o.tau_imp};
    const TransitionModel used = o.relax ? model.relaxed() : model;
    for (const auto& r : results) {
      const auto& e = emissions.at(r.procedure_id).entities.at(r.entity_id);
      const auto d = diagnose_weighting(e.state_logits, r.decoded.mentions, used, config);
      total.steps += d.steps;
      total.negative_rows += d.negative_rows;
      total.flipped_steps += d.flipped_steps;
    }
    std::cerr << "steps " << total.steps << ", rows with negative best logit "
              << total.negative_rows << ", steps changed by weighting "
              << total.flipped_steps << "\n";
  }
  return 0;
}

int cmd_resolve(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  if (o.decoded.empty()) throw ValidationError("--decoded is required");
  const auto records = parse_decoded(read_text_file(o.decoded), vocab, o.decoded);
  std::vector<EntityResult> results;
  for (const auto& d : records) {
    EntityResult r;
    r.procedure_id = d.procedure_id;
    r.entity_id = d.entity_id;
    r.decoded.states = d.states;
    r.resolved = resolve(d.states, d.location_preds, vocab);
    if (!r.resolved.feasible) {
      std::cerr << "warning: (" << d.procedure_id << ", " << d.entity_id
                << "): states admit no consistent locations\n";
    }
    results.push_back(std::move(r));
  }
  write_or_print(o.out, serialize_predictions(results, vocab));
  return 0;
}

std::string per_procedure_text(const Corpus& gold, const PredictionSet& preds) {
  std::string out;
  for (const auto& proc : gold.procedures) {
    if (gold.find_gold(proc.id) == nullptr) continue;
    PredictionSet subset;
    if (auto it = preds.find(proc.id); it != preds.end()) subset.emplace(*it);
    out += "== " + proc.id + "\n";
    out += format_report(evaluate(single_procedure(gold, proc), subset));
  }
  return out;
}

int cmd_evaluate(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus gold = load_corpus(o.corpus(), vocab);
  if (o.predictions.empty()) throw ValidationError("--predictions is required");
  const PredictionSet preds = load_predictions(o.predictions, vocab);
  const EvalReport report = evaluate(gold, preds);
  std::cout << format_report(report);
  if (o.per_procedure) std::cout << per_procedure_text(gold, preds);
  if (!o.out.empty()) write_text_file(o.out, report_to_json(report).dump(2) + "\n");
  return 0;
}

int cmd_tune(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus dev = load_corpus(o.corpus(), vocab);
  const EmissionTable emissions = load_emissions(o.emissions);
  const TransitionModel model = load_model(o.model);
  const GridSpec grid = o.grid.empty() ? default_grid() : parse_grid(o.grid);
  const TuneResult result = tune(dev, emissions, model, grid, o.jobs, o.relax);
  std::cout << "best tau_exp " << result.best.tau_exp << " tau_imp "
            << result.best.tau_imp << " objective " << result.objective << "\n";
  write_or_print(o.out.empty() ? "-" : o.out, tune_result_to_json(result).dump(2) + "\n");
  return 0;
}

int cmd_pipeline(const Options& o) {
  const auto& vocab = StateVocabulary::by_name(o.vocab);
  const Corpus corpus = load_corpus(o.corpus(), vocab);
  const EmissionTable emissions = load_emissions(o.emissions);
  const TransitionModel model = load_model(o.model);
  const PipelineResult result = run_pipeline(corpus, emissions, model, pipeline_options(o));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (o.out.empty()) throw ValidationError("--out directory is required");
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create directory '" + o.out + "': " + ec.message());
  const std::filesystem::path dir(o.out);
  write_text_file((dir / "predictions.jsonl").string(),
                  serialize_predictions(result.entities, vocab));
  write_text_file((dir / "report.json").string(),
                  report_to_json(result.report).dump(2) + "\n");
  std::string text = format_report(result.report);
  if (o.per_procedure) text += per_procedure_text(corpus, result.predictions);
  write_text_file((dir / "report.txt").string(), text);
  std::cout << format_report(result.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-tracking decoding and evaluation toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_vocab = [&](CLI::App* cmd) {
    cmd->add_option("--vocab", o.vocab, "State vocabulary")
        ->check(CLI::IsMember({"propara", "recipes"}));
  };
  auto add_corpus = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", o.corpus_paths, "Corpus file (JSON lines)");
  };
  auto add_decode = [&](CLI::App* cmd) {
    cmd->add_option("--emissions", o.emissions, "Emission file")->required();
    cmd->add_option("--model", o.model, "Transition model file")->required();
    cmd->add_option("--tau-exp", o.tau_exp, "Weight of steps mentioning the entity");
    cmd->add_option("--tau-imp", o.tau_imp, "Weight of the other steps");
    cmd->add_flag("--relax", o.relax, "Replace -inf transitions by -1e4");
    cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* stats = app.add_subcommand("stats", "Procedure/step/entity counts per corpus file");
  stats->add_option("--corpus", o.corpus_paths, "Corpus files")->required();
  add_vocab(stats);
  stats->add_option("--out", o.out, "Output file (default stdout)");

  auto* qa = app.add_subcommand("format-qa", "Write QA-formatted instances");
  add_corpus(qa);
  add_vocab(qa);
  qa->add_option("--kinds", o.kinds, "Comma-separated kinds: state,location");
  qa->add_option("--out", o.out, "Instance file")->required();

  auto* est = app.add_subcommand("estimate-transitions", "Count gold transitions");
  add_corpus(est);
  add_vocab(est);
  est->add_option("--out", o.out, "Model file (default stdout)");
  est->add_option("--min-count", o.min_count, "Report observed transitions below this count");

  auto* synth = app.add_subcommand("synth", "Synthetic emissions from gold grids");
  add_corpus(synth);
  add_vocab(synth);
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--state-noise", o.state_noise, "State corruption rate");
  synth->add_option("--location-noise", o.location_noise, "Location corruption rate");
  synth->add_option("--implicit-noise", o.implicit_noise, "Extra noise on steps without a mention");
  synth->add_option("--explicit-noise", o.explicit_noise, "Extra noise on steps with a mention");
  synth->add_option("--procedures", o.procedures, "Generate a synthetic corpus of this size");
  synth->add_option("--corpus-out", o.corpus_out, "Where to write the generated corpus");
  synth->add_option("--out", o.out, "Emission file (default stdout)");

  auto* decode = app.add_subcommand("decode", "Weighted Viterbi decoding of state logits");
  add_corpus(decode);
  add_vocab(decode);
  add_decode(decode);
  decode->add_flag("--diagnose", o.diagnose, "Report how weighting changes decoded steps");
  decode->add_option("--out", o.out, "Decoded file (default stdout)");

  auto* res = app.add_subcommand("resolve", "Make locations agree with decoded states");
  res->add_option("--decoded", o.decoded, "Decoded file from `decode`")->required();
  add_vocab(res);
  res->add_option("--out", o.out, "Prediction file (default stdout)");

  auto* eval = app.add_subcommand("evaluate", "Score predictions against gold");
  add_corpus(eval);
  add_vocab(eval);
  eval->add_option("--predictions", o.predictions, "Prediction file")->required();
  eval->add_option("--out", o.out, "JSON report file");
  eval->add_flag("--per-procedure", o.per_procedure, "Also print per-procedure breakdowns");

  auto* tune_cmd = app.add_subcommand("tune", "Grid search over tau_exp and tau_imp");
  add_corpus(tune_cmd);
  add_vocab(tune_cmd);
  add_decode(tune_cmd);
  tune_cmd->add_option("--grid", o.grid, "lo:hi:step[,lo:hi:step] (default 0.1:1.5:0.1)");
  tune_cmd->add_option("--out", o.out, "JSON result file (default stdout)");

  auto* pipe = app.add_subcommand("pipeline", "decode, resolve and evaluate");
  add_corpus(pipe);
  add_vocab(pipe);
  add_decode(pipe);
  pipe->add_flag("--no-crf", o.no_crf, "Use per-step argmax instead of Viterbi");
  pipe->add_flag("--per-procedure", o.per_procedure, "Per-procedure breakdowns in report.txt");
  pipe->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*stats) return cmd_stats(o);
    if (*qa) return cmd_format_qa(o);
    if (*est) return cmd_estimate(o);
    if (*synth) return cmd_synth(o);
    if (*decode) return cmd_decode(o);
    if (*res) return cmd_resolve(o);
    if (*eval) return cmd_evaluate(o);
    if (*tune_cmd) return cmd_tune(o);
    if (*pipe) return cmd_pipeline(o);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DecodeError& e) {
    std::cerr << "decode error: " << e.what() << "\n";
    return kExitDecode;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
