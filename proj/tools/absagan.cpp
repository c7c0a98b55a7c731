/* Copyright 2026 The absagan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "absagan/harness.hpp"

namespace fs = std::filesystem;
using namespace absagan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitData = 3;

struct Options {
  std::string corpus, embeddings, lexicon, checkpoint, out, config, preset;
  bool pretokenized = false;
  bool synth_embeddings = false;
  bool no_ontology = false;
  bool no_adversarial = false;

  // Unset means "keep the default / config-file value".
  std::optional<Scalar> lr_dis, mom_dis, mu_lr, mu_mom, lambda, keep_p, gamma;
  std::optional<int> k, hops, iterations, batch_m, r, d, budget, n_startup,
      synth_size, width;
  std::optional<std::uint64_t> seed;
};

struct Settings {
  Hyperparams hp;
  int budget = 20;
  TpeOptions tpe;
  int synth_size = 300;
  int width = 1;
};

void apply_key(Settings& s, const std::string& key, const std::string& value,
               const std::string& where) {
  try {
    if (key == "lr_dis") s.hp.lr_dis = std::stod(value);
    else if (key == "mom_dis") s.hp.mom_dis = std::stod(value);
    else if (key == "mu_lr") s.hp.mu_lr = std::stod(value);
    else if (key == "mu_mom") s.hp.mu_mom = std::stod(value);
    else if (key == "k") s.hp.k = std::stoi(value);
    else if (key == "lambda") s.hp.lambda = std::stod(value);
    else if (key == "keep_p") s.hp.keep_p = std::stod(value);
    else if (key == "hops") s.hp.hops = std::stoi(value);
    else if (key == "iterations") s.hp.iterations = std::stoi(value);
    else if (key == "batch_m") s.hp.batch_m = std::stoi(value);
    else if (key == "r") s.hp.r = std::stoi(value);
    else if (key == "d") s.hp.d = std::stoi(value);
    else if (key == "seed") s.hp.seed = std::stoull(value);
    else if (key == "adversarial") s.hp.adversarial = std::stoi(value) != 0;
    else if (key == "budget") s.budget = std::stoi(value);
    else if (key == "gamma") s.tpe.gamma = std::stod(value);
    else if (key == "n_startup") s.tpe.n_startup = std::stoi(value);
    else if (key == "synth_size") s.synth_size = std::stoi(value);
    else if (key == "parallel_width") s.width = std::stoi(value);
    else throw DataError(where + ": unknown key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw DataError(where + ": bad value '" + value + "' for " + key);
  } catch (const std::out_of_range&) {
    throw DataError(where + ": value out of range for " + key);
  }
}

void load_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_key(s, key, value, path + ":" + std::to_string(lineno));
  }
}

Settings resolve_settings(const Options& opt) {
  Settings s;
  if (!opt.preset.empty()) {
    if (opt.preset == "semeval2015" || opt.preset == "2015") {
      s.hp = preset_semeval2015();
    } else if (opt.preset == "semeval2016" || opt.preset == "2016") {
      s.hp = preset_semeval2016();
    } else {
      throw InvalidArgument("unknown preset '" + opt.preset + "'");
    }
  }
  if (!opt.config.empty()) load_config_file(s, opt.config);
  // Command-line flags override the file.
  if (opt.lr_dis) s.hp.lr_dis = *opt.lr_dis;
  if (opt.mom_dis) s.hp.mom_dis = *opt.mom_dis;
  if (opt.mu_lr) s.hp.mu_lr = *opt.mu_lr;
  if (opt.mu_mom) s.hp.mu_mom = *opt.mu_mom;
  if (opt.k) s.hp.k = *opt.k;
  if (opt.lambda) s.hp.lambda = *opt.lambda;
  if (opt.keep_p) s.hp.keep_p = *opt.keep_p;
  if (opt.hops) s.hp.hops = *opt.hops;
  if (opt.iterations) s.hp.iterations = *opt.iterations;
  if (opt.batch_m) s.hp.batch_m = *opt.batch_m;
  if (opt.r) s.hp.r = *opt.r;
  if (opt.d) s.hp.d = *opt.d;
  if (opt.seed) s.hp.seed = *opt.seed;
  if (opt.no_adversarial) s.hp.adversarial = false;
  if (opt.budget) s.budget = *opt.budget;
  if (opt.gamma) s.tpe.gamma = *opt.gamma;
  if (opt.n_startup) s.tpe.n_startup = *opt.n_startup;
  if (opt.synth_size) s.synth_size = *opt.synth_size;
  if (opt.width) s.width = *opt.width;
  return s;
}

std::vector<ReviewInstance> load_corpus(const Options& opt) {
  if (opt.corpus.empty()) throw InvalidArgument("--corpus is required");
  return opt.pretokenized ? load_pretokenized(opt.corpus)
                          : parse_semeval_file(opt.corpus);
}

EmbeddingStore load_store(const Options& opt, const Settings& s,
                          const std::vector<ReviewInstance>& instances) {
  if (opt.synth_embeddings) {
    return synth_embeddings(instances, s.hp.d, s.hp.seed);
  }
  if (opt.embeddings.empty()) {
    throw InvalidArgument("--embeddings or --synth-embeddings is required");
  }
  return load_embeddings(opt.embeddings);
}

fs::path ensure_out_dir(const Options& opt) {
  if (opt.out.empty()) throw InvalidArgument("--out is required");
  fs::create_directories(opt.out);
  return fs::path(opt.out);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  fn(out);
}

int run_train(const Options& opt) {
  Settings s = resolve_settings(opt);
  const fs::path out_dir = ensure_out_dir(opt);
  const std::vector<ReviewInstance> instances = load_corpus(opt);
  if (instances.empty()) throw DataError("corpus has no usable instances");
  const EmbeddingStore store = load_store(opt, s, instances);
  if (store.dim() != s.hp.d) s.hp.d = store.dim();

  std::vector<EmbeddedInstance> embedded;
  embedded.reserve(instances.size());
  for (const ReviewInstance& inst : instances) {
    embedded.push_back(embed(inst, store));
  }

  const TrainResult result = train(embedded, s.hp);
  ModelCheckpoint ckpt{{s.hp.d, s.hp.r, s.hp.hops}, s.hp.seed, result.dis,
                       result.gen};
  save_checkpoint((out_dir / "model.ckpt").string(), ckpt);
  write_file(out_dir / "trace.csv",
             [&](std::ostream& o) { result.trace.write_csv(o); });

  std::cout << "trained " << s.hp.iterations << " iterations on "
            << embedded.size() << " instances, status "
            << to_string(result.status) << "\n";
  std::cout << "checkpoint: " << (out_dir / "model.ckpt").string() << "\n";
  return result.status == TrainStatus::kDiverged ? kExitDiverged : kExitOk;
}

int run_eval(const Options& opt) {
  Settings s = resolve_settings(opt);
  const fs::path out_dir = ensure_out_dir(opt);
  if (opt.checkpoint.empty()) throw InvalidArgument("--checkpoint is required");
  const ModelCheckpoint ckpt = load_checkpoint(opt.checkpoint);
  s.hp.d = ckpt.config.d;
  s.hp.r = ckpt.config.r;
  if (!opt.hops) s.hp.hops = ckpt.config.hops;

  const std::vector<ReviewInstance> instances = load_corpus(opt);
  if (instances.empty()) throw DataError("corpus has no usable instances");
  const EmbeddingStore store = load_store(opt, s, instances);
  if (store.dim() != ckpt.config.d) {
    throw DataError("embedding dimension " + std::to_string(store.dim()) +
                    " does not match checkpoint d=" +
                    std::to_string(ckpt.config.d));
  }

  std::vector<LexiconEntry> lexicon;
  if (!opt.lexicon.empty()) lexicon = load_lexicon(opt.lexicon);
  const bool use_ontology = !opt.no_ontology && !lexicon.empty();

  std::vector<EvalItem> items;
  items.reserve(instances.size());
  for (const ReviewInstance& inst : instances) {
    items.push_back(EvalItem{inst, embed(inst, store)});
  }
  const EvalReport report =
      evaluate(items, lexicon, ckpt.dis, s.hp.hops, use_ontology);
  write_file(out_dir / "report.txt", [&](std::ostream& o) {
    write_report(o, report, nullptr, use_ontology);
  });
  write_report(std::cout, report, nullptr, use_ontology);
  return kExitOk;
}

int run_hpo(const Options& opt) {
  Settings s = resolve_settings(opt);
  const fs::path out_dir = ensure_out_dir(opt);
  const std::vector<ReviewInstance> instances = load_corpus(opt);
  if (instances.size() < 2) throw DataError("hpo needs at least 2 instances");
  const EmbeddingStore store = load_store(opt, s, instances);
  if (store.dim() != s.hp.d) s.hp.d = store.dim();

  std::vector<EmbeddedInstance> embedded;
  embedded.reserve(instances.size());
  for (const ReviewInstance& inst : instances) {
    embedded.push_back(embed(inst, store));
  }

  const SearchSpace space;
  const HpoResult result = hpo_run(embedded, space, s.budget, s.hp.seed, s.hp,
                                   s.tpe, s.width);
  write_file(out_dir / "trials.csv",
             [&](std::ostream& o) { write_trials_csv(o, result.trials); });
  write_file(out_dir / "best.conf", [&](std::ostream& o) {
    o << "lr_dis = " << result.best.lr_dis << "\n";
    o << "mom_dis = " << result.best.mom_dis << "\n";
    o << "mu_lr = " << result.best.mu_lr << "\n";
    o << "mu_mom = " << result.best.mu_mom << "\n";
    o << "k = " << result.best.k << "\n";
  });
  std::cout << "best objective " << result.best_objective << " ("
            << to_string(result.best_status) << ") with lr_dis "
            << result.best.lr_dis << ", mom_dis " << result.best.mom_dis
            << ", mu_lr " << result.best.mu_lr << ", mu_mom "
            << result.best.mu_mom << ", k " << result.best.k << "\n";
  return kExitOk;
}

int run_ontology_eval(const Options& opt) {
  if (opt.lexicon.empty()) throw InvalidArgument("--lexicon is required");
  const std::vector<ReviewInstance> instances = load_corpus(opt);
  if (instances.empty()) throw DataError("corpus has no usable instances");
  const std::vector<LexiconEntry> lexicon = load_lexicon(opt.lexicon);

  int decided = 0, correct = 0, no_hit = 0, conflict = 0;
  for (const ReviewInstance& inst : instances) {
    const OntologyVerdict verdict = ontology_classify(inst, lexicon);
    switch (verdict.outcome) {
      case VerdictOutcome::kPositive:
        ++decided;
        if (inst.polarity == Polarity::kPositive) ++correct;
        break;
      case VerdictOutcome::kNegative:
        ++decided;
        if (inst.polarity == Polarity::kNegative) ++correct;
        break;
      case VerdictOutcome::kInconclusive:
        (verdict.reason == VerdictReason::kNoHit ? no_hit : conflict) += 1;
        break;
    }
  }
  std::ostringstream report;
  report << "# ontology report\n";
  report << "total " << instances.size() << "\n";
  report << "decided " << decided << "\n";
  report << "correct_on_decided " << correct << "\n";
  report << "no_hit " << no_hit << "\n";
  report << "conflict " << conflict << "\n";
  report << "accuracy_on_decided "
         << (decided ? static_cast<Scalar>(correct) / decided : 0.0) << "\n";
  std::cout << report.str();
  if (!opt.out.empty()) {
    const fs::path out_dir = ensure_out_dir(opt);
    write_file(out_dir / "ontology_report.txt",
               [&](std::ostream& o) { o << report.str(); });
  }
  return kExitOk;
}

int run_synth_bench(const Options& opt) {
  Settings s = resolve_settings(opt);
  const fs::path out_dir = ensure_out_dir(opt);
  const int d = opt.d ? *opt.d : 4;
  const SynthBenchResult result =
      synth_bench(s.hp.seed, s.synth_size, d, s.hp);
  write_file(out_dir / "report.txt", [&](std::ostream& o) {
    write_report(o, result.test_report, &result.train_report, false);
  });
  write_file(out_dir / "trace.csv",
             [&](std::ostream& o) { result.trace.write_csv(o); });
  write_report(std::cout, result.test_report, &result.train_report, false);
  std::cout << "status " << to_string(result.status) << "\n";
  return result.status == TrainStatus::kDiverged ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid aspect-based sentiment classifier with an adversarially trained neural back-up"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", opt.corpus, "Annotated review XML (or pretokenized file)");
    cmd->add_option("--embeddings", opt.embeddings, "Embedding file");
    cmd->add_option("--lexicon", opt.lexicon, "Sentiment lexicon file");
    cmd->add_option("--checkpoint", opt.checkpoint, "Model checkpoint");
    cmd->add_option("--out", opt.out, "Output directory");
    cmd->add_option("--config", opt.config, "key = value config file");
    cmd->add_option("--preset", opt.preset, "Preset: semeval2015 or semeval2016");
    cmd->add_option("--seed", opt.seed, "Random seed");
    cmd->add_flag("--pretokenized", opt.pretokenized, "Corpus is pretokenized lines");
    cmd->add_flag("--synth-embeddings", opt.synth_embeddings, "Synthesize embeddings instead of loading");
    cmd->add_flag("--no-ontology", opt.no_ontology, "Skip the lexicon stage");
    cmd->add_flag("--no-adversarial", opt.no_adversarial, "Plain 3-class training");
    cmd->add_option("--d", opt.d, "Embedding dimension");
    cmd->add_option("--r", opt.r, "Generator noise dimension");
    cmd->add_option("--hops", opt.hops, "Attention hops");
    cmd->add_option("--iterations", opt.iterations, "Training iterations");
    cmd->add_option("--batch-m", opt.batch_m, "Batch size");
    cmd->add_option("--lr-dis", opt.lr_dis, "Discriminator learning rate");
    cmd->add_option("--mom-dis", opt.mom_dis, "Discriminator momentum");
    cmd->add_option("--mu-lr", opt.mu_lr, "Generator learning-rate multiplier");
    cmd->add_option("--mu-mom", opt.mu_mom, "Generator momentum multiplier");
    cmd->add_option("--k", opt.k, "Generator update period");
    cmd->add_option("--lambda", opt.lambda, "L2 weight");
    cmd->add_option("--keep-p", opt.keep_p, "Dropout keep probability");
    cmd->add_option("--budget", opt.budget, "Search budget (hpo)");
    cmd->add_option("--gamma", opt.gamma, "TPE good-set fraction");
    cmd->add_option("--n-startup", opt.n_startup, "TPE random startup trials");
    cmd->add_option("--size", opt.synth_size, "Synthetic corpus size");
    cmd->add_option("--width", opt.width, "Parallel trial width (hpo)");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train on a corpus");
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  CLI::App* hpo_cmd = app.add_subcommand("hpo", "Hyperparameter search");
  CLI::App* ont_cmd = app.add_subcommand("ontology-eval", "Lexicon stage only");
  CLI::App* synth_cmd = app.add_subcommand("synth-bench", "Synthetic benchmark");
  for (CLI::App* cmd : {train_cmd, eval_cmd, hpo_cmd, ont_cmd, synth_cmd}) {
    add_common(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(opt);
    if (eval_cmd->parsed()) return run_eval(opt);
    if (hpo_cmd->parsed()) return run_hpo(opt);
    if (ont_cmd->parsed()) return run_ontology_eval(opt);
    if (synth_cmd->parsed()) return run_synth_bench(opt);
    std::cerr << "no mode selected\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const NonFiniteError& e) {
    std::cerr << e.what() << "\n";
    return kExitDiverged;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
