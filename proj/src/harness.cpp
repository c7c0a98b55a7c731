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

#include "absagan/harness.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace absagan {

Polarity predict_network(const EmbeddedInstance& x,
                         const DiscriminatorParams& model, int hops) {
  const Vector probs = predict_probs(x, model, hops);
  int arg = 0;
  for (int c = 1; c < kRealClasses; ++c) {
    if (probs(c) > probs(arg)) arg = c;
  }
  return static_cast<Polarity>(arg);
}

HybridPrediction predict_hybrid(const ReviewInstance& review,
                                const EmbeddedInstance& embedded,
                                const std::vector<LexiconEntry>& lexicon,
                                const DiscriminatorParams& model, int hops,
                                bool use_ontology) {
  if (use_ontology) {
    const OntologyVerdict verdict = ontology_classify(review, lexicon);
    if (verdict.outcome == VerdictOutcome::kPositive) {
      return {Polarity::kPositive, true};
    }
    if (verdict.outcome == VerdictOutcome::kNegative) {
      return {Polarity::kNegative, true};
    }
  }
  return {predict_network(embedded, model, hops), false};
}

EvalReport evaluate(const std::vector<EvalItem>& items,
                    const std::vector<LexiconEntry>& lexicon,
                    const DiscriminatorParams& model, int hops,
                    bool use_ontology) {
  if (items.empty()) throw DataError("evaluate on an empty test set");
  EvalReport report;
  report.total = static_cast<int>(items.size());
  for (const EvalItem& item : items) {
    const Polarity gold = item.review.polarity;
    const Polarity net = predict_network(item.embedded, model, hops);
    if (net == gold) ++report.network_only_correct;

    Polarity hybrid = net;
    bool by_ontology = false;
    if (use_ontology) {
      const OntologyVerdict verdict = ontology_classify(item.review, lexicon);
      if (verdict.outcome == VerdictOutcome::kPositive) {
        hybrid = Polarity::kPositive;
        by_ontology = true;
      } else if (verdict.outcome == VerdictOutcome::kNegative) {
        hybrid = Polarity::kNegative;
        by_ontology = true;
      }
    }
    if (by_ontology) {
      ++report.ontology_decided;
      if (hybrid == gold) ++report.ontology_correct;
    } else {
      ++report.network_decided;
      if (hybrid == gold) ++report.network_rest_correct;
    }
    if (hybrid == gold) ++report.hybrid_correct;
    report.confusion[static_cast<int>(gold)][static_cast<int>(hybrid)] += 1;
  }
  return report;
}

SyntheticCorpus make_synthetic_corpus(std::uint64_t seed, int size, int d) {
  if (size < 1) throw InvalidArgument("synthetic corpus size must be >= 1");
  if (d < 1) throw InvalidArgument("synthetic corpus dimension must be >= 1");

  // Class centers; the noise level leaves headroom below perfect accuracy.
  constexpr Scalar kCenterAmplitude = 1.0;
  constexpr Scalar kNoiseSigma = 1.0;
  std::array<Vector, 3> centers;
  for (int c = 0; c < 3; ++c) {
    Rng center_rng = Rng(seed).fork(100 + static_cast<std::uint64_t>(c));
    centers[c] = Vector(d);
    for (int j = 0; j < d; ++j) {
      centers[c](j) = kCenterAmplitude * center_rng.uniform(-1.0, 1.0);
    }
  }

  Rng structure_rng = Rng(seed).fork(1);
  SyntheticCorpus corpus{{}, EmbeddingStore(d)};
  corpus.instances.reserve(size);
  for (int i = 0; i < size; ++i) {
    ReviewInstance inst;
    inst.sentence_id = "synth-" + std::to_string(i);
    inst.aspect_category = "synthetic";
    inst.polarity = static_cast<Polarity>(i % 3);
    const int left = static_cast<int>(structure_rng.below(6));
    const int target = 1 + static_cast<int>(structure_rng.below(2));
    const int right = static_cast<int>(structure_rng.below(6));
    const int n = left + target + right;
    inst.target_begin = left;
    inst.target_end = left + target;
    inst.tokens.reserve(n);
    for (int t = 0; t < n; ++t) {
      inst.tokens.push_back("w" + std::to_string(structure_rng.below(50)));
    }

    // Class-conditional Gaussian embeddings keyed like synth_embeddings.
    const Vector& center = centers[static_cast<int>(inst.polarity)];
    for (int t = 0; t < n; ++t) {
      Rng key_rng = embedding_key_rng(hash_mix(seed, 2), inst.sentence_id, t,
                                      inst.tokens[t]);
      Vector v(d);
      for (int j = 0; j < d; ++j) {
        v(j) = center(j) + kNoiseSigma * key_rng.normal();
      }
      corpus.store.insert(inst.sentence_id, t, std::move(v));
    }
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

SynthBenchResult synth_bench(std::uint64_t seed, int size, int d,
                             Hyperparams base) {
  SyntheticCorpus corpus = make_synthetic_corpus(seed, size, d);

  std::vector<EmbeddedInstance> embedded;
  embedded.reserve(corpus.instances.size());
  for (const ReviewInstance& inst : corpus.instances) {
    embedded.push_back(embed(inst, corpus.store));
  }

  auto [train_idx, test_idx] =
      split_indices(embedded.size(), 0.8, hash_mix(seed, 3));
  std::vector<EmbeddedInstance> train_set;
  train_set.reserve(train_idx.size());
  for (std::size_t i : train_idx) train_set.push_back(embedded[i]);

  Hyperparams hp = base;
  hp.d = d;
  hp.seed = hash_mix(seed, 4);
  TrainResult result = train(train_set, hp);

  // Network-only reports on both splits; the lexicon plays no part here.
  auto score = [&](const std::vector<std::size_t>& idx) {
    EvalReport report;
    report.total = static_cast<int>(idx.size());
    for (std::size_t i : idx) {
      const Polarity gold = corpus.instances[i].polarity;
      const Polarity pred = predict_network(embedded[i], result.dis, hp.hops);
      if (pred == gold) {
        ++report.network_only_correct;
        ++report.hybrid_correct;
        ++report.network_rest_correct;
      }
      ++report.network_decided;
      report.confusion[static_cast<int>(gold)][static_cast<int>(pred)] += 1;
    }
    return report;
  };

  SynthBenchResult out;
  out.status = result.status;
  out.trace = std::move(result.trace);
  out.test_report = score(test_idx);
  out.train_report = score(train_idx);
  return out;
}

namespace {

std::string percent(Scalar x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * x << "%";
  return os.str();
}

}  // namespace

void write_report(std::ostream& out, const EvalReport& test,
                  const EvalReport* train, bool used_ontology) {
  out << "# evaluation report\n";
  out << std::setprecision(17);
  out << "total " << test.total << "\n";
  out << "ontology_decided " << test.ontology_decided << "\n";
  out << "network_decided " << test.network_decided << "\n";
  out << "hybrid_correct " << test.hybrid_correct << "\n";
  out << "ontology_correct " << test.ontology_correct << "\n";
  out << "network_rest_correct " << test.network_rest_correct << "\n";
  out << "network_only_correct " << test.network_only_correct << "\n";
  out << "accuracy_hybrid " << test.hybrid_accuracy() << "\n";
  out << "accuracy_network_only " << test.network_only_accuracy() << "\n";
  out << "accuracy_ontology_covered " << test.ontology_covered_accuracy()
      << "\n";
  out << "confusion_rows_gold_negative_neutral_positive\n";
  for (int g = 0; g < 3; ++g) {
    out << "confusion";
    for (int p = 0; p < 3; ++p) out << ' ' << test.confusion[g][p];
    out << "\n";
  }

  const std::string in_hybrid =
      train ? percent(train->hybrid_accuracy()) : std::string("n/a");
  const std::string in_net =
      train ? percent(train->network_only_accuracy()) : std::string("n/a");
  out << "\n";
  out << "                 in-sample   out-of-sample\n";
  if (used_ontology) {
    out << "w ontology       " << std::setw(10) << std::left << in_hybrid
        << "  " << percent(test.hybrid_accuracy()) << "\n";
  } else {
    out << "w ontology       " << std::setw(10) << std::left << "n/a"
        << "  n/a\n";
  }
  out << "w/o ontology     " << std::setw(10) << std::left << in_net << "  "
      << percent(test.network_only_accuracy()) << "\n";
}

}  // namespace absagan
