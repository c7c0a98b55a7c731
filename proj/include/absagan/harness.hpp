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

// End-to-end orchestration: hybrid dispatch (lexicon stage first, network
// as back-up), accuracy accounting, and the synthetic desk-scale benchmark.

#ifndef ABSAGAN_HARNESS_HPP_
#define ABSAGAN_HARNESS_HPP_

#include <array>
#include <iosfwd>
#include <vector>

#include "absagan/hpo.hpp"
#include "absagan/ontology.hpp"
#include "absagan/trainer.hpp"

namespace absagan {

/// A test item pairs the raw instance (for the lexicon stage) with its
/// embedded form (for the network).
struct EvalItem {
  ReviewInstance review;
  EmbeddedInstance embedded;
};

struct EvalReport {
  int total = 0;
  int ontology_decided = 0;
  int network_decided = 0;
  int hybrid_correct = 0;
  int ontology_correct = 0;       // correct among ontology-decided
  int network_rest_correct = 0;   // correct among network-decided
  int network_only_correct = 0;   // network prediction correct, all items
  std::array<std::array<int, 3>, 3> confusion{};  // [gold][hybrid prediction]

  Scalar hybrid_accuracy() const {
    return total ? static_cast<Scalar>(hybrid_correct) / total : 0.0;
  }
  Scalar network_only_accuracy() const {
    return total ? static_cast<Scalar>(network_only_correct) / total : 0.0;
  }
  Scalar ontology_covered_accuracy() const {
    return ontology_decided
               ? static_cast<Scalar>(ontology_correct) / ontology_decided
               : 0.0;
  }
};

struct HybridPrediction {
  Polarity polarity = Polarity::kNeutral;
  bool by_ontology = false;
};

/// Network-only prediction: argmax over the three real-class probabilities;
/// the fake class is excluded at inference.
Polarity predict_network(const EmbeddedInstance& x,
                         const DiscriminatorParams& model, int hops);

/// Lexicon verdict when it decides, network back-up otherwise.
HybridPrediction predict_hybrid(const ReviewInstance& review,
                                const EmbeddedInstance& embedded,
                                const std::vector<LexiconEntry>& lexicon,
                                const DiscriminatorParams& model, int hops,
                                bool use_ontology = true);

/// Hybrid and network-only accuracies in one pass. The network-only numbers
/// do not depend on use_ontology.
EvalReport evaluate(const std::vector<EvalItem>& items,
                    const std::vector<LexiconEntry>& lexicon,
                    const DiscriminatorParams& model, int hops,
                    bool use_ontology = true);

/// Synthetic 3-class corpus: per class, token embeddings are Gaussian around
/// a class-specific center; targets span 1-2 tokens, contexts 0-5.
struct SyntheticCorpus {
  std::vector<ReviewInstance> instances;
  EmbeddingStore store;
};
SyntheticCorpus make_synthetic_corpus(std::uint64_t seed, int size, int d);

struct SynthBenchResult {
  EvalReport test_report;   // held-out 20%, network-only
  EvalReport train_report;  // in-sample, network-only
  TrainingTrace trace;
  TrainStatus status = TrainStatus::kCompleted;
};

/// Trains on 80% of a synthetic corpus and scores the rest network-only.
/// `base` supplies everything except d and seed, which are overridden.
SynthBenchResult synth_bench(std::uint64_t seed, int size, int d,
                             Hyperparams base);

/// Structured key-value report plus the four-cell accuracy summary.
/// in_sample may be null when no training-set evaluation exists.
void write_report(std::ostream& out, const EvalReport& out_of_sample,
                  const EvalReport* in_sample, bool used_ontology);

}  // namespace absagan

#endif  // ABSAGAN_HARNESS_HPP_
