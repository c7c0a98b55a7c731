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

// Tree-structured Parzen Estimator over a finite hyperparameter grid. The
// grid is small enough to score exhaustively, so candidate sampling is
// replaced by an exact argmax of the good/bad density ratio.

#ifndef ABSAGAN_HPO_HPP_
#define ABSAGAN_HPO_HPP_

#include <functional>
#include <iosfwd>
#include <vector>

#include "absagan/trainer.hpp"

namespace absagan {

struct TrialConfig {
  Scalar lr_dis = 0.02;
  Scalar mom_dis = 0.9;
  Scalar mu_lr = 0.1;
  Scalar mu_mom = 0.4;
  int k = 3;

  bool operator==(const TrialConfig&) const = default;
  void apply(Hyperparams& hp) const;
};

struct SearchSpace {
  std::vector<Scalar> lr_dis{0.007, 0.01, 0.02, 0.03, 0.05, 0.09};
  std::vector<Scalar> mom_dis{0.7, 0.8, 0.9};
  std::vector<Scalar> mu_lr{0.1, 0.15, 0.2, 0.4};
  std::vector<Scalar> mu_mom{0.4, 0.6, 0.8, 1.6};
  std::vector<int> k{3, 4, 5};

  std::size_t size() const;
  TrialConfig at(std::size_t flat) const;  // row-major over the lists above
  void validate() const;
};

enum class TrialStatus { kCompleted, kDiverged };
const char* to_string(TrialStatus s);

struct Trial {
  TrialConfig config;
  Scalar objective = 0;  // validation accuracy; 0 when diverged
  TrialStatus status = TrialStatus::kCompleted;
};

struct TpeOptions {
  Scalar gamma = 0.25;  // fraction of history treated as the good set
  int n_startup = 5;    // uniform random trials before the model kicks in
};

/// Below n_startup trials: a uniform random grid point. Afterwards: split
/// history at the gamma-quantile of the objective, build add-one-smoothed
/// categorical densities per hyperparameter, and return the grid point
/// maximizing sum of log(l/g); ties are broken uniformly at random.
TrialConfig tpe_suggest(const std::vector<Trial>& history,
                        const SearchSpace& space, const TpeOptions& opts,
                        Rng& rng);

using TrialObjective =
    std::function<Trial(const TrialConfig& config, std::uint64_t trial_seed)>;

struct HpoResult {
  TrialConfig best;
  Scalar best_objective = 0;
  TrialStatus best_status = TrialStatus::kDiverged;
  std::vector<Trial> trials;
};

/// Sequential suggest -> run -> record loop. With parallel_width > 1 the
/// suggestions are made in deterministic batches under the constant-liar
/// convention (pending trials counted as bad) and the batch runs on threads.
HpoResult hpo_run(const TrialObjective& objective, const SearchSpace& space,
                  int budget, std::uint64_t seed, const TpeOptions& opts = {},
                  int parallel_width = 1);

/// Standard objective: one 80/20 split of the instances per run, train with
/// the suggested configuration, score network-only validation accuracy.
HpoResult hpo_run(const std::vector<EmbeddedInstance>& instances,
                  const SearchSpace& space, int budget, std::uint64_t seed,
                  const Hyperparams& base, const TpeOptions& opts = {},
                  int parallel_width = 1);

void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials);

}  // namespace absagan

#endif  // ABSAGAN_HPO_HPP_
