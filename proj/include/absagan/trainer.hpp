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

// Adversarial training loop: the discriminator descends its split loss every
// iteration, the generator ascends its objective every k-th iteration with
// its own learning rate and momentum derived through multipliers.

#ifndef ABSAGAN_TRAINER_HPP_
#define ABSAGAN_TRAINER_HPP_

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "absagan/network.hpp"

namespace absagan {

struct Hyperparams {
  Scalar lr_dis = 0.02;
  Scalar mom_dis = 0.9;
  Scalar mu_lr = 0.1;    // lr_gen = mu_lr * lr_dis
  Scalar mu_mom = 0.4;   // mom_gen = mu_mom * mom_dis
  int k = 3;             // generator update period
  Scalar lambda = 1e-4;  // shared L2 weight
  Scalar keep_p = 0.3;   // dropout keep probability
  int hops = 3;
  int iterations = 200;
  int batch_m = 20;
  int r = 100;
  int d = 768;
  std::uint64_t seed = 0;
  bool adversarial = true;  // false: plain 3-class training, no generator

  Scalar lr_gen() const { return mu_lr * lr_dis; }
  Scalar mom_gen() const { return mu_mom * mom_dis; }
  void validate() const;
};

/// Tuned optima shipped as presets; start points, not guarantees.
Hyperparams preset_semeval2015();
Hyperparams preset_semeval2016();

enum class TrainStatus { kCompleted, kDiverged };
const char* to_string(TrainStatus s);

struct TraceRecord {
  int iteration = 0;  // 1-based
  Scalar d_loss_real = 0;
  Scalar d_loss_fake = 0;
  Scalar g_objective = 0;
  Scalar mean_d_of_g = 0;  // probability-real mass on this iteration's fakes
  bool g_updated = false;
  long clamp_events = 0;  // near-divergence log clamps this iteration
  std::optional<Scalar> dis_norm, gen_norm;  // snapshots every 10 iterations
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
  void write_csv(std::ostream& out) const;
};

/// Batch losses on probability predictions; labels are 0-based real classes.
/// Means over each batch, plus lambda * ||params||^2 when params are given.
Scalar loss_discriminator(const std::vector<std::pair<Vector, int>>& real,
                          const std::vector<Vector>& fake,
                          const DiscriminatorParams* params, Scalar lambda);
Scalar loss_generator(const std::vector<Vector>& fake,
                      const GeneratorParams* params, Scalar lambda);

struct TrainerState {
  Hyperparams hp;
  DiscriminatorParams dis;
  GeneratorParams gen;
  std::vector<Matrix> vel_dis, vel_gen;
  Rng train_rng;  // noise + dropout
  Rng batch_rng;  // epoch shuffling
  int iteration = 0;  // completed iterations
  std::vector<int> epoch_order;
  std::size_t epoch_pos = 0;
  TrainingTrace trace;
};

TrainerState init_trainer(const Hyperparams& hp, std::size_t corpus_size);

/// Next batch_m real-instance indices, reshuffling per epoch.
std::vector<int> next_batch(TrainerState& state);

/// One iteration (generator turn first when due). Throws NonFiniteError on
/// divergence; the caller owns the Diverged bookkeeping.
void train_iteration(TrainerState& state,
                     const std::vector<const EmbeddedInstance*>& batch);

struct TrainResult {
  DiscriminatorParams dis;
  GeneratorParams gen;
  TrainingTrace trace;
  TrainStatus status = TrainStatus::kCompleted;
};

TrainResult train(const std::vector<EmbeddedInstance>& train_set,
                  const Hyperparams& hp);

/// Runs the remaining iterations on an existing state (fresh or loaded).
TrainResult resume_train(TrainerState& state,
                         const std::vector<EmbeddedInstance>& train_set);

/// Full mid-training snapshot: params, velocities, rng states, sampler;
/// reloading and continuing reproduces an uninterrupted run bit-exactly.
void save_training_state(std::ostream& out, const TrainerState& state);
void save_training_state(const std::string& path, const TrainerState& state);
TrainerState load_training_state(std::istream& in);
TrainerState load_training_state(const std::string& path);

}  // namespace absagan

#endif  // ABSAGAN_TRAINER_HPP_
