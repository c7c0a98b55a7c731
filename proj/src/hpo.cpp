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

#include "absagan/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace absagan {

void TrialConfig::apply(Hyperparams& hp) const {
  hp.lr_dis = lr_dis;
  hp.mom_dis = mom_dis;
  hp.mu_lr = mu_lr;
  hp.mu_mom = mu_mom;
  hp.k = k;
}

std::size_t SearchSpace::size() const {
  return lr_dis.size() * mom_dis.size() * mu_lr.size() * mu_mom.size() *
         k.size();
}

TrialConfig SearchSpace::at(std::size_t flat) const {
  TrialConfig c;
  c.k = k[flat % k.size()];
  flat /= k.size();
  c.mu_mom = mu_mom[flat % mu_mom.size()];
  flat /= mu_mom.size();
  c.mu_lr = mu_lr[flat % mu_lr.size()];
  flat /= mu_lr.size();
  c.mom_dis = mom_dis[flat % mom_dis.size()];
  flat /= mom_dis.size();
  c.lr_dis = lr_dis[flat];
  return c;
}

void SearchSpace::validate() const {
  auto check = [](const auto& list, const char* name) {
    if (list.empty()) {
      throw InvalidArgument(std::string("search space: empty list for ") + name);
    }
    for (const auto v : list) {
      if (v <= 0) {
        throw InvalidArgument(std::string("search space: non-positive ") + name);
      }
    }
  };
  check(lr_dis, "lr_dis");
  check(mom_dis, "mom_dis");
  check(mu_lr, "mu_lr");
  check(mu_mom, "mu_mom");
  check(k, "k");
}

const char* to_string(TrialStatus s) {
  return s == TrialStatus::kCompleted ? "Completed" : "Diverged";
}

namespace {

// Per-dimension candidate index of a configuration; the lists are exact
// values, so equality lookup is safe.
template <class T>
std::size_t index_of(const std::vector<T>& list, T v, const char* name) {
  auto it = std::find(list.begin(), list.end(), v);
  if (it == list.end()) {
    throw InvalidArgument(std::string("configuration value for ") + name +
                          " is off the grid");
  }
  return static_cast<std::size_t>(it - list.begin());
}

struct DimCounts {
  std::vector<int> good, bad;
};

template <class T>
void count_dim(DimCounts& counts, const std::vector<T>& list, T v, bool good,
               const char* name) {
  counts.good.resize(list.size(), 0);
  counts.bad.resize(list.size(), 0);
  const std::size_t i = index_of(list, v, name);
  (good ? counts.good : counts.bad)[i] += 1;
}

TrialConfig random_config(const SearchSpace& space, Rng& rng) {
  TrialConfig c;
  c.lr_dis = space.lr_dis[rng.below(space.lr_dis.size())];
  c.mom_dis = space.mom_dis[rng.below(space.mom_dis.size())];
  c.mu_lr = space.mu_lr[rng.below(space.mu_lr.size())];
  c.mu_mom = space.mu_mom[rng.below(space.mu_mom.size())];
  c.k = space.k[rng.below(space.k.size())];
  return c;
}

}  // namespace

TrialConfig tpe_suggest(const std::vector<Trial>& history,
                        const SearchSpace& space, const TpeOptions& opts,
                        Rng& rng) {
  space.validate();
  if (!(opts.gamma > 0.0 && opts.gamma < 1.0)) {
    throw InvalidArgument("gamma must be in (0,1)");
  }
  if (history.empty() && opts.n_startup <= 0) {
    throw InvalidArgument("empty history with no startup trials");
  }
  if (static_cast<int>(history.size()) < opts.n_startup || history.size() < 2) {
    return random_config(space, rng);
  }

  // Good set: the top ceil(gamma*n) trials by objective, earlier trials
  // winning ties; everything else is bad.
  const std::size_t n = history.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history[a].objective > history[b].objective;
  });
  std::size_t n_good = static_cast<std::size_t>(
      std::ceil(opts.gamma * static_cast<Scalar>(n)));
  n_good = std::min(std::max<std::size_t>(n_good, 1), n - 1);

  DimCounts lr, mom, mulr, mumom, kk;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const Trial& t = history[order[rank]];
    const bool good = rank < n_good;
    count_dim(lr, space.lr_dis, t.config.lr_dis, good, "lr_dis");
    count_dim(mom, space.mom_dis, t.config.mom_dis, good, "mom_dis");
    count_dim(mulr, space.mu_lr, t.config.mu_lr, good, "mu_lr");
    count_dim(mumom, space.mu_mom, t.config.mu_mom, good, "mu_mom");
    count_dim(kk, space.k, t.config.k, good, "k");
  }

  auto dim_score = [](const DimCounts& c, std::size_t i) {
    return std::log(static_cast<Scalar>(c.good[i] + 1)) -
           std::log(static_cast<Scalar>(c.bad[i] + 1));
  };

  Scalar best_score = -std::numeric_limits<Scalar>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t flat = 0; flat < space.size(); ++flat) {
    const TrialConfig c = space.at(flat);
    const Scalar score =
        dim_score(lr, index_of(space.lr_dis, c.lr_dis, "lr_dis")) +
        dim_score(mom, index_of(space.mom_dis, c.mom_dis, "mom_dis")) +
        dim_score(mulr, index_of(space.mu_lr, c.mu_lr, "mu_lr")) +
        dim_score(mumom, index_of(space.mu_mom, c.mu_mom, "mu_mom")) +
        dim_score(kk, index_of(space.k, c.k, "k"));
    if (score > best_score) {
      best_score = score;
      ties.clear();
      ties.push_back(flat);
    } else if (score == best_score) {
      ties.push_back(flat);
    }
  }
  return space.at(ties[rng.below(ties.size())]);
}

namespace {

bool improves(const Trial& t, const Trial& best) {
  if (t.objective != best.objective) return t.objective > best.objective;
  return t.status == TrialStatus::kCompleted &&
         best.status == TrialStatus::kDiverged;
}

}  // namespace

HpoResult hpo_run(const TrialObjective& objective, const SearchSpace& space,
                  int budget, std::uint64_t seed, const TpeOptions& opts,
                  int parallel_width) {
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (parallel_width < 1) throw InvalidArgument("parallel width must be >= 1");
  space.validate();
  Rng rng(hash_mix(seed, 0x7065));  // suggestion stream

  std::vector<Trial> trials;
  trials.reserve(budget);
  while (static_cast<int>(trials.size()) < budget) {
    const int batch_n = std::min<int>(parallel_width,
                                      budget - static_cast<int>(trials.size()));
    // Suggest the whole batch up front; pending suggestions enter the
    // history as objective-0 losers (constant liar), which keeps threaded
    // execution deterministic.
    std::vector<TrialConfig> configs;
    std::vector<Trial> lied = trials;
    for (int b = 0; b < batch_n; ++b) {
      TrialConfig c = tpe_suggest(lied, space, opts, rng);
      configs.push_back(c);
      lied.push_back(Trial{c, 0.0, TrialStatus::kDiverged});
    }

    std::vector<Trial> results(configs.size());
    if (batch_n == 1) {
      results[0] = objective(configs[0], hash_mix(seed, trials.size()));
    } else {
      std::vector<std::future<Trial>> futures;
      futures.reserve(configs.size());
      for (std::size_t b = 0; b < configs.size(); ++b) {
        const std::uint64_t trial_seed = hash_mix(seed, trials.size() + b);
        futures.push_back(std::async(std::launch::async, objective,
                                     configs[b], trial_seed));
      }
      for (std::size_t b = 0; b < futures.size(); ++b) {
        results[b] = futures[b].get();
      }
    }
    for (Trial& t : results) {
      if (t.status == TrialStatus::kDiverged) t.objective = 0.0;
      trials.push_back(std::move(t));
    }
  }

  HpoResult out;
  out.trials = std::move(trials);
  std::size_t best_at = 0;
  for (std::size_t i = 1; i < out.trials.size(); ++i) {
    if (improves(out.trials[i], out.trials[best_at])) best_at = i;
  }
  out.best = out.trials[best_at].config;
  out.best_objective = out.trials[best_at].objective;
  out.best_status = out.trials[best_at].status;
  return out;
}

HpoResult hpo_run(const std::vector<EmbeddedInstance>& instances,
                  const SearchSpace& space, int budget, std::uint64_t seed,
                  const Hyperparams& base, const TpeOptions& opts,
                  int parallel_width) {
  // One 80/20 split per run, shared by every trial.
  auto [train_part, val_part] =
      train_test_split(instances, 0.8, hash_mix(seed, 0x73706c69));
  if (val_part.empty()) throw InvalidArgument("validation split is empty");

  auto shared_train = std::make_shared<std::vector<EmbeddedInstance>>(
      std::move(train_part));
  auto shared_val =
      std::make_shared<std::vector<EmbeddedInstance>>(std::move(val_part));
  const Hyperparams base_hp = base;

  TrialObjective objective = [shared_train, shared_val, base_hp](
                                 const TrialConfig& config,
                                 std::uint64_t trial_seed) {
    Hyperparams hp = base_hp;
    config.apply(hp);
    hp.seed = trial_seed;
    TrainResult result = train(*shared_train, hp);
    if (result.status == TrainStatus::kDiverged) {
      return Trial{config, 0.0, TrialStatus::kDiverged};
    }
    int correct = 0;
    for (const EmbeddedInstance& x : *shared_val) {
      const Vector probs = predict_probs(x, result.dis, hp.hops);
      int arg = 0;
      for (int c = 1; c < kRealClasses; ++c) {
        if (probs(c) > probs(arg)) arg = c;
      }
      if (arg == static_cast<int>(x.polarity)) ++correct;
    }
    const Scalar acc =
        static_cast<Scalar>(correct) / static_cast<Scalar>(shared_val->size());
    return Trial{config, acc, TrialStatus::kCompleted};
  };

  return hpo_run(objective, space, budget, seed, opts, parallel_width);
}

void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials) {
  out << "lr_dis,mom_dis,mu_lr,mu_mom,k,objective,status\n";
  for (const Trial& t : trials) {
    out << t.config.lr_dis << ',' << t.config.mom_dis << ',' << t.config.mu_lr
        << ',' << t.config.mu_mom << ',' << t.config.k << ','
        << std::setprecision(17) << t.objective << std::setprecision(6) << ','
        << to_string(t.status) << "\n";
  }
}

}  // namespace absagan
