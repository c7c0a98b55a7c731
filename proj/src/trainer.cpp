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

#include "absagan/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace absagan {

void Hyperparams::validate() const {
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (batch_m < 1) throw InvalidArgument("batch_m must be >= 1");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (!(keep_p > 0.0 && keep_p <= 1.0)) {
    throw InvalidArgument("keep_p must be in (0,1]");
  }
  if (lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
  if (lr_dis <= 0.0) throw InvalidArgument("lr_dis must be > 0");
  if (mom_dis < 0.0 || mom_dis >= 1.0) {
    throw InvalidArgument("mom_dis must be in [0,1)");
  }
  if (mu_lr <= 0.0 || mu_mom < 0.0) {
    throw InvalidArgument("multipliers must be positive");
  }
  if (hops < 1) throw InvalidArgument("hops must be >= 1");
  if (d < 1 || r < 1) throw InvalidArgument("d and r must be >= 1");
}

Hyperparams preset_semeval2015() {
  Hyperparams hp;
  hp.lr_dis = 0.02;
  hp.mom_dis = 0.9;
  hp.mu_lr = 0.1;
  hp.mu_mom = 0.4;
  hp.k = 3;
  return hp;
}

Hyperparams preset_semeval2016() {
  Hyperparams hp;
  hp.lr_dis = 0.03;
  hp.mom_dis = 0.7;
  hp.mu_lr = 0.15;
  hp.mu_mom = 0.6;
  hp.k = 3;
  return hp;
}

const char* to_string(TrainStatus s) {
  return s == TrainStatus::kCompleted ? "Completed" : "Diverged";
}

void TrainingTrace::write_csv(std::ostream& out) const {
  out << "iteration,d_loss_real,d_loss_fake,g_objective,mean_D_of_G,g_updated\n";
  out << std::setprecision(17);
  for (const TraceRecord& r : records) {
    out << r.iteration << ',' << r.d_loss_real << ',' << r.d_loss_fake << ','
        << r.g_objective << ',' << r.mean_d_of_g << ',' << (r.g_updated ? 1 : 0)
        << "\n";
  }
}

namespace {

Scalar clamped_log(Scalar p) { return std::log(std::max(p, kProbClamp)); }

void check_prediction(const Vector& p) {
  if (p.rows() != kClassesWithFake) {
    throw ShapeError("prediction vector has length " +
                     std::to_string(p.rows()) + ", expected " +
                     std::to_string(kClassesWithFake));
  }
}

}  // namespace

Scalar loss_discriminator(const std::vector<std::pair<Vector, int>>& real,
                          const std::vector<Vector>& fake,
                          const DiscriminatorParams* params, Scalar lambda) {
  if (real.empty() && fake.empty()) {
    throw InvalidArgument("loss_discriminator on empty batches");
  }
  Scalar loss = 0;
  if (!real.empty()) {
    Scalar t = 0;
    for (const auto& [p, y] : real) {
      check_prediction(p);
      if (y < 0 || y >= kRealClasses) {
        throw InvalidArgument("real label out of range: " + std::to_string(y));
      }
      t += clamped_log(p(y));
    }
    loss -= t / static_cast<Scalar>(real.size());
  }
  if (!fake.empty()) {
    Scalar t = 0;
    for (const Vector& p : fake) {
      check_prediction(p);
      t += clamped_log(p(kFakeClass));
    }
    loss -= t / static_cast<Scalar>(fake.size());
  }
  if (params && lambda > 0) loss += lambda * squared_norm(*params);
  return loss;
}

Scalar loss_generator(const std::vector<Vector>& fake,
                      const GeneratorParams* params, Scalar lambda) {
  if (fake.empty()) throw InvalidArgument("loss_generator on empty batch");
  Scalar t = 0;
  for (const Vector& p : fake) {
    check_prediction(p);
    const Scalar real_mass = p(0) + p(1) + p(2);
    t += clamped_log(1.0 - real_mass);
  }
  Scalar loss = -t / static_cast<Scalar>(fake.size());
  if (params && lambda > 0) loss += lambda * squared_norm(*params);
  return loss;
}

namespace {

Vector draw_noise(Rng& rng, int r) {
  Vector z(r);
  for (int i = 0; i < r; ++i) z(i) = rng.uniform();  // U(0,1)
  return z;
}

Var sum_terms(Tape& tape, const std::vector<Var>& terms) {
  (void)tape;
  return sum(concat(std::span<const Var>(terms.data(), terms.size())));
}

template <class V>
Var l2_penalty(Tape& tape, const V& vars) {
  std::vector<Var> terms;
  vars.visit("", [&](const std::string&, const Var& v) {
    terms.push_back(l2_norm_sq(v));
  });
  return sum_terms(tape, terms);
}

std::vector<Matrix> zero_like(const std::vector<const Matrix*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const Matrix* m : params) out.push_back(Matrix::Zero(m->rows(), m->cols()));
  return out;
}

}  // namespace

TrainerState init_trainer(const Hyperparams& hp, std::size_t corpus_size) {
  hp.validate();
  if (corpus_size == 0) throw InvalidArgument("empty training set");
  Rng init_rng = Rng(hp.seed).fork(0);
  TrainerState state{
      hp,
      init_discriminator(hp.d, init_rng),
      init_generator(hp.d, hp.r, init_rng),
      {},
      {},
      Rng(hp.seed).fork(1),
      Rng(hp.seed).fork(2),
      0,
      {},
      0,
      {}};
  state.vel_dis = zero_like(collect(std::as_const(state.dis)));
  state.vel_gen = zero_like(collect(std::as_const(state.gen)));
  state.epoch_order.resize(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) {
    state.epoch_order[i] = static_cast<int>(i);
  }
  state.batch_rng.shuffle(state.epoch_order);
  return state;
}

std::vector<int> next_batch(TrainerState& state) {
  std::vector<int> out;
  out.reserve(state.hp.batch_m);
  for (int i = 0; i < state.hp.batch_m; ++i) {
    if (state.epoch_pos == state.epoch_order.size()) {
      state.batch_rng.shuffle(state.epoch_order);
      state.epoch_pos = 0;
    }
    out.push_back(state.epoch_order[state.epoch_pos++]);
  }
  return out;
}

void train_iteration(TrainerState& state,
                     const std::vector<const EmbeddedInstance*>& batch) {
  const Hyperparams& hp = state.hp;
  const int it = state.iteration + 1;
  const bool g_turn = hp.adversarial && (it % hp.k == 0);
  const int m = hp.batch_m;
  if (batch.empty()) throw InvalidArgument("empty real batch");

  long clamp_events = 0;

  // Generator turn first, against the pre-update discriminator.
  if (g_turn) {
    Tape tape;
    DiscriminatorVars dis_vars = push_discriminator(tape, state.dis, false);
    GeneratorVars gen_vars = push_generator(tape, state.gen, true);
    std::vector<Var> terms;
    terms.reserve(m);
    for (int i = 0; i < m; ++i) {
      Var z = tape.constant(draw_noise(state.train_rng, hp.r));
      Var p = head_forward(tape, generator_forward(tape, z, gen_vars),
                           dis_vars, hp.keep_p, true, &state.train_rng);
      Var real_mass = sum_range(p, 0, kRealClasses);
      terms.push_back(log_clamped(add_const(scale(real_mass, -1.0), 1.0)));
    }
    Var objective = scale(sum_terms(tape, terms), -1.0 / m);
    // Ascend the objective net of the L2 penalty.
    Var loss = scale(objective, -1.0);
    if (hp.lambda > 0) {
      loss = add(loss, scale(l2_penalty(tape, gen_vars), hp.lambda));
    }
    GradMap grads = tape.backward(loss);
    clamp_events += tape.clamp_events();
    sgd_momentum_step(collect(state.gen), grads, hp.lr_gen(), hp.mom_gen(),
                      state.vel_gen);
  }

  // Discriminator descent; on generator turns it sees the updated generator.
  Tape tape;
  DiscriminatorVars dis_vars = push_discriminator(tape, state.dis, true);

  std::vector<Vector> fake_reps;
  if (hp.adversarial) {
    fake_reps.reserve(m);
    for (int i = 0; i < m; ++i) {
      fake_reps.push_back(generate(state.gen, draw_noise(state.train_rng, hp.r)));
    }
  }

  std::vector<Var> real_terms;
  real_terms.reserve(batch.size());
  for (const EmbeddedInstance* x : batch) {
    Var p = discriminator_forward(tape, *x, dis_vars, hp.hops, hp.keep_p, true,
                                  &state.train_rng);
    real_terms.push_back(log_clamped(pick(p, static_cast<int>(x->polarity))));
  }

  Scalar g_objective_sum = 0, d_of_g_sum = 0;
  std::vector<Var> fake_terms;
  fake_terms.reserve(fake_reps.size());
  for (const Vector& rep : fake_reps) {
    Var p = head_forward(tape, tape.constant(rep), dis_vars, hp.keep_p, true,
                         &state.train_rng);
    fake_terms.push_back(log_clamped(pick(p, kFakeClass)));
    const Scalar real_mass = p.value().col(0).head(kRealClasses).sum();
    d_of_g_sum += real_mass;
    g_objective_sum += -clamped_log(1.0 - real_mass);
  }

  TraceRecord rec;
  rec.iteration = it;
  rec.g_updated = g_turn;

  Var d_loss_real =
      scale(sum_terms(tape, real_terms), -1.0 / static_cast<Scalar>(batch.size()));
  rec.d_loss_real = d_loss_real.value()(0, 0);
  Var loss = d_loss_real;
  if (!fake_terms.empty()) {
    Var d_loss_fake = scale(sum_terms(tape, fake_terms),
                            -1.0 / static_cast<Scalar>(fake_terms.size()));
    rec.d_loss_fake = d_loss_fake.value()(0, 0);
    loss = add(loss, d_loss_fake);
  }
  if (hp.lambda > 0) {
    loss = add(loss, scale(l2_penalty(tape, dis_vars), hp.lambda));
  }
  GradMap grads = tape.backward(loss);
  clamp_events += tape.clamp_events();
  sgd_momentum_step(collect(state.dis), grads, hp.lr_dis, hp.mom_dis,
                    state.vel_dis);

  if (!fake_reps.empty()) {
    rec.g_objective = g_objective_sum / static_cast<Scalar>(fake_reps.size());
    rec.mean_d_of_g = d_of_g_sum / static_cast<Scalar>(fake_reps.size());
  }
  rec.clamp_events = clamp_events;
  if (it % 10 == 0) {
    rec.dis_norm = std::sqrt(squared_norm(state.dis));
    rec.gen_norm = std::sqrt(squared_norm(state.gen));
  }
  if (!std::isfinite(rec.d_loss_real) || !std::isfinite(rec.d_loss_fake) ||
      !std::isfinite(rec.g_objective) || !std::isfinite(rec.mean_d_of_g)) {
    throw NonFiniteError("trace values at iteration " + std::to_string(it));
  }
  state.trace.records.push_back(rec);
  state.iteration = it;
}

TrainResult resume_train(TrainerState& state,
                         const std::vector<EmbeddedInstance>& train_set) {
  if (train_set.empty()) throw InvalidArgument("empty training set");
  if (state.epoch_order.size() != train_set.size()) {
    throw InvalidArgument("training set size does not match trainer state");
  }
  TrainStatus status = TrainStatus::kCompleted;
  while (state.iteration < state.hp.iterations) {
    const std::vector<int> idx = next_batch(state);
    std::vector<const EmbeddedInstance*> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(&train_set[static_cast<std::size_t>(i)]);
    try {
      train_iteration(state, batch);
    } catch (const NonFiniteError&) {
      status = TrainStatus::kDiverged;
      break;
    }
  }
  return TrainResult{state.dis, state.gen, state.trace, status};
}

TrainResult train(const std::vector<EmbeddedInstance>& train_set,
                  const Hyperparams& hp) {
  TrainerState state = init_trainer(hp, train_set.size());
  return resume_train(state, train_set);
}

namespace {

constexpr const char* kStateMagic = "absagan-trainer-state";

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << "\n";
  }
}

Matrix read_tensor(std::istream& in, const std::string& expect_name) {
  std::string name;
  Index rows = 0, cols = 0;
  in >> name >> rows >> cols;
  if (!in || name != expect_name || rows < 1 || cols < 1) {
    throw DataError("trainer state: bad tensor '" + expect_name + "'");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw DataError("trainer state: truncated tensor '" + expect_name + "'");
      }
    }
  }
  return m;
}

}  // namespace

void save_training_state(std::ostream& out, const TrainerState& state) {
  out << kStateMagic << " v1\n";
  out << std::setprecision(17);
  const Hyperparams& hp = state.hp;
  out << "lr_dis " << hp.lr_dis << "\nmom_dis " << hp.mom_dis << "\nmu_lr "
      << hp.mu_lr << "\nmu_mom " << hp.mu_mom << "\nk " << hp.k << "\nlambda "
      << hp.lambda << "\nkeep_p " << hp.keep_p << "\nhops " << hp.hops
      << "\niterations " << hp.iterations << "\nbatch_m " << hp.batch_m
      << "\nr " << hp.r << "\nd " << hp.d << "\nseed " << hp.seed
      << "\nadversarial " << (hp.adversarial ? 1 : 0) << "\n";
  out << "iteration " << state.iteration << "\n";
  out << "epoch_pos " << state.epoch_pos << "\n";
  out << "epoch_order " << state.epoch_order.size();
  for (int i : state.epoch_order) out << ' ' << i;
  out << "\n";
  out << "train_rng ";
  state.train_rng.save(out);
  out << "\nbatch_rng ";
  state.batch_rng.save(out);
  out << "\n";

  state.dis.visit("dis", [&](const std::string& n, const Matrix& m) {
    write_tensor(out, n, m);
  });
  state.gen.visit("gen", [&](const std::string& n, const Matrix& m) {
    write_tensor(out, n, m);
  });
  for (std::size_t i = 0; i < state.vel_dis.size(); ++i) {
    write_tensor(out, "vel_dis." + std::to_string(i), state.vel_dis[i]);
  }
  for (std::size_t i = 0; i < state.vel_gen.size(); ++i) {
    write_tensor(out, "vel_gen." + std::to_string(i), state.vel_gen[i]);
  }

  out << "trace " << state.trace.records.size() << "\n";
  for (const TraceRecord& r : state.trace.records) {
    out << r.iteration << ' ' << r.d_loss_real << ' ' << r.d_loss_fake << ' '
        << r.g_objective << ' ' << r.mean_d_of_g << ' ' << (r.g_updated ? 1 : 0)
        << ' ' << r.clamp_events << ' ' << (r.dis_norm.has_value() ? 1 : 0);
    if (r.dis_norm.has_value()) {
      out << ' ' << *r.dis_norm << ' ' << *r.gen_norm;
    }
    out << "\n";
  }
}

void save_training_state(const std::string& path, const TrainerState& state) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trainer state " + path);
  save_training_state(out, state);
}

TrainerState load_training_state(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != kStateMagic || version != "v1") {
    throw DataError("not a recognized trainer state header");
  }
  auto expect_key = [&](const char* key) {
    std::string k;
    in >> k;
    if (!in || k != key) {
      throw DataError(std::string("trainer state: expected key ") + key);
    }
  };
  Hyperparams hp;
  expect_key("lr_dis");
  in >> hp.lr_dis;
  expect_key("mom_dis");
  in >> hp.mom_dis;
  expect_key("mu_lr");
  in >> hp.mu_lr;
  expect_key("mu_mom");
  in >> hp.mu_mom;
  expect_key("k");
  in >> hp.k;
  expect_key("lambda");
  in >> hp.lambda;
  expect_key("keep_p");
  in >> hp.keep_p;
  expect_key("hops");
  in >> hp.hops;
  expect_key("iterations");
  in >> hp.iterations;
  expect_key("batch_m");
  in >> hp.batch_m;
  expect_key("r");
  in >> hp.r;
  expect_key("d");
  in >> hp.d;
  expect_key("seed");
  in >> hp.seed;
  expect_key("adversarial");
  int adv = 1;
  in >> adv;
  hp.adversarial = adv != 0;
  if (!in) throw DataError("trainer state: bad hyperparameters");

  TrainerState state{hp, {}, {}, {}, {}, Rng(0), Rng(0), 0, {}, 0, {}};
  expect_key("iteration");
  in >> state.iteration;
  expect_key("epoch_pos");
  in >> state.epoch_pos;
  expect_key("epoch_order");
  std::size_t order_n = 0;
  in >> order_n;
  state.epoch_order.resize(order_n);
  for (std::size_t i = 0; i < order_n; ++i) in >> state.epoch_order[i];
  expect_key("train_rng");
  state.train_rng.load(in);
  expect_key("batch_rng");
  state.batch_rng.load(in);
  if (!in) throw DataError("trainer state: bad sampler section");

  Rng zero_rng(0);
  state.dis = init_discriminator(hp.d, zero_rng);
  state.gen = init_generator(hp.d, hp.r, zero_rng);
  state.dis.visit("dis", [&](const std::string& n, Matrix& m) {
    Matrix t = read_tensor(in, n);
    if (t.rows() != m.rows() || t.cols() != m.cols()) {
      throw DataError("trainer state: tensor '" + n + "' has wrong shape");
    }
    m = std::move(t);
  });
  state.gen.visit("gen", [&](const std::string& n, Matrix& m) {
    Matrix t = read_tensor(in, n);
    if (t.rows() != m.rows() || t.cols() != m.cols()) {
      throw DataError("trainer state: tensor '" + n + "' has wrong shape");
    }
    m = std::move(t);
  });
  state.vel_dis.clear();
  for (std::size_t i = 0; i < collect(std::as_const(state.dis)).size(); ++i) {
    state.vel_dis.push_back(read_tensor(in, "vel_dis." + std::to_string(i)));
  }
  state.vel_gen.clear();
  for (std::size_t i = 0; i < collect(std::as_const(state.gen)).size(); ++i) {
    state.vel_gen.push_back(read_tensor(in, "vel_gen." + std::to_string(i)));
  }

  expect_key("trace");
  std::size_t trace_n = 0;
  in >> trace_n;
  state.trace.records.resize(trace_n);
  for (std::size_t i = 0; i < trace_n; ++i) {
    TraceRecord& r = state.trace.records[i];
    int g_updated = 0, has_norms = 0;
    in >> r.iteration >> r.d_loss_real >> r.d_loss_fake >> r.g_objective >>
        r.mean_d_of_g >> g_updated >> r.clamp_events >> has_norms;
    r.g_updated = g_updated != 0;
    if (has_norms) {
      Scalar dn = 0, gn = 0;
      in >> dn >> gn;
      r.dis_norm = dn;
      r.gen_norm = gn;
    }
  }
  if (!in) throw DataError("trainer state: truncated trace");
  return state;
}

TrainerState load_training_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trainer state " + path);
  return load_training_state(in);
}

}  // namespace absagan
