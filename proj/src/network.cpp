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

#include "absagan/network.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace absagan {

namespace {

Matrix init_weight(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-0.01, 0.01);
  }
  return m;
}

LstmCellT<Matrix> init_lstm_cell(int input, int hidden, Rng& rng) {
  LstmCellT<Matrix> c;
  auto gate = [&](Matrix& w, Matrix& u, Matrix& b) {
    w = init_weight(hidden, input, rng);
    u = init_weight(hidden, hidden, rng);
    b = Matrix::Zero(hidden, 1);
  };
  gate(c.w_in, c.u_in, c.b_in);
  gate(c.w_forget, c.u_forget, c.b_forget);
  gate(c.w_out, c.u_out, c.b_out);
  gate(c.w_cell, c.u_cell, c.b_cell);
  return c;
}

RotarySideT<Matrix> init_rotary_side(int d, Rng& rng) {
  RotarySideT<Matrix> s;
  s.context_w = init_weight(2 * d, 2 * d, rng);
  s.context_b = Matrix::Zero(1, 1);
  s.target_w = init_weight(2 * d, 2 * d, rng);
  s.target_b = Matrix::Zero(1, 1);
  return s;
}

}  // namespace

DiscriminatorParams init_discriminator(int d, Rng& rng) {
  if (d < 1) throw InvalidArgument("embedding dimension must be >= 1");
  DiscriminatorParams p;
  p.left.fwd = init_lstm_cell(d, d, rng);
  p.left.bwd = init_lstm_cell(d, d, rng);
  p.target.fwd = init_lstm_cell(d, d, rng);
  p.target.bwd = init_lstm_cell(d, d, rng);
  p.right.fwd = init_lstm_cell(d, d, rng);
  p.right.bwd = init_lstm_cell(d, d, rng);
  p.rot_left = init_rotary_side(d, rng);
  p.rot_right = init_rotary_side(d, rng);
  p.score_ctx_w = init_weight(2 * d, 1, rng);
  p.score_ctx_b = Matrix::Zero(1, 1);
  p.score_tgt_w = init_weight(2 * d, 1, rng);
  p.score_tgt_b = Matrix::Zero(1, 1);
  p.head_w = init_weight(kClassesWithFake, 8 * d, rng);
  p.head_b = Matrix::Zero(kClassesWithFake, 1);
  return p;
}

GeneratorParams init_generator(int d, int r, Rng& rng) {
  if (d < 1 || r < 1) throw InvalidArgument("generator dims must be >= 1");
  GeneratorParams p;
  p.w1 = init_weight(2 * d, r, rng);
  p.b1 = Matrix::Zero(2 * d, 1);
  p.w2 = init_weight(6 * d, 2 * d, rng);
  p.b2 = Matrix::Zero(6 * d, 1);
  p.w3 = init_weight(8 * d, 6 * d, rng);
  p.b3 = Matrix::Zero(8 * d, 1);
  return p;
}

namespace {

template <class P, class V>
void push_params(Tape& tape, const P& params, V& vars, bool trainable) {
  std::vector<const Matrix*> values;
  params.visit("", [&](const std::string&, const Matrix& m) {
    values.push_back(&m);
  });
  std::size_t at = 0;
  vars.visit("", [&](const std::string&, Var& v) {
    v = trainable ? tape.param(*values[at]) : tape.constant(*values[at]);
    ++at;
  });
}

}  // namespace

DiscriminatorVars push_discriminator(Tape& tape, const DiscriminatorParams& p,
                                     bool trainable) {
  DiscriminatorVars vars;
  push_params(tape, p, vars, trainable);
  return vars;
}

GeneratorVars push_generator(Tape& tape, const GeneratorParams& p,
                             bool trainable) {
  GeneratorVars vars;
  push_params(tape, p, vars, trainable);
  return vars;
}

namespace {

std::vector<Var> lstm_direction(Tape& tape, const Matrix& seq,
                                const LstmCellT<Var>& p, bool reverse) {
  const Index n = seq.rows();
  const Index hidden = p.b_in.rows();
  Var h = tape.constant(Matrix::Zero(hidden, 1));
  Var c = tape.constant(Matrix::Zero(hidden, 1));
  std::vector<Var> states(static_cast<std::size_t>(n));
  for (Index step = 0; step < n; ++step) {
    const Index pos = reverse ? n - 1 - step : step;
    Var x = tape.constant(seq.row(pos).transpose());
    Var gate_i = sigmoid(add(affine(x, p.w_in, p.b_in), matmul(p.u_in, h)));
    Var gate_f = sigmoid(add(affine(x, p.w_forget, p.b_forget), matmul(p.u_forget, h)));
    Var gate_o = sigmoid(add(affine(x, p.w_out, p.b_out), matmul(p.u_out, h)));
    Var cand = tanh(add(affine(x, p.w_cell, p.b_cell), matmul(p.u_cell, h)));
    c = add(cmul(gate_f, c), cmul(gate_i, cand));
    h = cmul(gate_o, tanh(c));
    states[static_cast<std::size_t>(pos)] = h;
  }
  return states;
}

/// softmax(tanh(rows(h) . w . query + b)) pooled back over the rows of h.
Var attention_pool(Var h, Var query, Var w, Var b) {
  Var scores = tanh(add(matmul(h, matmul(w, query)), b));
  Var alpha = softmax(scores);
  return matmul_tn(h, alpha);
}

std::pair<Var, Var> pair_attention(Var a, Var b, Var w, Var bias) {
  Var score_a = tanh(add(matmul_tn(w, a), bias));
  Var score_b = tanh(add(matmul_tn(w, b), bias));
  Var alpha = softmax(concat({score_a, score_b}));
  return {scale(cmul(a, pick(alpha, 0)), 2.0),
          scale(cmul(b, pick(alpha, 1)), 2.0)};
}

}  // namespace

Var bilstm_forward(Tape& tape, const Matrix& seq, const BiLstmT<Var>& p) {
  if (seq.rows() < 1) throw ShapeError("bilstm needs at least one row");
  std::vector<Var> fwd = lstm_direction(tape, seq, p.fwd, false);
  std::vector<Var> bwd = lstm_direction(tape, seq, p.bwd, true);
  std::vector<Var> rows;
  rows.reserve(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    rows.push_back(concat({fwd[i], bwd[i]}));
  }
  return stack_rows(rows);
}

Representation rotary_hop(Tape& tape, Var h_left, Var h_target, Var h_right,
                          Var t_left, Var t_right,
                          const DiscriminatorVars& p) {
  (void)tape;
  Var ctx_l = attention_pool(h_left, t_left, p.rot_left.context_w,
                             p.rot_left.context_b);
  Var ctx_r = attention_pool(h_right, t_right, p.rot_right.context_w,
                             p.rot_right.context_b);
  Var new_t_l = attention_pool(h_target, ctx_l, p.rot_left.target_w,
                               p.rot_left.target_b);
  Var new_t_r = attention_pool(h_target, ctx_r, p.rot_right.target_w,
                               p.rot_right.target_b);
  return Representation{ctx_l, new_t_l, new_t_r, ctx_r};
}

Representation hierarchical_attention(Tape& tape, const Representation& rep,
                                      const DiscriminatorVars& p) {
  (void)tape;
  auto [ctx_l, ctx_r] =
      pair_attention(rep.left_ctx, rep.right_ctx, p.score_ctx_w, p.score_ctx_b);
  auto [tgt_l, tgt_r] =
      pair_attention(rep.target_l, rep.target_r, p.score_tgt_w, p.score_tgt_b);
  return Representation{ctx_l, tgt_l, tgt_r, ctx_r};
}

Var representation_forward(Tape& tape, const EmbeddedInstance& x,
                           const DiscriminatorVars& p, int hops) {
  if (hops < 1) throw InvalidArgument("hops must be >= 1");
  Var h_l = bilstm_forward(tape, x.left, p.left);
  Var h_t = bilstm_forward(tape, x.target, p.target);
  Var h_r = bilstm_forward(tape, x.right, p.right);
  // First-hop queries: mean pooling over the target states.
  Var t_l = mean_rows(h_t);
  Var t_r = t_l;
  Representation rep{};
  for (int hop = 0; hop < hops; ++hop) {
    rep = rotary_hop(tape, h_l, h_t, h_r, t_l, t_r, p);
    rep = hierarchical_attention(tape, rep, p);
    t_l = rep.target_l;
    t_r = rep.target_r;
  }
  return concat({rep.left_ctx, rep.target_l, rep.target_r, rep.right_ctx});
}

Var head_forward(Tape& tape, Var rep, const DiscriminatorVars& p,
                 Scalar keep_p, bool training, Rng* rng) {
  (void)tape;
  Var h = rep;
  if (training && keep_p < 1.0) {
    if (!rng) throw InvalidArgument("training dropout needs an rng");
    h = dropout(h, keep_p, *rng, true);
  }
  return softmax(affine(h, p.head_w, p.head_b));
}

Var discriminator_forward(Tape& tape, const EmbeddedInstance& x,
                          const DiscriminatorVars& p, int hops, Scalar keep_p,
                          bool training, Rng* rng) {
  Var rep = representation_forward(tape, x, p, hops);
  return head_forward(tape, rep, p, keep_p, training, rng);
}

Var generator_forward(Tape& tape, Var z, const GeneratorVars& p) {
  (void)tape;
  Var h1 = tanh(affine(z, p.w1, p.b1));
  Var h2 = tanh(affine(h1, p.w2, p.b2));
  return affine(h2, p.w3, p.b3);
}

Vector predict_probs(const EmbeddedInstance& x, const DiscriminatorParams& p,
                     int hops) {
  Tape tape;
  DiscriminatorVars vars = push_discriminator(tape, p, false);
  Var out = discriminator_forward(tape, x, vars, hops, 1.0, false, nullptr);
  return out.value();
}

Vector head_probs(const Vector& rep, const DiscriminatorParams& p) {
  Tape tape;
  DiscriminatorVars vars = push_discriminator(tape, p, false);
  Var out = head_forward(tape, tape.constant(rep), vars, 1.0, false, nullptr);
  return out.value();
}

Vector generate(const GeneratorParams& p, const Vector& z) {
  Tape tape;
  GeneratorVars vars = push_generator(tape, p, false);
  return generator_forward(tape, tape.constant(z), vars).value();
}

namespace {

constexpr const char* kCheckpointMagic = "absagan-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt) {
  out << kCheckpointMagic << " v" << kCheckpointVersion << "\n";
  out << "d " << ckpt.config.d << "\n";
  out << "r " << ckpt.config.r << "\n";
  out << "hops " << ckpt.config.hops << "\n";
  out << "classes " << kRealClasses << "\n";
  out << "seed " << ckpt.seed << "\n";

  std::size_t count = 0;
  auto count_one = [&](const std::string&, const Matrix&) { ++count; };
  ckpt.dis.visit("dis", count_one);
  ckpt.gen.visit("gen", count_one);
  out << "tensors " << count << "\n";

  out << std::setprecision(17);
  auto dump = [&](const std::string& name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j) out << ' ';
        out << m(i, j);
      }
      out << "\n";
    }
  };
  ckpt.dis.visit("dis", dump);
  ckpt.gen.visit("gen", dump);
}

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path);
  save_checkpoint(out, ckpt);
}

ModelCheckpoint load_checkpoint(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != "v1") {
    throw DataError("not a recognized checkpoint header");
  }
  auto read_kv = [&](const char* key) {
    std::string k;
    long long v;
    in >> k >> v;
    if (!in || k != key) throw DataError(std::string("checkpoint: expected ") + key);
    return v;
  };
  ModelCheckpoint ckpt;
  ckpt.config.d = static_cast<int>(read_kv("d"));
  ckpt.config.r = static_cast<int>(read_kv("r"));
  ckpt.config.hops = static_cast<int>(read_kv("hops"));
  const long long classes = read_kv("classes");
  if (classes != kRealClasses) {
    throw DataError("checkpoint has " + std::to_string(classes) +
                    " classes, expected " + std::to_string(kRealClasses));
  }
  ckpt.seed = static_cast<std::uint64_t>(read_kv("seed"));
  const long long count = read_kv("tensors");

  std::map<std::string, Matrix> tensors;
  for (long long t = 0; t < count; ++t) {
    std::string name;
    Index rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (!in || rows < 1 || cols < 1) {
      throw DataError("checkpoint: bad tensor header for '" + name + "'");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        if (!(in >> m(i, j))) {
          throw DataError("checkpoint: truncated tensor '" + name + "'");
        }
      }
    }
    if (!tensors.emplace(name, std::move(m)).second) {
      throw DataError("checkpoint: duplicate tensor '" + name + "'");
    }
  }

  // Build the skeleton for the declared dims, then fill it by name.
  Rng zero_rng(0);
  ckpt.dis = init_discriminator(ckpt.config.d, zero_rng);
  ckpt.gen = init_generator(ckpt.config.d, ckpt.config.r, zero_rng);
  std::size_t assigned = 0;
  auto fill = [&](const std::string& name, Matrix& slot) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw DataError("checkpoint: missing tensor '" + name + "'");
    }
    if (it->second.rows() != slot.rows() || it->second.cols() != slot.cols()) {
      throw DataError("checkpoint: tensor '" + name + "' is " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", expected " +
                      std::to_string(slot.rows()) + "x" +
                      std::to_string(slot.cols()));
    }
    slot = std::move(it->second);
    ++assigned;
  };
  ckpt.dis.visit("dis", fill);
  ckpt.gen.visit("gen", fill);
  if (assigned != tensors.size()) {
    throw DataError("checkpoint: unused tensors present");
  }
  return ckpt;
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace absagan
