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

// The classifier/discriminator network: three bi-LSTM encoders, a two-step
// rotary attention refined over hops with a hierarchical reweighting, and a
// 4-way softmax head that doubles as the adversarial discriminator. The
// generator is an MLP producing fake 8d representation vectors.

#ifndef ABSAGAN_NETWORK_HPP_
#define ABSAGAN_NETWORK_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "absagan/corpus.hpp"
#include "absagan/numerics.hpp"

namespace absagan {

inline constexpr int kRealClasses = 3;      // Negative / Neutral / Positive
inline constexpr int kClassesWithFake = 4;  // + Fake
inline constexpr int kFakeClass = 3;        // 0-based index of Fake

struct NetworkConfig {
  int d = 768;   // embedding dimension; bi-LSTM hidden size is d per direction
  int r = 100;   // generator noise dimension
  int hops = 3;  // rotary + hierarchical repetitions
};

// Parameter containers are templated on the slot type so the same layout
// serves Matrix storage and tape Vars. visit() fixes the flattening order
// used for gradients, the optimizer, and checkpoints.

template <class T>
struct LstmCellT {
  T w_in, u_in, b_in;          // input gate
  T w_forget, u_forget, b_forget;
  T w_out, u_out, b_out;       // output gate
  T w_cell, u_cell, b_cell;    // candidate

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".w_in", self.w_in);
    f(prefix + ".u_in", self.u_in);
    f(prefix + ".b_in", self.b_in);
    f(prefix + ".w_forget", self.w_forget);
    f(prefix + ".u_forget", self.u_forget);
    f(prefix + ".b_forget", self.b_forget);
    f(prefix + ".w_out", self.w_out);
    f(prefix + ".u_out", self.u_out);
    f(prefix + ".b_out", self.b_out);
    f(prefix + ".w_cell", self.w_cell);
    f(prefix + ".u_cell", self.u_cell);
    f(prefix + ".b_cell", self.b_cell);
  }
  template <class F>
  void visit(const std::string& p, F&& f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string& p, F&& f) const { visit_impl(*this, p, f); }
};

template <class T>
struct BiLstmT {
  LstmCellT<T> fwd, bwd;

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    self.fwd.visit(prefix + ".fwd", f);
    self.bwd.visit(prefix + ".bwd", f);
  }
  template <class F>
  void visit(const std::string& p, F&& f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string& p, F&& f) const { visit_impl(*this, p, f); }
};

/// Bilinear attention forms for one side: target2context then context2target.
template <class T>
struct RotarySideT {
  T context_w, context_b;  // scores context rows against the target query
  T target_w, target_b;    // scores target rows against the pooled context

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".context_w", self.context_w);
    f(prefix + ".context_b", self.context_b);
    f(prefix + ".target_w", self.target_w);
    f(prefix + ".target_b", self.target_b);
  }
  template <class F>
  void visit(const std::string& p, F&& f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string& p, F&& f) const { visit_impl(*this, p, f); }
};

template <class T>
struct DiscriminatorT {
  BiLstmT<T> left, target, right;
  RotarySideT<T> rot_left, rot_right;
  T score_ctx_w, score_ctx_b;  // hierarchical scoring, context pair
  T score_tgt_w, score_tgt_b;  // hierarchical scoring, target pair
  T head_w, head_b;            // (K+1)-way output head

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    self.left.visit(prefix + ".lstm_left", f);
    self.target.visit(prefix + ".lstm_target", f);
    self.right.visit(prefix + ".lstm_right", f);
    self.rot_left.visit(prefix + ".rot_left", f);
    self.rot_right.visit(prefix + ".rot_right", f);
    f(prefix + ".score_ctx_w", self.score_ctx_w);
    f(prefix + ".score_ctx_b", self.score_ctx_b);
    f(prefix + ".score_tgt_w", self.score_tgt_w);
    f(prefix + ".score_tgt_b", self.score_tgt_b);
    f(prefix + ".head_w", self.head_w);
    f(prefix + ".head_b", self.head_b);
  }
  template <class F>
  void visit(const std::string& p, F&& f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string& p, F&& f) const { visit_impl(*this, p, f); }
};

/// Noise r -> 2d -> 6d -> 8d, tanh on the hidden layers, linear output.
template <class T>
struct GeneratorT {
  T w1, b1, w2, b2, w3, b3;

  template <class Self, class F>
  static void visit_impl(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".w1", self.w1);
    f(prefix + ".b1", self.b1);
    f(prefix + ".w2", self.w2);
    f(prefix + ".b2", self.b2);
    f(prefix + ".w3", self.w3);
    f(prefix + ".b3", self.b3);
  }
  template <class F>
  void visit(const std::string& p, F&& f) { visit_impl(*this, p, f); }
  template <class F>
  void visit(const std::string& p, F&& f) const { visit_impl(*this, p, f); }
};

using DiscriminatorParams = DiscriminatorT<Matrix>;
using GeneratorParams = GeneratorT<Matrix>;
using DiscriminatorVars = DiscriminatorT<Var>;
using GeneratorVars = GeneratorT<Var>;

/// Weights ~ U(-0.01, 0.01), biases zero.
DiscriminatorParams init_discriminator(int d, Rng& rng);
GeneratorParams init_generator(int d, int r, Rng& rng);

template <class P>
std::vector<Matrix*> collect(P& params) {
  std::vector<Matrix*> out;
  params.visit("", [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}
template <class P>
std::vector<const Matrix*> collect(const P& params) {
  std::vector<const Matrix*> out;
  params.visit("", [&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

template <class P>
Scalar squared_norm(const P& params) {
  Scalar s = 0;
  params.visit("", [&](const std::string&, const Matrix& m) { s += m.squaredNorm(); });
  return s;
}

/// Records the parameters on a tape, as trainable leaves or frozen constants.
DiscriminatorVars push_discriminator(Tape& tape, const DiscriminatorParams& p,
                                     bool trainable);
GeneratorVars push_generator(Tape& tape, const GeneratorParams& p,
                             bool trainable);

/// Standard LSTM over the rows of seq, run both directions; row i of the
/// result is [forward state at i, backward state at i].
Var bilstm_forward(Tape& tape, const Matrix& seq, const BiLstmT<Var>& p);

/// The four representation blocks, each of length 2d, in the fixed order
/// used for the 8d concatenation (and for interpreting generator output).
struct Representation {
  Var left_ctx, target_l, target_r, right_ctx;
};

/// One two-step rotary pass: pool each context against its target query,
/// then re-pool the target against each pooled context.
Representation rotary_hop(Tape& tape, Var h_left, Var h_target, Var h_right,
                          Var t_left, Var t_right, const DiscriminatorVars& p);

/// Reweights the four blocks, contexts and targets scored as separate pairs;
/// the factor 2 makes uniform attention the identity.
Representation hierarchical_attention(Tape& tape, const Representation& rep,
                                      const DiscriminatorVars& p);

/// bi-LSTMs once, then hops x (rotary_hop + hierarchical_attention) with the
/// reweighted targets feeding the next hop's queries; returns the 8d vector.
Var representation_forward(Tape& tape, const EmbeddedInstance& x,
                           const DiscriminatorVars& p, int hops);

/// Dropout (training only) + affine head + softmax over the 4 classes.
/// This is the shared path for real representations and generated ones.
Var head_forward(Tape& tape, Var rep, const DiscriminatorVars& p,
                 Scalar keep_p, bool training, Rng* rng);

Var discriminator_forward(Tape& tape, const EmbeddedInstance& x,
                          const DiscriminatorVars& p, int hops, Scalar keep_p,
                          bool training, Rng* rng);

Var generator_forward(Tape& tape, Var z, const GeneratorVars& p);

/// Inference conveniences on fresh private tapes, dropout off.
Vector predict_probs(const EmbeddedInstance& x, const DiscriminatorParams& p,
                     int hops);
Vector head_probs(const Vector& rep, const DiscriminatorParams& p);
Vector generate(const GeneratorParams& p, const Vector& z);

struct ModelCheckpoint {
  NetworkConfig config;
  std::uint64_t seed = 0;
  DiscriminatorParams dis;
  GeneratorParams gen;
};

/// Versioned text container with named tensors and a config echo; loading
/// rejects unknown names, missing tensors, and dimension mismatches.
void save_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt);
void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(std::istream& in);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace absagan

#endif  // ABSAGAN_NETWORK_HPP_
