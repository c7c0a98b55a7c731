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

// Dense-tensor substrate: Eigen matrices, a reverse-mode tape, a seeded
// RNG with derivable substreams, and the classical-momentum optimizer.

#ifndef ABSAGAN_NUMERICS_HPP_
#define ABSAGAN_NUMERICS_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "absagan/errors.hpp"

namespace absagan {

// 64-bit floats throughout; gradient checks need the headroom.
using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// Probabilities are clamped to this floor before logs. A clamp firing is
// near-divergence; tapes count the events for diagnostics.
inline constexpr Scalar kProbClamp = 1e-12;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_str(std::uint64_t h, std::string_view s);

/// Deterministic random stream. Identical seed gives an identical stream;
/// fork(id) derives an independent substream from the construction seed,
/// so fork order does not depend on how many values were drawn.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0,1) with 53 random bits.
  Scalar uniform() {
    return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53;
  }
  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; stateless across calls.
  Scalar normal();

  bool bernoulli(Scalar p) { return uniform() < p; }

  /// Unbiased integer in [0,n).
  std::size_t below(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  Rng fork(std::uint64_t stream) const { return Rng(hash_mix(seed_, stream)); }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  bool is_vector() const { return cols() == 1; }
};

using GradMap = std::vector<Matrix>;

enum class OpKind : std::uint8_t {
  kConstant,
  kParam,
  kAdd,        // same shape, or scalar broadcast on the second input
  kCMul,       // elementwise, or scalar broadcast on the second input
  kScale,      // x * c
  kAddConst,   // x + c
  kMatMul,     // A * B
  kMatMulTN,   // A^T * B
  kAffine,     // W * x + b
  kTanh,
  kSigmoid,
  kSoftmax,    // column vector -> probability vector
  kConcat,     // column vectors stacked
  kStackRows,  // N column vectors (k x 1) -> N x k matrix
  kMeanRows,   // N x k -> k x 1 column means
  kSum,        // sum of all entries -> 1 x 1
  kMeanAll,    // mean of all entries -> 1 x 1
  kL2NormSq,   // sum of squares -> 1 x 1
  kPick,       // vector component -> 1 x 1
  kSumRange,   // sum of vector slice [begin,end) -> 1 x 1
  kLogClamped, // elementwise log(max(x, kProbClamp))
  kDropout,    // inverted dropout with a recorded mask
};

/// Ordered record of executed operations. Each forward op appends a node;
/// backward() replays adjoints in strict reverse order, once per tape.
/// A tape is confined to one logical thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records an input the loss is not differentiated against.
  Var constant(Matrix v);

  /// Records a trainable leaf. Gradient slots are assigned by registration
  /// order; backward() returns them in the same order.
  Var param(const Matrix& v);

  int param_count() const { return static_cast<int>(params_.size()); }
  std::size_t size() const { return nodes_.size(); }

  /// Number of log-clamp activations recorded so far (near-divergence).
  long clamp_events() const { return clamp_events_; }

  /// Adjoint of `loss` (a scalar on this tape) for every registered
  /// parameter; parameters off the path get zero gradients. Consumes the
  /// tape: a second call is an error.
  GradMap backward(const Var& loss);

 private:
  struct Node {
    OpKind kind;
    std::vector<int> inputs;
    Matrix value;
    Index i0 = 0, i1 = 0;  // pick index / slice bounds
    Scalar c = 0;          // scale factor or added constant
    Matrix aux;            // dropout mask
  };

  Var push(Node node, const char* what);
  const Node& node(int id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  std::vector<int> params_;  // node id per registration slot
  long clamp_events_ = 0;
  bool consumed_ = false;

  friend struct Var;
  friend Var add(Var a, Var b);
  friend Var cmul(Var a, Var b);
  friend Var scale(Var a, Scalar c);
  friend Var add_const(Var a, Scalar c);
  friend Var matmul(Var a, Var b);
  friend Var matmul_tn(Var a, Var b);
  friend Var affine(Var x, Var w, Var b);
  friend Var tanh(Var a);
  friend Var sigmoid(Var a);
  friend Var softmax(Var a);
  friend Var concat(std::span<const Var> parts);
  friend Var stack_rows(std::span<const Var> rows);
  friend Var mean_rows(Var a);
  friend Var sum(Var a);
  friend Var mean_all(Var a);
  friend Var l2_norm_sq(Var a);
  friend Var pick(Var a, Index i);
  friend Var sum_range(Var a, Index begin, Index end);
  friend Var log_clamped(Var a);
  friend Var dropout(Var x, Scalar keep_p, Rng& rng, bool training);
};

Var add(Var a, Var b);
Var cmul(Var a, Var b);
Var scale(Var a, Scalar c);
Var add_const(Var a, Scalar c);
Var matmul(Var a, Var b);
Var matmul_tn(Var a, Var b);
Var affine(Var x, Var w, Var b);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax(Var a);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var stack_rows(std::span<const Var> rows);
Var stack_rows(std::initializer_list<Var> rows);
Var mean_rows(Var a);
Var sum(Var a);
Var mean_all(Var a);
Var l2_norm_sq(Var a);
Var pick(Var a, Index i);
Var sum_range(Var a, Index begin, Index end);
Var log_clamped(Var a);

/// Inverted dropout: keeps a component with probability keep_p and scales
/// it by 1/keep_p, so inference (training=false) is the identity.
Var dropout(Var x, Scalar keep_p, Rng& rng, bool training);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(Var a, Scalar c) { return scale(a, c); }
inline Var operator*(Scalar c, Var a) { return scale(a, c); }

/// Builds a scalar loss from one Var per parameter matrix.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Max over all parameter components of |analytic - numeric| / max(1, |numeric|),
/// where numeric is a central difference with step eps. The callable must be
/// deterministic given the parameters (dropout disabled).
Scalar grad_check(const ScalarFn& f, std::vector<Matrix> params,
                  Scalar eps = 1e-5);

/// Classical momentum: v <- mom*v - lr*g; theta <- theta + v. Ascent callers
/// negate the gradient first.
void sgd_momentum_step(std::span<Matrix* const> params, const GradMap& grads,
                       Scalar lr, Scalar mom, std::vector<Matrix>& velocity);

inline const Matrix& Var::value() const { return tape->nodes_[id].value; }

}  // namespace absagan

#endif  // ABSAGAN_NUMERICS_HPP_
