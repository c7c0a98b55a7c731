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

#include "absagan/numerics.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace absagan {

namespace {

std::string dim_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const char* what, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(what) + ": " + detail);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

std::uint64_t hash_str(std::uint64_t h, std::string_view s) {
  // FNV-1a folded into the running hash.
  std::uint64_t fnv = 1469598103934665603ULL;
  for (unsigned char c : s) {
    fnv ^= c;
    fnv *= 1099511628211ULL;
  }
  return hash_mix(h, fnv);
}

Scalar Rng::normal() {
  const Scalar u1 = uniform();
  const Scalar u2 = uniform();
  return std::sqrt(-2.0 * std::log1p(-u1)) *
         std::cos(2.0 * M_PI * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::below(0)");
  const std::uint64_t reject = (0 - static_cast<std::uint64_t>(n)) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= reject) return static_cast<std::size_t>(r % n);
  }
}

void Rng::save(std::ostream& os) const {
  os << seed_ << ' ' << engine_;
}

void Rng::load(std::istream& is) {
  is >> seed_ >> engine_;
  if (!is) throw DataError("malformed rng state");
}

Var Tape::constant(Matrix v) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(v);
  return push(std::move(n), "constant");
}

Var Tape::param(const Matrix& v) {
  Node n;
  n.kind = OpKind::kParam;
  n.value = v;
  Var var = push(std::move(n), "param");
  params_.push_back(var.id);
  return var;
}

Var Tape::push(Node node, const char* what) {
  if (!node.value.allFinite()) {
    throw NonFiniteError(std::string(what) + " produced NaN/Inf");
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

namespace {

Tape* same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw InvalidArgument("operands from different tapes");
  return a.tape;
}

}  // namespace

Var add(Var a, Var b) {
  Tape* t = same_tape(a, b);
  // Normalize the scalar operand to the second slot.
  if (a.is_scalar() && !b.is_scalar()) std::swap(a, b);
  Tape::Node n;
  n.kind = OpKind::kAdd;
  n.inputs = {a.id, b.id};
  if (b.is_scalar() && !a.is_scalar()) {
    n.value = (a.value().array() + b.value()(0, 0)).matrix();
  } else {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
            dim_str(a.value()) + " vs " + dim_str(b.value()));
    n.value = a.value() + b.value();
  }
  return t->push(std::move(n), "add");
}

Var cmul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  if (a.is_scalar() && !b.is_scalar()) std::swap(a, b);
  Tape::Node n;
  n.kind = OpKind::kCMul;
  n.inputs = {a.id, b.id};
  if (b.is_scalar() && !a.is_scalar()) {
    n.value = a.value() * b.value()(0, 0);
  } else {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "cmul",
            dim_str(a.value()) + " vs " + dim_str(b.value()));
    n.value = a.value().cwiseProduct(b.value());
  }
  return t->push(std::move(n), "cmul");
}

Var scale(Var a, Scalar c) {
  Tape::Node n;
  n.kind = OpKind::kScale;
  n.inputs = {a.id};
  n.c = c;
  n.value = a.value() * c;
  return a.tape->push(std::move(n), "scale");
}

Var add_const(Var a, Scalar c) {
  Tape::Node n;
  n.kind = OpKind::kAddConst;
  n.inputs = {a.id};
  n.c = c;
  n.value = (a.value().array() + c).matrix();
  return a.tape->push(std::move(n), "add_const");
}

Var matmul(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require(a.cols() == b.rows(), "matmul",
          dim_str(a.value()) + " * " + dim_str(b.value()));
  Tape::Node n;
  n.kind = OpKind::kMatMul;
  n.inputs = {a.id, b.id};
  n.value = a.value() * b.value();
  return t->push(std::move(n), "matmul");
}

Var matmul_tn(Var a, Var b) {
  Tape* t = same_tape(a, b);
  require(a.rows() == b.rows(), "matmul_tn",
          dim_str(a.value()) + "^T * " + dim_str(b.value()));
  Tape::Node n;
  n.kind = OpKind::kMatMulTN;
  n.inputs = {a.id, b.id};
  n.value = a.value().transpose() * b.value();
  return t->push(std::move(n), "matmul_tn");
}

Var affine(Var x, Var w, Var b) {
  Tape* t = same_tape(x, w);
  same_tape(x, b);
  require(x.is_vector() && b.is_vector() && w.cols() == x.rows() &&
              w.rows() == b.rows(),
          "affine",
          dim_str(w.value()) + " * " + dim_str(x.value()) + " + " +
              dim_str(b.value()));
  Tape::Node n;
  n.kind = OpKind::kAffine;
  n.inputs = {x.id, w.id, b.id};
  n.value = w.value() * x.value() + b.value();
  return t->push(std::move(n), "affine");
}

Var tanh(Var a) {
  Tape::Node n;
  n.kind = OpKind::kTanh;
  n.inputs = {a.id};
  n.value = a.value().array().tanh().matrix();
  return a.tape->push(std::move(n), "tanh");
}

Var sigmoid(Var a) {
  Tape::Node n;
  n.kind = OpKind::kSigmoid;
  n.inputs = {a.id};
  n.value = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->push(std::move(n), "sigmoid");
}

Var softmax(Var a) {
  require(a.is_vector() && a.rows() >= 1, "softmax", dim_str(a.value()));
  Tape::Node n;
  n.kind = OpKind::kSoftmax;
  n.inputs = {a.id};
  const Eigen::ArrayXXd shifted =
      (a.value().array() - a.value().maxCoeff()).exp();
  n.value = (shifted / shifted.sum()).matrix();
  return a.tape->push(std::move(n), "softmax");
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat of nothing");
  Tape* t = parts[0].tape;
  Index total = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require(p.is_vector(), "concat", dim_str(p.value()));
    total += p.rows();
  }
  Tape::Node n;
  n.kind = OpKind::kConcat;
  n.value.resize(total, 1);
  Index at = 0;
  for (const Var& p : parts) {
    n.inputs.push_back(p.id);
    n.value.block(at, 0, p.rows(), 1) = p.value();
    at += p.rows();
  }
  return t->push(std::move(n), "concat");
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows of nothing");
  Tape* t = rows[0].tape;
  const Index k = rows[0].rows();
  for (const Var& r : rows) {
    same_tape(rows[0], r);
    require(r.is_vector() && r.rows() == k, "stack_rows", dim_str(r.value()));
  }
  Tape::Node n;
  n.kind = OpKind::kStackRows;
  n.value.resize(static_cast<Index>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    n.inputs.push_back(rows[i].id);
    n.value.row(static_cast<Index>(i)) = rows[i].value().transpose();
  }
  return t->push(std::move(n), "stack_rows");
}

Var stack_rows(std::initializer_list<Var> rows) {
  return stack_rows(std::span<const Var>(rows.begin(), rows.size()));
}

Var mean_rows(Var a) {
  Tape::Node n;
  n.kind = OpKind::kMeanRows;
  n.inputs = {a.id};
  n.value = a.value().colwise().mean().transpose();
  return a.tape->push(std::move(n), "mean_rows");
}

Var sum(Var a) {
  Tape::Node n;
  n.kind = OpKind::kSum;
  n.inputs = {a.id};
  n.value = Matrix::Constant(1, 1, a.value().sum());
  return a.tape->push(std::move(n), "sum");
}

Var mean_all(Var a) {
  Tape::Node n;
  n.kind = OpKind::kMeanAll;
  n.inputs = {a.id};
  n.value = Matrix::Constant(1, 1, a.value().mean());
  return a.tape->push(std::move(n), "mean_all");
}

Var l2_norm_sq(Var a) {
  Tape::Node n;
  n.kind = OpKind::kL2NormSq;
  n.inputs = {a.id};
  n.value = Matrix::Constant(1, 1, a.value().squaredNorm());
  return a.tape->push(std::move(n), "l2_norm_sq");
}

Var pick(Var a, Index i) {
  require(a.is_vector() && i >= 0 && i < a.rows(), "pick",
          dim_str(a.value()) + " at " + std::to_string(i));
  Tape::Node n;
  n.kind = OpKind::kPick;
  n.inputs = {a.id};
  n.i0 = i;
  n.value = Matrix::Constant(1, 1, a.value()(i, 0));
  return a.tape->push(std::move(n), "pick");
}

Var sum_range(Var a, Index begin, Index end) {
  require(a.is_vector() && begin >= 0 && begin < end && end <= a.rows(),
          "sum_range", dim_str(a.value()));
  Tape::Node n;
  n.kind = OpKind::kSumRange;
  n.inputs = {a.id};
  n.i0 = begin;
  n.i1 = end;
  n.value = Matrix::Constant(1, 1, a.value().block(begin, 0, end - begin, 1).sum());
  return a.tape->push(std::move(n), "sum_range");
}

Var log_clamped(Var a) {
  Tape::Node n;
  n.kind = OpKind::kLogClamped;
  n.inputs = {a.id};
  n.value = a.value().array().max(kProbClamp).log().matrix();
  a.tape->clamp_events_ += (a.value().array() < kProbClamp).count();
  return a.tape->push(std::move(n), "log_clamped");
}

Var dropout(Var x, Scalar keep_p, Rng& rng, bool training) {
  if (!(keep_p > 0.0 && keep_p <= 1.0)) {
    throw InvalidArgument("keep_p must be in (0,1], got " +
                          std::to_string(keep_p));
  }
  if (!training || keep_p == 1.0) return x;  // identity, nothing recorded
  Tape::Node n;
  n.kind = OpKind::kDropout;
  n.inputs = {x.id};
  n.aux.resize(x.rows(), x.cols());
  for (Index i = 0; i < n.aux.rows(); ++i) {
    for (Index j = 0; j < n.aux.cols(); ++j) {
      n.aux(i, j) = rng.bernoulli(keep_p) ? 1.0 / keep_p : 0.0;
    }
  }
  n.value = x.value().cwiseProduct(n.aux);
  return x.tape->push(std::move(n), "dropout");
}

GradMap Tape::backward(const Var& loss) {
  if (consumed_) throw InvalidArgument("tape already consumed");
  if (loss.tape != this) throw InvalidArgument("loss from a different tape");
  if (!(loss.rows() == 1 && loss.cols() == 1)) {
    throw ShapeError("backward needs a scalar loss, got " +
                     dim_str(loss.value()));
  }
  consumed_ = true;

  // Adjoint buffers, allocated on first touch; empty means "not reached".
  std::vector<Matrix> grads(nodes_.size());
  auto acc = [&](int id) -> Matrix& {
    Matrix& g = grads[id];
    if (g.size() == 0) g = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    return g;
  };
  acc(loss.id)(0, 0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    if (grads[id].size() == 0) continue;  // not an ancestor of the loss
    const Node& n = nodes_[id];
    const Matrix& g = grads[id];
    switch (n.kind) {
      case OpKind::kConstant:
      case OpKind::kParam:
        break;
      case OpKind::kAdd: {
        const Node& b = nodes_[n.inputs[1]];
        acc(n.inputs[0]) += g;
        if (b.value.size() == 1 && g.size() != 1) {
          acc(n.inputs[1])(0, 0) += g.sum();
        } else {
          acc(n.inputs[1]) += g;
        }
        break;
      }
      case OpKind::kCMul: {
        const Node& a = nodes_[n.inputs[0]];
        const Node& b = nodes_[n.inputs[1]];
        if (b.value.size() == 1 && a.value.size() != 1) {
          acc(n.inputs[0]) += g * b.value(0, 0);
          acc(n.inputs[1])(0, 0) += g.cwiseProduct(a.value).sum();
        } else {
          acc(n.inputs[0]) += g.cwiseProduct(b.value);
          acc(n.inputs[1]) += g.cwiseProduct(a.value);
        }
        break;
      }
      case OpKind::kScale:
        acc(n.inputs[0]) += g * n.c;
        break;
      case OpKind::kAddConst:
        acc(n.inputs[0]) += g;
        break;
      case OpKind::kMatMul: {
        const Node& a = nodes_[n.inputs[0]];
        const Node& b = nodes_[n.inputs[1]];
        acc(n.inputs[0]) += g * b.value.transpose();
        acc(n.inputs[1]) += a.value.transpose() * g;
        break;
      }
      case OpKind::kMatMulTN: {
        const Node& a = nodes_[n.inputs[0]];
        const Node& b = nodes_[n.inputs[1]];
        acc(n.inputs[0]) += b.value * g.transpose();
        acc(n.inputs[1]) += a.value * g;
        break;
      }
      case OpKind::kAffine: {
        const Node& x = nodes_[n.inputs[0]];
        const Node& w = nodes_[n.inputs[1]];
        acc(n.inputs[0]) += w.value.transpose() * g;
        acc(n.inputs[1]) += g * x.value.transpose();
        acc(n.inputs[2]) += g;
        break;
      }
      case OpKind::kTanh:
        acc(n.inputs[0]).array() += g.array() * (1.0 - n.value.array().square());
        break;
      case OpKind::kSigmoid:
        acc(n.inputs[0]).array() +=
            g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case OpKind::kSoftmax: {
        const Scalar dot = (g.array() * n.value.array()).sum();
        acc(n.inputs[0]).array() += n.value.array() * (g.array() - dot);
        break;
      }
      case OpKind::kConcat: {
        Index at = 0;
        for (int in : n.inputs) {
          const Index len = nodes_[in].value.rows();
          acc(in) += g.block(at, 0, len, 1);
          at += len;
        }
        break;
      }
      case OpKind::kStackRows: {
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          acc(n.inputs[i]) += g.row(static_cast<Index>(i)).transpose();
        }
        break;
      }
      case OpKind::kMeanRows: {
        const Node& a = nodes_[n.inputs[0]];
        const Scalar inv = 1.0 / static_cast<Scalar>(a.value.rows());
        acc(n.inputs[0]) += inv * (Vector::Ones(a.value.rows()) * g.transpose());
        break;
      }
      case OpKind::kSum:
        acc(n.inputs[0]).array() += g(0, 0);
        break;
      case OpKind::kMeanAll: {
        const Node& a = nodes_[n.inputs[0]];
        acc(n.inputs[0]).array() += g(0, 0) / static_cast<Scalar>(a.value.size());
        break;
      }
      case OpKind::kL2NormSq:
        acc(n.inputs[0]) += 2.0 * g(0, 0) * nodes_[n.inputs[0]].value;
        break;
      case OpKind::kPick:
        acc(n.inputs[0])(n.i0, 0) += g(0, 0);
        break;
      case OpKind::kSumRange:
        acc(n.inputs[0]).block(n.i0, 0, n.i1 - n.i0, 1).array() += g(0, 0);
        break;
      case OpKind::kLogClamped: {
        const Matrix& x = nodes_[n.inputs[0]].value;
        // Zero slope inside the clamped region.
        acc(n.inputs[0]).array() +=
            (x.array() > kProbClamp).select(g.array() / x.array(), 0.0);
        break;
      }
      case OpKind::kDropout:
        acc(n.inputs[0]) += g.cwiseProduct(n.aux);
        break;
    }
  }

  GradMap out(params_.size());
  for (std::size_t slot = 0; slot < params_.size(); ++slot) {
    const int id = params_[slot];
    if (grads[id].size() != 0) {
      out[slot] = std::move(grads[id]);
    } else {
      out[slot] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
    if (!out[slot].allFinite()) {
      throw NonFiniteError("gradient for parameter slot " +
                           std::to_string(slot));
    }
  }
  return out;
}

Scalar grad_check(const ScalarFn& f, std::vector<Matrix> params, Scalar eps) {
  GradMap analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Matrix& p : params) vars.push_back(tape.param(p));
    Var loss = f(tape, vars);
    analytic = tape.backward(loss);
  }

  auto eval = [&]() {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Matrix& p : params) vars.push_back(tape.param(p));
    return f(tape, vars).value()(0, 0);
  };

  Scalar worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& m = params[p];
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        const Scalar saved = m(i, j);
        m(i, j) = saved + eps;
        const Scalar up = eval();
        m(i, j) = saved - eps;
        const Scalar down = eval();
        m(i, j) = saved;
        const Scalar numeric = (up - down) / (2.0 * eps);
        if (!std::isfinite(numeric)) {
          throw NonFiniteError("finite difference at parameter " +
                               std::to_string(p));
        }
        const Scalar rel = std::abs(analytic[p](i, j) - numeric) /
                           std::max(1.0, std::abs(numeric));
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

void sgd_momentum_step(std::span<Matrix* const> params, const GradMap& grads,
                       Scalar lr, Scalar mom, std::vector<Matrix>& velocity) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("optimizer spans disagree: " +
                     std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(velocity.size()) + " velocities");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i];
    const Matrix& g = grads[i];
    Matrix& v = velocity[i];
    if (theta.rows() != g.rows() || theta.cols() != g.cols() ||
        theta.rows() != v.rows() || theta.cols() != v.cols()) {
      throw ShapeError("optimizer slot " + std::to_string(i) +
                       " misaligned: " + dim_str(theta) + " / " + dim_str(g) +
                       " / " + dim_str(v));
    }
    v = mom * v - lr * g;
    theta += v;
  }
}

}  // namespace absagan
