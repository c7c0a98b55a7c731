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

#include <doctest.h>

#include <cmath>

#include "absagan/numerics.hpp"

using namespace absagan;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, Scalar lo = -1.0,
                     Scalar hi = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

Vector vec(std::initializer_list<Scalar> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (Scalar x : values) v(i++) = x;
  return v;
}

// A scalar function touching every differentiable op kind; used by the
// finite-difference property tests.
Var mixed_net(Tape& tape, const std::vector<Var>& p, const Matrix& x_val,
              Index pick_at) {
  const Var& w1 = p[0];
  const Var& b1 = p[1];
  const Var& w2 = p[2];
  const Var& b2 = p[3];
  const Var& v = p[4];

  Var x = tape.constant(x_val);
  Var h1 = tanh(affine(x, w1, b1));             // 3
  Var h2 = sigmoid(affine(h1, w2, b2));         // 4
  Var hmix = cmul(h2, v);                       // 4
  Var probs = softmax(hmix);
  Var s1 = log_clamped(pick(probs, pick_at));

  Var m = stack_rows({h2, v});                  // 2x4
  Var mr = mean_rows(m);                        // 4
  Var q = softmax(matmul(m, mr));               // 2
  Var pooled = matmul_tn(m, q);                 // 4
  Var s5 = sum(pooled);

  Var ct = concat({h1, mr});                    // 7
  Var s2 = mean_all(ct);
  Var s3 = sum_range(ct, 1, 5);
  Var s4 = l2_norm_sq(hmix);
  Var s6 = add_const(s2, 1.3);
  Var s7 = sum(add(h1, s2));                    // scalar broadcast add
  Var s8 = sum(cmul(h2, s3));                   // scalar broadcast mul

  Var loss = add(scale(s1, 1.0), scale(s2, 0.7));
  loss = add(loss, scale(s3, 0.3));
  loss = add(loss, scale(s4, 0.1));
  loss = add(loss, scale(s5, 0.2));
  loss = add(loss, scale(s6, 0.05));
  loss = add(loss, scale(s7, 0.15));
  loss = add(loss, scale(s8, 0.25));
  return loss;
}

std::vector<Matrix> mixed_net_params(Rng& rng) {
  return {random_matrix(3, 4, rng), random_matrix(3, 1, rng),
          random_matrix(4, 3, rng), random_matrix(4, 1, rng),
          random_matrix(4, 1, rng)};
}

}  // namespace

TEST_CASE("rng streams are deterministic and forkable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(42);
  Rng f1 = c.fork(1);
  c.uniform();  // advancing the parent must not move the fork base
  Rng f1_again = Rng(42).fork(1);
  CHECK(f1.next_u64() == f1_again.next_u64());
  CHECK(Rng(42).fork(1).next_u64() != Rng(42).fork(2).next_u64());

  Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    const Scalar x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(13) < 13);
  }
}

TEST_CASE("rng state serializes exactly") {
  Rng a(99);
  for (int i = 0; i < 37; ++i) a.next_u64();
  std::stringstream ss;
  a.save(ss);
  Rng b(0);
  b.load(ss);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forward op examples") {
  Tape tape;

  SUBCASE("softmax of zeros is uniform") {
    Var s = softmax(tape.constant(Matrix::Zero(4, 1)));
    for (int i = 0; i < 4; ++i) CHECK(s.value()(i, 0) == doctest::Approx(0.25));
  }

  SUBCASE("tanh fixes the origin") {
    Var t = tanh(tape.constant(Matrix::Zero(3, 1)));
    CHECK(t.value().isZero(0.0));
  }

  SUBCASE("affine with identity weight") {
    Var x = tape.constant(vec({1, 2}));
    Var w = tape.constant(Matrix::Identity(2, 2));
    Var b = tape.constant(vec({1, 1}));
    Var y = affine(x, w, b);
    CHECK(y.value()(0, 0) == doctest::Approx(2.0));
    CHECK(y.value()(1, 0) == doctest::Approx(3.0));
  }

  SUBCASE("shape mismatch is an error") {
    Var x = tape.constant(vec({1, 2, 3}));
    Var w = tape.constant(Matrix::Identity(2, 2));
    Var b = tape.constant(vec({1, 1}));
    CHECK_THROWS_AS(affine(x, w, b), ShapeError);
    CHECK_THROWS_AS(add(x, b), ShapeError);
  }

  SUBCASE("non-finite output is an error") {
    Matrix bad(1, 1);
    bad(0, 0) = std::numeric_limits<Scalar>::infinity();
    CHECK_THROWS_AS(tape.constant(bad), NonFiniteError);
  }
}

TEST_CASE("softmax outputs are probability vectors") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    const Index n = 1 + static_cast<Index>(rng.below(8));
    Var s = softmax(tape.constant(random_matrix(n, 1, rng, -30.0, 30.0)));
    Scalar total = 0;
    for (Index i = 0; i < n; ++i) {
      CHECK(s.value()(i, 0) >= 0.0);
      total += s.value()(i, 0);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("backward basics") {
  SUBCASE("sum gives ones") {
    Tape tape;
    Var x = tape.param(vec({1, 2, 3}));
    GradMap grads = tape.backward(sum(x));
    CHECK(grads[0] == Matrix::Ones(3, 1));
  }

  SUBCASE("squared norm doubles the input") {
    Tape tape;
    Var x = tape.param(vec({1, -2}));
    GradMap grads = tape.backward(l2_norm_sq(x));
    CHECK(grads[0](0, 0) == doctest::Approx(2.0));
    CHECK(grads[0](1, 0) == doctest::Approx(-4.0));
  }

  SUBCASE("parameters off the loss path get zero gradients") {
    Tape tape;
    Var x = tape.param(vec({1, 2}));
    Var unused = tape.param(vec({5, 6, 7}));
    (void)unused;
    GradMap grads = tape.backward(sum(x));
    CHECK(grads[1] == Matrix::Zero(3, 1));
  }

  SUBCASE("a tape backwards only once") {
    Tape tape;
    Var x = tape.param(vec({1}));
    Var loss = sum(x);
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), InvalidArgument);
  }

  SUBCASE("loss must be scalar") {
    Tape tape;
    Var x = tape.param(vec({1, 2}));
    CHECK_THROWS_AS(tape.backward(x), ShapeError);
  }
}

TEST_CASE("grad_check on a fixed quadratic form") {
  Rng rng(11);
  const Matrix a = random_matrix(5, 5, rng);
  ScalarFn quadratic = [&](Tape& tape, const std::vector<Var>& p) {
    Var ax = matmul(tape.constant(a), p[0]);
    return matmul_tn(p[0], ax);
  };
  const Scalar err = grad_check(quadratic, {random_matrix(5, 1, rng)}, 1e-5);
  CHECK(err < 1e-7);
}

TEST_CASE("backward matches central finite differences on random nets") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Matrix x = random_matrix(4, 1, rng);
    const Index pick_at = static_cast<Index>(rng.below(4));
    ScalarFn f = [&](Tape& tape, const std::vector<Var>& p) {
      return mixed_net(tape, p, x, pick_at);
    };
    const Scalar err = grad_check(f, mixed_net_params(rng), 1e-5);
    INFO("seed ", seed);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("tape evaluation is bit-reproducible under a fixed seed") {
  auto run = [] {
    Rng rng(123);
    Tape tape;
    Var x = tape.constant(random_matrix(6, 1, rng));
    Var d = dropout(x, 0.5, rng, true);
    Var s = softmax(d);
    return std::pair<Matrix, Matrix>(d.value(), s.value());
  };
  auto [d1, s1] = run();
  auto [d2, s2] = run();
  CHECK(d1 == d2);
  CHECK(s1 == s2);
}

TEST_CASE("dropout") {
  Rng rng(5);
  const Matrix x = random_matrix(64, 1, rng, 1.0, 2.0);

  SUBCASE("keep_p = 1 is the identity") {
    Tape tape;
    Var v = dropout(tape.constant(x), 1.0, rng, true);
    CHECK(v.value() == x);
  }

  SUBCASE("inference is the identity") {
    Tape tape;
    Var v = dropout(tape.constant(x), 0.3, rng, false);
    CHECK(v.value() == x);
  }

  SUBCASE("keep_p out of range") {
    Tape tape;
    Var v = tape.constant(x);
    CHECK_THROWS_AS(dropout(v, 0.0, rng, true), InvalidArgument);
    CHECK_THROWS_AS(dropout(v, 1.5, rng, true), InvalidArgument);
  }

  SUBCASE("inverted scaling preserves expectations") {
    // Monte-Carlo mean of each component over many seeds.
    Matrix mean = Matrix::Zero(x.rows(), 1);
    const int kSeeds = 10000;
    for (int s = 0; s < kSeeds; ++s) {
      Rng seed_rng(static_cast<std::uint64_t>(s) + 1000);
      Tape tape;
      mean += dropout(tape.constant(x), 0.3, seed_rng, true).value();
    }
    mean /= static_cast<Scalar>(kSeeds);
    for (Index i = 0; i < x.rows(); ++i) {
      CHECK(std::abs(mean(i, 0) - x(i, 0)) / x(i, 0) < 0.05);
    }
  }

  SUBCASE("gradient flows through the kept mask") {
    Rng mask_rng(17);
    Tape tape;
    Var p = tape.param(x);
    Var d = dropout(p, 0.5, mask_rng, true);
    GradMap grads = tape.backward(sum(d));
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar g = grads[0](i, 0);
      CHECK((g == 0.0 || g == doctest::Approx(2.0)));
    }
  }
}

TEST_CASE("momentum optimizer") {
  SUBCASE("zero momentum is plain sgd") {
    Matrix theta = vec({0});
    std::vector<Matrix> vel{Matrix::Zero(1, 1)};
    GradMap grads{vec({1})};
    std::vector<Matrix*> params{&theta};
    sgd_momentum_step(params, grads, 0.1, 0.0, vel);
    CHECK(theta(0, 0) == doctest::Approx(-0.1));
  }

  SUBCASE("zero gradient and zero velocity leave parameters fixed") {
    Matrix theta = vec({3, -2});
    std::vector<Matrix> vel{Matrix::Zero(2, 1)};
    GradMap grads{Matrix::Zero(2, 1)};
    std::vector<Matrix*> params{&theta};
    sgd_momentum_step(params, grads, 0.5, 0.9, vel);
    CHECK(theta == vec({3, -2}));
  }

  SUBCASE("two steps of the classical recurrence") {
    // v1 = -0.1, theta1 = -0.1; v2 = 0.9*(-0.1) - 0.1 = -0.19, theta2 = -0.29.
    Matrix theta = vec({0});
    std::vector<Matrix> vel{Matrix::Zero(1, 1)};
    GradMap grads{vec({1})};
    std::vector<Matrix*> params{&theta};
    sgd_momentum_step(params, grads, 0.1, 0.9, vel);
    sgd_momentum_step(params, grads, 0.1, 0.9, vel);
    CHECK(theta(0, 0) == doctest::Approx(-0.29));
  }

  SUBCASE("misaligned shapes are an error") {
    Matrix theta = vec({0});
    std::vector<Matrix> vel{Matrix::Zero(2, 1)};
    GradMap grads{vec({1})};
    std::vector<Matrix*> params{&theta};
    CHECK_THROWS_AS(sgd_momentum_step(params, grads, 0.1, 0.9, vel),
                    ShapeError);
  }
}
