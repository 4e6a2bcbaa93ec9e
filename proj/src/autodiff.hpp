// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over row-per-position matrices. A Tape lives
// for one forward/backward pass; parameter leaves read from and accumulate
// into caller-owned storage.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "text.hpp"

namespace genret::ad {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

struct Var {
  std::int32_t id = -1;
};

// Forward helpers shared by the tape ops and the tape-free inference path so
// both compute identical arithmetic.
struct LayerNormResult {
  Mat out;
  Mat normalized;
  Eigen::VectorXd inv_std;
};
LayerNormResult LayerNormForward(const Mat& x, const Mat& gain,
                                 const Mat& bias);
void SoftmaxRowsInPlace(Mat& m);
// Tanh approximation.
double Gelu(double x);
double GeluGrad(double x);
Mat SinusoidalPositions(int length, int dim);

inline constexpr double kLayerNormEps = 1e-5;

class Tape {
 public:
  // `grads` may be null for forward-only use.
  Tape(const std::vector<Mat>& params, std::vector<Mat>* grads);

  Var Param(int index);
  Var Constant(Mat value);

  const Mat& value(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }

  // Rows of `table` selected by `ids`.
  Var Embed(Var table, std::span<const TokenId> ids);
  Var Add(Var a, Var b);
  // x + broadcast row.
  Var AddRow(Var x, Var row);
  Var AddConstant(Var x, const Mat& c);
  Var Scale(Var x, double s);
  Var MatMul(Var a, Var b);
  // a * b^T
  Var MatMulT(Var a, Var b);
  Var Gelu(Var x);
  Var LayerNorm(Var x, Var gain, Var bias);
  // Multi-head scaled dot-product attention. q: n x d, k and v: m x d.
  Var Attention(Var q, Var k, Var v, int heads, bool causal);
  // 1x1 sum over rows of -log softmax(logits)[row, target].
  Var CrossEntropySum(Var logits, std::span<const TokenId> targets);
  // 1x1 sum of weight_i * term_i over 1x1 inputs.
  Var Combine(std::span<const Var> terms, std::span<const double> weights);

  // Inverted dropout with rate `p` drawn from the tape's generator; identity
  // unless EnableDropout was called.
  Var Dropout(Var x);
  void EnableDropout(double p, std::uint64_t seed);

  // Seeds d(root)=1 and propagates to every reachable node.
  void Backward(Var root);

 private:
  struct Node {
    Mat value;
    Mat grad;
    int param = -1;
    bool requires_grad = false;
    std::function<void(const Mat& grad)> backward;
  };

  Var Push(Mat value, bool requires_grad,
           std::function<void(const Mat&)> backward);
  bool RequiresGrad(Var v) const;
  void Accumulate(Var v, const Mat& g);
  template <typename Expr>
  void AccumulateExpr(Var v, const Expr& g);
  Mat& GradRef(Var v);

  const std::vector<Mat>& params_;
  std::vector<Mat>* grads_;
  std::vector<Node> nodes_;
  double dropout_ = 0.0;
  std::mt19937_64 rng_;
};

}  // namespace genret::ad
