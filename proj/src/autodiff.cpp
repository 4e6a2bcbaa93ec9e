// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "autodiff.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "error.hpp"

namespace genret::ad {

LayerNormResult LayerNormForward(const Mat& x, const Mat& gain,
                                 const Mat& bias) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  LayerNormResult r;
  r.normalized.resize(n, d);
  r.inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    r.inv_std(i) = inv;
    r.normalized.row(i) = (x.row(i).array() - mean) * inv;
  }
  r.out = (r.normalized.array().rowwise() * gain.row(0).array()).matrix();
  r.out.rowwise() += bias.row(0);
  return r;
}

void SoftmaxRowsInPlace(Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double Gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double GeluGrad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

Mat SinusoidalPositions(int length, int dim) {
  Mat pe(length, dim);
  for (int pos = 0; pos < length; ++pos)
    for (int i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  return pe;
}

Tape::Tape(const std::vector<Mat>& params, std::vector<Mat>* grads)
    : params_(params), grads_(grads) {
  nodes_.reserve(256);
}

Var Tape::Push(Mat value, bool requires_grad,
               std::function<void(const Mat&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::Param(int index) {
  Require(index >= 0 && static_cast<std::size_t>(index) < params_.size(),
          "parameter index out of range");
  Node n;
  n.param = index;
  n.requires_grad = grads_ != nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::Constant(Mat value) { return Push(std::move(value), false, {}); }

const Mat& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return n.param >= 0 ? params_[static_cast<std::size_t>(n.param)] : n.value;
}

bool Tape::RequiresGrad(Var v) const {
  return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
}

Mat& Tape::GradRef(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.param >= 0) return (*grads_)[static_cast<std::size_t>(n.param)];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Accumulate(Var v, const Mat& g) {
  if (RequiresGrad(v)) GradRef(v) += g;
}

template <typename Expr>
void Tape::AccumulateExpr(Var v, const Expr& g) {
  if (RequiresGrad(v)) GradRef(v).noalias() += g;
}

Var Tape::Embed(Var table, std::span<const TokenId> ids) {
  const Mat& t = value(table);
  Mat out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Require(ids[i] >= 0 && ids[i] < t.rows(), "token id outside embedding");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<TokenId> copy(ids.begin(), ids.end());
  return Push(std::move(out), RequiresGrad(table),
              [this, table, copy = std::move(copy)](const Mat& g) {
                Mat& dt = GradRef(table);
                for (std::size_t i = 0; i < copy.size(); ++i)
                  dt.row(copy[i]) += g.row(static_cast<Eigen::Index>(i));
              });
}

Var Tape::Add(Var a, Var b) {
  Mat out = value(a) + value(b);
  return Push(std::move(out), RequiresGrad(a) || RequiresGrad(b),
              [this, a, b](const Mat& g) {
                Accumulate(a, g);
                Accumulate(b, g);
              });
}

Var Tape::AddRow(Var x, Var row) {
  Mat out = value(x);
  out.rowwise() += value(row).row(0);
  return Push(std::move(out), RequiresGrad(x) || RequiresGrad(row),
              [this, x, row](const Mat& g) {
                Accumulate(x, g);
                if (RequiresGrad(row)) GradRef(row).row(0) += g.colwise().sum();
              });
}

Var Tape::AddConstant(Var x, const Mat& c) {
  Mat out = value(x) + c;
  return Push(std::move(out), RequiresGrad(x),
              [this, x](const Mat& g) { Accumulate(x, g); });
}

Var Tape::Scale(Var x, double s) {
  Mat out = value(x) * s;
  return Push(std::move(out), RequiresGrad(x),
              [this, x, s](const Mat& g) { AccumulateExpr(x, g * s); });
}

void Tape::EnableDropout(double p, std::uint64_t seed) {
  dropout_ = p;
  rng_.seed(seed);
}

Var Tape::Dropout(Var x) {
  if (dropout_ <= 0.0) return x;
  const Mat& v = value(x);
  const double keep = 1.0 - dropout_;
  Mat mask(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask(i) = static_cast<double>(rng_() >> 11) * 0x1.0p-53 < keep ? 1.0 / keep : 0.0;
  Mat out = v.cwiseProduct(mask);
  return Push(std::move(out), RequiresGrad(x),
              [this, x, mask = std::move(mask)](const Mat& g) {
                AccumulateExpr(x, g.cwiseProduct(mask));
              });
}

Var Tape::MatMul(Var a, Var b) {
  Mat out;
  out.noalias() = value(a) * value(b);
  return Push(std::move(out), RequiresGrad(a) || RequiresGrad(b),
              [this, a, b](const Mat& g) {
                AccumulateExpr(a, g * value(b).transpose());
                AccumulateExpr(b, value(a).transpose() * g);
              });
}

Var Tape::MatMulT(Var a, Var b) {
  Mat out;
  out.noalias() = value(a) * value(b).transpose();
  return Push(std::move(out), RequiresGrad(a) || RequiresGrad(b),
              [this, a, b](const Mat& g) {
                AccumulateExpr(a, g * value(b));
                AccumulateExpr(b, g.transpose() * value(a));
              });
}

Var Tape::Gelu(Var x) {
  Mat out = value(x).unaryExpr([](double v) { return ad::Gelu(v); });
  return Push(std::move(out), RequiresGrad(x), [this, x](const Mat& g) {
    Accumulate(x, (g.array() * value(x).unaryExpr([](double v) {
                                  return GeluGrad(v);
                                }).array())
                      .matrix());
  });
}

Var Tape::LayerNorm(Var x, Var gain, Var bias) {
  LayerNormResult r = LayerNormForward(value(x), value(gain), value(bias));
  auto normalized = std::make_shared<Mat>(std::move(r.normalized));
  auto inv_std = std::make_shared<Eigen::VectorXd>(std::move(r.inv_std));
  const bool needs = RequiresGrad(x) || RequiresGrad(gain) || RequiresGrad(bias);
  return Push(
      std::move(r.out), needs,
      [this, x, gain, bias, normalized, inv_std](const Mat& g) {
        const Mat& xhat = *normalized;
        if (RequiresGrad(gain))
          GradRef(gain).row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
        if (RequiresGrad(bias)) GradRef(bias).row(0) += g.colwise().sum();
        if (!RequiresGrad(x)) return;
        Mat dxhat = (g.array().rowwise() * value(gain).row(0).array()).matrix();
        Mat dx(dxhat.rows(), dxhat.cols());
        for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
          const double m1 = dxhat.row(i).mean();
          const double m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
          dx.row(i) = (*inv_std)(i) *
                      (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2)
                          .matrix();
        }
        Accumulate(x, dx);
      });
}

Var Tape::Attention(Var q, Var k, Var v, int heads, bool causal) {
  const Mat& Q = value(q);
  const Mat& K = value(k);
  const Mat& V = value(v);
  const Eigen::Index d = Q.cols();
  Require(heads >= 1 && d % heads == 0, "model dim not divisible by heads");
  Require(!causal || Q.rows() == K.rows(), "causal attention needs n == m");
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Mat>>(static_cast<std::size_t>(heads));
  Mat out(Q.rows(), d);
  for (int h = 0; h < heads; ++h) {
    Mat s;
    s.noalias() = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose();
    s *= scale;
    if (causal)
      for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = i + 1; j < s.cols(); ++j)
          s(i, j) = -std::numeric_limits<double>::infinity();
    SoftmaxRowsInPlace(s);
    out.middleCols(h * dh, dh).noalias() = s * V.middleCols(h * dh, dh);
    (*probs)[static_cast<std::size_t>(h)] = std::move(s);
  }
  const bool needs = RequiresGrad(q) || RequiresGrad(k) || RequiresGrad(v);
  return Push(std::move(out), needs,
              [this, q, k, v, heads, dh, scale, probs](const Mat& g) {
                const Mat& Q = value(q);
                const Mat& K = value(k);
                const Mat& V = value(v);
                Mat dq = Mat::Zero(Q.rows(), Q.cols());
                Mat dk = Mat::Zero(K.rows(), K.cols());
                Mat dv = Mat::Zero(V.rows(), V.cols());
                for (int h = 0; h < heads; ++h) {
                  const Mat& p = (*probs)[static_cast<std::size_t>(h)];
                  const auto go = g.middleCols(h * dh, dh);
                  dv.middleCols(h * dh, dh).noalias() += p.transpose() * go;
                  Mat dp;
                  dp.noalias() = go * V.middleCols(h * dh, dh).transpose();
                  const Eigen::VectorXd row_dot =
                      (dp.array() * p.array()).rowwise().sum();
                  Mat ds = (p.array() * (dp.array().colwise() - row_dot.array()))
                               .matrix() *
                           scale;
                  dq.middleCols(h * dh, dh).noalias() +=
                      ds * K.middleCols(h * dh, dh);
                  dk.middleCols(h * dh, dh).noalias() +=
                      ds.transpose() * Q.middleCols(h * dh, dh);
                }
                Accumulate(q, dq);
                Accumulate(k, dk);
                Accumulate(v, dv);
              });
}

Var Tape::CrossEntropySum(Var logits, std::span<const TokenId> targets) {
  const Mat& z = value(logits);
  Require(static_cast<Eigen::Index>(targets.size()) == z.rows(),
          "cross entropy: one target per row required");
  auto probs = std::make_shared<Mat>(z);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const TokenId t = targets[static_cast<std::size_t>(i)];
    Require(t >= 0 && t < z.cols(), "cross entropy target outside vocabulary");
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    total += lse - z(i, t);
    probs->row(i) = (z.row(i).array() - lse).exp();
  }
  std::vector<TokenId> copy(targets.begin(), targets.end());
  Mat out(1, 1);
  out(0, 0) = total;
  return Push(std::move(out), RequiresGrad(logits),
              [this, logits, probs, copy = std::move(copy)](const Mat& g) {
                Mat d = *probs;
                for (std::size_t i = 0; i < copy.size(); ++i)
                  d(static_cast<Eigen::Index>(i), copy[i]) -= 1.0;
                d *= g(0, 0);
                Accumulate(logits, d);
              });
}

Var Tape::Combine(std::span<const Var> terms, std::span<const double> weights) {
  Require(terms.size() == weights.size(), "combine: size mismatch");
  Mat out = Mat::Zero(1, 1);
  bool needs = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out(0, 0) += weights[i] * scalar(terms[i]);
    needs = needs || RequiresGrad(terms[i]);
  }
  std::vector<Var> t(terms.begin(), terms.end());
  std::vector<double> w(weights.begin(), weights.end());
  return Push(std::move(out), needs, [this, t, w](const Mat& g) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (w[i] == 0.0) continue;
      Mat gi(1, 1);
      gi(0, 0) = g(0, 0) * w[i];
      Accumulate(t[i], gi);
    }
  });
}

void Tape::Backward(Var root) {
  Require(grads_ != nullptr, "backward on a forward-only tape");
  if (!RequiresGrad(root)) return;
  GradRef(root).setConstant(1.0);
  for (std::int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.param >= 0 || !n.backward || n.grad.size() == 0) continue;
    n.backward(n.grad);
  }
}

}  // namespace genret::ad
