// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "error.hpp"
#include "parallel.hpp"

namespace genret {

namespace {

void CheckTarget(std::span<const TokenId> target, const char* what) {
  if (target.empty())
    Fail(ErrorCode::kInvalidArgument, std::string("empty ") + what + " target");
  if (target.back() != kEos)
    Fail(ErrorCode::kInvalidArgument,
         std::string(what) + " target is not EOS-terminated");
}

double MeanLoss(const Model& model, Head head, std::span<const TokenId> input,
                std::span<const TokenId> target) {
  CheckTarget(target, HeadName(head));
  ad::Tape tape(model.params(), nullptr);
  ad::Var memory = model.EncodeOnTape(tape, head, input);
  return tape.scalar(model.DecoderLossOnTape(tape, head, memory, target)) /
         static_cast<double>(target.size());
}

struct ExampleLosses {
  double retrieval = 0.0;
  double qa = 0.0;
};

// Backpropagates weight_r * sum-CE(retrieval) + weight_q * sum-CE(qa) into
// `grads`. Branches with zero weight are evaluated but not differentiated.
ExampleLosses Differentiate(const Model& model, const TrainExample& ex,
                            double weight_r, double weight_q,
                            std::vector<Mat>* grads, double dropout = 0.0,
                            std::uint64_t dropout_seed = 0) {
  CheckTarget(ex.docid_target, "retrieval");
  CheckTarget(ex.answer_target, "qa");
  const double nr = static_cast<double>(ex.docid_target.size());
  const double nq = static_cast<double>(ex.answer_target.size());
  ad::Tape tape(model.params(), grads);
  if (dropout > 0.0) tape.EnableDropout(dropout, dropout_seed);
  ad::Var mem_r = model.EncodeOnTape(tape, Head::kRetrieval, ex.input);
  ad::Var mem_q = model.config().share_encoder
                      ? mem_r
                      : model.EncodeOnTape(tape, Head::kQa, ex.input);
  ad::Var lr = model.DecoderLossOnTape(tape, Head::kRetrieval, mem_r, ex.docid_target);
  ad::Var lq = model.DecoderLossOnTape(tape, Head::kQa, mem_q, ex.answer_target);
  ExampleLosses out{tape.scalar(lr) / nr, tape.scalar(lq) / nq};
  if (grads != nullptr) {
    const ad::Var terms[] = {lr, lq};
    const double weights[] = {weight_r / nr, weight_q / nq};
    tape.Backward(tape.Combine(terms, weights));
  }
  return out;
}

}  // namespace

void TrainConfig::Validate() const {
  Require(lambda >= 0.0 && lambda <= 1.0, "train.lambda must lie in [0, 1]");
  Require(learning_rate > 0.0, "train.learning_rate must be > 0");
  Require(batch_size >= 1, "train.batch_size must be >= 1");
  Require(epochs >= 0, "train.epochs must be >= 0");
  Require(warmup_steps >= 0, "train.warmup_steps must be >= 0");
  Require(dropout >= 0.0 && dropout < 1.0, "train.dropout must lie in [0, 1)");
  Require(jobs >= 1, "jobs must be >= 1");
}

double LossRetrieval(const Model& model, std::span<const TokenId> input,
                     std::span<const TokenId> target) {
  return MeanLoss(model, Head::kRetrieval, input, target);
}

double LossQa(const Model& model, std::span<const TokenId> input,
              std::span<const TokenId> target) {
  return MeanLoss(model, Head::kQa, input, target);
}

double LossJoint(double retrieval, double qa, double lambda) {
  Require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  if (!std::isfinite(retrieval) || !std::isfinite(qa))
    Fail(ErrorCode::kNumeric, "non-finite loss");
  return lambda * retrieval + (1.0 - lambda) * qa;
}

StepLosses BatchLosses(const Model& model, std::span<const TrainExample> batch,
                       double lambda) {
  Require(!batch.empty(), "empty batch");
  StepLosses s;
  for (const TrainExample& ex : batch) {
    const ExampleLosses l = Differentiate(model, ex, 0.0, 0.0, nullptr);
    s.retrieval += l.retrieval;
    s.qa += l.qa;
  }
  s.retrieval /= static_cast<double>(batch.size());
  s.qa /= static_cast<double>(batch.size());
  s.joint = LossJoint(s.retrieval, s.qa, lambda);
  return s;
}

StepLosses ComputeGradients(const Model& model,
                            std::span<const TrainExample> batch, double lambda,
                            std::vector<Mat>& grads, int jobs, double dropout,
                            std::uint64_t dropout_seed) {
  Require(!batch.empty(), "empty batch");
  Require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  Require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const double b = static_cast<double>(batch.size());
  const double wr = lambda / b;
  const double wq = (1.0 - lambda) / b;
  grads = model.ZeroGrads();

  const std::size_t lanes =
      std::min<std::size_t>(batch.size(), static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::vector<Mat>> scratch(lanes, model.ZeroGrads());
  std::vector<ExampleLosses> losses(batch.size());
  for (std::size_t start = 0; start < batch.size(); start += lanes) {
    const std::size_t count = std::min(lanes, batch.size() - start);
    ParallelFor(count, jobs, [&](std::size_t lane) {
      for (Mat& g : scratch[lane]) g.setZero();
      const std::uint64_t seed =
          dropout_seed ^ ((start + lane + 1) * 0x9E3779B97F4A7C15ULL);
      losses[start + lane] = Differentiate(model, batch[start + lane], wr, wq,
                                           &scratch[lane], dropout, seed);
    });
    for (std::size_t lane = 0; lane < count; ++lane)
      for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += scratch[lane][p];
  }

  StepLosses s;
  for (const ExampleLosses& l : losses) {
    s.retrieval += l.retrieval;
    s.qa += l.qa;
  }
  s.retrieval /= b;
  s.qa /= b;
  s.joint = LossJoint(s.retrieval, s.qa, lambda);
  return s;
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model), config_(config) {
  config_.Validate();
  m_ = model.ZeroGrads();
  v_ = model.ZeroGrads();
}

double Trainer::CurrentLearningRate() const {
  if (config_.warmup_steps <= 0) return config_.learning_rate;
  const double ramp = static_cast<double>(steps_ + 1) / config_.warmup_steps;
  return config_.learning_rate * std::min(1.0, ramp);
}

StepLosses Trainer::Step(std::span<const TrainExample> batch) {
  const StepLosses losses =
      ComputeGradients(model_, batch, config_.lambda, grads_, config_.jobs,
                       config_.dropout,
                       config_.seed * 0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(steps_));

  double sq = 0.0;
  for (const Mat& g : grads_) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(losses.retrieval) || !std::isfinite(losses.qa) ||
      !std::isfinite(norm)) {
    std::ostringstream msg;
    msg << "non-finite training state at step " << steps_
        << ": loss_retr=" << losses.retrieval << " loss_qa=" << losses.qa
        << " grad_norm=" << norm << " batch_size=" << batch.size();
    Fail(ErrorCode::kNumeric, msg.str());
  }
  const double clip = (config_.grad_clip > 0.0 && norm > config_.grad_clip)
                          ? config_.grad_clip / norm
                          : 1.0;

  const double lr = CurrentLearningRate();
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  std::vector<Mat>& params = model_.mutable_params();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Mat g = grads_[p] * clip;
    m_[p] = config_.beta1 * m_[p] + (1.0 - config_.beta1) * g;
    v_[p] = config_.beta2 * v_[p] + (1.0 - config_.beta2) * g.cwiseAbs2();
    params[p].array() -= lr * (m_[p].array() / bc1) /
                         ((v_[p].array() / bc2).sqrt() + config_.adam_eps);
  }
  return losses;
}

StepLosses TrainStep(Model& model, std::span<const TrainExample> batch,
                     const TrainConfig& config) {
  Trainer trainer(model, config);
  return trainer.Step(batch);
}

GradCheckReport GradCheck(const Model& model,
                          std::span<const TrainExample> fixture,
                          const GradCheckOptions& options) {
  Require(options.epsilon > 0.0, "epsilon must be > 0");
  std::vector<Mat> grads;
  ComputeGradients(model, fixture, options.lambda, grads, 1);

  GradCheckReport report;
  double sq = 0.0;
  for (const Mat& g : grads) sq += g.squaredNorm();
  report.gradient_norm = std::sqrt(sq);

  // Group the flat coordinate space so every group gets its share.
  std::vector<ParamGroup> groups;
  for (const ParamInfo& info : model.param_info())
    if (std::find(groups.begin(), groups.end(), info.group) == groups.end())
      groups.push_back(info.group);
  std::mt19937_64 rng(options.seed);
  Model probe = model;
  auto objective = [&] {
    return BatchLosses(probe, fixture, options.lambda).joint;
  };

  const int per_group =
      (options.coordinates + static_cast<int>(groups.size()) - 1) /
      static_cast<int>(groups.size());
  for (ParamGroup group : groups) {
    std::vector<std::pair<int, Eigen::Index>> space;  // (param, size)
    Eigen::Index total = 0;
    for (std::size_t p = 0; p < model.params().size(); ++p)
      if (model.param_info()[p].group == group) {
        space.emplace_back(static_cast<int>(p), model.params()[p].size());
        total += model.params()[p].size();
      }
    for (int s = 0; s < per_group; ++s) {
      Eigen::Index flat = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(total));
      int param = 0;
      for (const auto& [p, size] : space) {
        if (flat < size) {
          param = p;
          break;
        }
        flat -= size;
      }
      Mat& target = probe.mutable_params()[static_cast<std::size_t>(param)];
      const Eigen::Index row = flat % target.rows();
      const Eigen::Index col = flat / target.rows();
      const double original = target(row, col);
      target(row, col) = original + options.epsilon;
      const double plus = objective();
      target(row, col) = original - options.epsilon;
      const double minus = objective();
      target(row, col) = original;

      GradCheckCoordinate c;
      c.param = param;
      c.row = row;
      c.col = col;
      c.group = group;
      c.analytic = grads[static_cast<std::size_t>(param)](row, col);
      c.numeric = (plus - minus) / (2.0 * options.epsilon);
      const double denom =
          std::max({std::abs(c.analytic), std::abs(c.numeric), 1e-6});
      c.relative_error = std::abs(c.analytic - c.numeric) / denom;
      report.max_relative_error =
          std::max(report.max_relative_error, c.relative_error);
      report.coordinates.push_back(c);
    }
  }
  return report;
}

}  // namespace genret
