// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Teacher-forced losses, the joint objective and parameter updates.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"

namespace genret {

struct TrainConfig {
  double lambda = 0.6;
  double learning_rate = 3e-4;
  int batch_size = 32;
  int epochs = 1;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  int warmup_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout = 0.1;  // training-time only
  std::uint64_t seed = 0;  // dropout masks
  int jobs = 1;

  void Validate() const;
};

struct TrainExample {
  std::vector<TokenId> input;
  std::vector<TokenId> docid_target;   // EOS-terminated
  std::vector<TokenId> answer_target;  // EOS-terminated
};

struct StepLosses {
  double retrieval = 0.0;
  double qa = 0.0;
  double joint = 0.0;
};

// Mean per-token negative log-likelihood of `target` under teacher forcing.
double LossRetrieval(const Model& model, std::span<const TokenId> input,
                     std::span<const TokenId> target);
double LossQa(const Model& model, std::span<const TokenId> input,
              std::span<const TokenId> target);

// lambda * retrieval + (1 - lambda) * qa; lambda must lie in [0, 1].
double LossJoint(double retrieval, double qa, double lambda);

// Batch-mean losses of `batch` (per-token means averaged over examples).
StepLosses BatchLosses(const Model& model, std::span<const TrainExample> batch,
                       double lambda);

// Gradient of the batch joint loss into `grads` (overwritten). Each example
// is differentiated into its own buffer and the buffers are summed in batch
// order, so the result does not depend on `jobs`. Dropout masks derive from
// `dropout_seed` and the example's batch position.
StepLosses ComputeGradients(const Model& model,
                            std::span<const TrainExample> batch, double lambda,
                            std::vector<Mat>& grads, int jobs = 1,
                            double dropout = 0.0, std::uint64_t dropout_seed = 0);

// Adam with linear warmup.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  // One update on the joint loss; returns the pre-update losses. Fails with
  // kNumeric (and leaves the parameters untouched) on non-finite values.
  StepLosses Step(std::span<const TrainExample> batch);

  std::int64_t steps() const { return steps_; }
  const TrainConfig& config() const { return config_; }
  double CurrentLearningRate() const;

 private:
  Model& model_;
  TrainConfig config_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  std::vector<Mat> grads_;
  std::int64_t steps_ = 0;
};

// Convenience wrapper for a single update with fresh optimizer state.
StepLosses TrainStep(Model& model, std::span<const TrainExample> batch,
                     const TrainConfig& config);

struct GradCheckOptions {
  double epsilon = 1e-5;
  int coordinates = 240;  // spread evenly over the parameter groups
  double lambda = 0.6;
  std::uint64_t seed = 7;
};

struct GradCheckCoordinate {
  int param = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  ParamGroup group = ParamGroup::kEncoder;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  double gradient_norm = 0.0;
  std::vector<GradCheckCoordinate> coordinates;
};

// Compares the analytic gradient of the joint loss with central differences.
// relative error = |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport GradCheck(const Model& model,
                          std::span<const TrainExample> fixture,
                          const GradCheckOptions& options);

}  // namespace genret
