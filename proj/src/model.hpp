// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Encoder-decoder network with one shared encoder and two decoder stacks:
// the retrieval decoder generates document identifiers and the QA decoder
// generates answers. Each decoder ties its output projection to the token
// embedding of the encoder that feeds it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "jsonl.hpp"
#include "text.hpp"

namespace genret {

using ad::Mat;

enum class Head { kRetrieval, kQa };

const char* HeadName(Head head);

// Which parameter set a tensor belongs to. kQaEncoder exists only when the
// encoder is not shared.
enum class ParamGroup { kEncoder, kQaEncoder, kRetrievalDecoder, kQaDecoder };

const char* GroupName(ParamGroup group);

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 128;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int max_input_len = 64;
  int max_output_len = 48;
  bool share_encoder = true;
  std::uint64_t seed = 42;

  void Validate() const;
  Json ToJson() const;
  static ModelConfig FromJson(const Json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct ParamInfo {
  std::string name;
  ParamGroup group;
};

// Hidden states feeding each decoder. With a shared encoder both point at the
// same matrix.
struct EncoderState {
  std::shared_ptr<const Mat> retrieval;
  std::shared_ptr<const Mat> qa;

  const Mat& For(Head head) const {
    return head == Head::kRetrieval ? *retrieval : *qa;
  }
};

class Model;

// Autoregressive decoding with cached self-attention keys and values.
// Copyable, so beam search can fork hypotheses.
class IncrementalDecoder {
 public:
  // Feeds `token` at the next position and returns log-probabilities of the
  // following token.
  Eigen::VectorXd Step(TokenId token);
  int position() const { return position_; }

 private:
  friend class Model;
  struct LayerCache {
    Mat keys;
    Mat values;
  };
  struct CrossCache {
    std::vector<Mat> keys;
    std::vector<Mat> values;
  };

  const Model* model_ = nullptr;
  Head head_ = Head::kRetrieval;
  std::shared_ptr<const CrossCache> cross_;
  std::vector<LayerCache> self_;
  int position_ = 0;
};

class Model {
 public:
  // Deterministic in config.seed.
  static Model Init(const ModelConfig& config);

  // Binary checkpoint with magic, version, config, vocabulary hash and a
  // trailing checksum.
  void Save(const std::filesystem::path& path, std::uint64_t vocab_hash) const;
  static Model Load(const std::filesystem::path& path,
                    std::uint64_t* vocab_hash = nullptr);

  const ModelConfig& config() const { return config_; }
  const std::vector<Mat>& params() const { return params_; }
  std::vector<Mat>& mutable_params() { return params_; }
  const std::vector<ParamInfo>& param_info() const { return info_; }
  std::size_t ParameterCount() const;
  std::vector<Mat> ZeroGrads() const;

  // Truncates inputs longer than max_input_len (with a warning). Fails on an
  // empty input.
  EncoderState Encode(std::span<const TokenId> input) const;

  IncrementalDecoder StartDecoder(Head head, const EncoderState& state) const;

  // Log-probability rows for every position of a teacher-forced target
  // (row i conditions on BOS + target[0..i-1]). Computed on a forward-only
  // tape, independently of IncrementalDecoder.
  Mat TeacherForcedLogProbs(Head head, const EncoderState& state,
                            std::span<const TokenId> target) const;

  // Tape building blocks used by training.
  ad::Var EncodeOnTape(ad::Tape& tape, Head head,
                       std::span<const TokenId> input) const;
  // Summed cross-entropy of `target` under teacher forcing.
  ad::Var DecoderLossOnTape(ad::Tape& tape, Head head, ad::Var memory,
                            std::span<const TokenId> target) const;

 private:
  friend class IncrementalDecoder;

  struct AttnIdx {
    int wq, wk, wv, wo, bo;
  };
  struct EncLayerIdx {
    int ln1_g, ln1_b;
    AttnIdx attn;
    int ln2_g, ln2_b, w1, b1, w2, b2;
  };
  struct DecLayerIdx {
    int ln1_g, ln1_b;
    AttnIdx self;
    int ln2_g, ln2_b;
    AttnIdx cross;
    int ln3_g, ln3_b, w1, b1, w2, b2;
  };
  struct EncoderIdx {
    int embed;
    std::vector<EncLayerIdx> layers;
    int lnf_g, lnf_b;
  };
  struct DecoderIdx {
    std::vector<DecLayerIdx> layers;
    int lnf_g, lnf_b, out_bias;
  };
  struct Shape {
    int rows, cols;
    int fan_in;  // 0 => constant init
    double fill;
  };

  explicit Model(const ModelConfig& config);
  int AddParam(const std::string& name, ParamGroup group, Shape shape);
  const EncoderIdx& EncoderFor(Head head) const;
  const DecoderIdx& DecoderFor(Head head) const;
  std::vector<TokenId> ClampInput(std::span<const TokenId> input) const;
  ad::Var AttentionBlock(ad::Tape& tape, const AttnIdx& idx, ad::Var x,
                         ad::Var memory, bool causal) const;
  ad::Var DecoderLogitsOnTape(ad::Tape& tape, Head head, ad::Var memory,
                              std::span<const TokenId> target) const;
  const Mat& P(int index) const { return params_[static_cast<std::size_t>(index)]; }

  ModelConfig config_;
  std::vector<Mat> params_;
  std::vector<ParamInfo> info_;
  std::vector<Shape> shapes_;
  std::vector<EncoderIdx> encoders_;
  DecoderIdx retrieval_;
  DecoderIdx qa_;
  Mat positions_;
};

}  // namespace genret
