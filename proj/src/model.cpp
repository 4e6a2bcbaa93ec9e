// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#include "model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "error.hpp"
#include "log.hpp"

namespace genret {

namespace {

constexpr char kMagic[8] = {'G', 'N', 'R', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

double OutputScale(int embed_dim) { return 1.0 / std::sqrt(static_cast<double>(embed_dim)); }

std::uint64_t Fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void Pod(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void Bytes(const std::string& s) {
    Pod(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void Doubles(const double* d, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(d), n * sizeof(double));
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
  template <typename T>
  T Pod() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Bytes() {
    const auto n = Pod<std::uint32_t>();
    Need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void Doubles(double* d, std::size_t n) {
    Need(n * sizeof(double));
    std::memcpy(d, buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::size_t pos() const { return pos_; }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > end_) Fail(ErrorCode::kIntegrity, "checkpoint truncated");
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

Eigen::VectorXd LogSoftmax(const Eigen::RowVectorXd& z) {
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return (z.array() - lse).matrix().transpose();
}

}  // namespace

const char* HeadName(Head head) {
  return head == Head::kRetrieval ? "retrieval" : "qa";
}

const char* GroupName(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kQaEncoder: return "qa_encoder";
    case ParamGroup::kRetrievalDecoder: return "retrieval_decoder";
    case ParamGroup::kQaDecoder: return "qa_decoder";
  }
  return "?";
}

void ModelConfig::Validate() const {
  Require(vocab_size > kNumReserved, "model.vocab_size must exceed the reserved ids");
  Require(embed_dim >= 1, "model.embed_dim must be >= 1");
  Require(hidden_dim >= 1, "model.hidden_dim must be >= 1");
  Require(encoder_layers >= 1, "model.encoder_layers must be >= 1");
  Require(decoder_layers >= 1, "model.decoder_layers must be >= 1");
  Require(heads >= 1 && embed_dim % heads == 0,
          "model.heads must divide model.embed_dim");
  Require(max_input_len >= 2, "model.max_input_len must be >= 2");
  Require(max_output_len >= 2, "model.max_output_len must be >= 2");
}

Json ModelConfig::ToJson() const {
  return {{"vocab_size", vocab_size},       {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},       {"encoder_layers", encoder_layers},
          {"decoder_layers", decoder_layers}, {"heads", heads},
          {"max_input_len", max_input_len}, {"max_output_len", max_output_len},
          {"share_encoder", share_encoder}, {"seed", seed}};
}

ModelConfig ModelConfig::FromJson(const Json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.max_input_len = j.at("max_input_len").get<int>();
  c.max_output_len = j.at("max_output_len").get<int>();
  c.share_encoder = j.at("share_encoder").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

int Model::AddParam(const std::string& name, ParamGroup group, Shape shape) {
  params_.push_back(Mat::Zero(shape.rows, shape.cols));
  info_.push_back({name, group});
  shapes_.push_back(shape);
  return static_cast<int>(params_.size() - 1);
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const int d = config.embed_dim;
  const int h = config.hidden_dim;
  const int v = config.vocab_size;
  auto weight = [](int rows, int cols) { return Shape{rows, cols, rows, 0.0}; };
  auto ones = [](int cols) { return Shape{1, cols, 0, 1.0}; };
  auto zeros = [](int cols) { return Shape{1, cols, 0, 0.0}; };

  auto attn = [&](const std::string& p, ParamGroup g) {
    return AttnIdx{AddParam(p + ".wq", g, weight(d, d)),
                   AddParam(p + ".wk", g, weight(d, d)),
                   AddParam(p + ".wv", g, weight(d, d)),
                   AddParam(p + ".wo", g, weight(d, d)),
                   AddParam(p + ".bo", g, zeros(d))};
  };

  const int num_encoders = config.share_encoder ? 1 : 2;
  for (int e = 0; e < num_encoders; ++e) {
    const ParamGroup g = e == 0 ? ParamGroup::kEncoder : ParamGroup::kQaEncoder;
    const std::string p = "enc" + std::to_string(e);
    EncoderIdx enc;
    // Embedding rows act as output-projection columns, so fan-in is d.
    enc.embed = AddParam(p + ".embed", g, Shape{v, d, d, 0.0});
    for (int l = 0; l < config.encoder_layers; ++l) {
      const std::string lp = p + ".layer" + std::to_string(l);
      EncLayerIdx L;
      L.ln1_g = AddParam(lp + ".ln1.g", g, ones(d));
      L.ln1_b = AddParam(lp + ".ln1.b", g, zeros(d));
      L.attn = attn(lp + ".attn", g);
      L.ln2_g = AddParam(lp + ".ln2.g", g, ones(d));
      L.ln2_b = AddParam(lp + ".ln2.b", g, zeros(d));
      L.w1 = AddParam(lp + ".ffn.w1", g, weight(d, h));
      L.b1 = AddParam(lp + ".ffn.b1", g, zeros(h));
      L.w2 = AddParam(lp + ".ffn.w2", g, weight(h, d));
      L.b2 = AddParam(lp + ".ffn.b2", g, zeros(d));
      enc.layers.push_back(L);
    }
    enc.lnf_g = AddParam(p + ".ln_f.g", g, ones(d));
    enc.lnf_b = AddParam(p + ".ln_f.b", g, zeros(d));
    encoders_.push_back(std::move(enc));
  }

  auto decoder = [&](const std::string& p, ParamGroup g) {
    DecoderIdx dec;
    for (int l = 0; l < config.decoder_layers; ++l) {
      const std::string lp = p + ".layer" + std::to_string(l);
      DecLayerIdx L;
      L.ln1_g = AddParam(lp + ".ln1.g", g, ones(d));
      L.ln1_b = AddParam(lp + ".ln1.b", g, zeros(d));
      L.self = attn(lp + ".self", g);
      L.ln2_g = AddParam(lp + ".ln2.g", g, ones(d));
      L.ln2_b = AddParam(lp + ".ln2.b", g, zeros(d));
      L.cross = attn(lp + ".cross", g);
      L.ln3_g = AddParam(lp + ".ln3.g", g, ones(d));
      L.ln3_b = AddParam(lp + ".ln3.b", g, zeros(d));
      L.w1 = AddParam(lp + ".ffn.w1", g, weight(d, h));
      L.b1 = AddParam(lp + ".ffn.b1", g, zeros(h));
      L.w2 = AddParam(lp + ".ffn.w2", g, weight(h, d));
      L.b2 = AddParam(lp + ".ffn.b2", g, zeros(d));
      dec.layers.push_back(L);
    }
    dec.lnf_g = AddParam(p + ".ln_f.g", g, ones(d));
    dec.lnf_b = AddParam(p + ".ln_f.b", g, zeros(d));
    dec.out_bias = AddParam(p + ".out_bias", g, zeros(v));
    return dec;
  };
  retrieval_ = decoder("retr", ParamGroup::kRetrievalDecoder);
  qa_ = decoder("qa", ParamGroup::kQaDecoder);

  positions_ = ad::SinusoidalPositions(
      std::max(config.max_input_len, config.max_output_len) + 1, d);
}

Model Model::Init(const ModelConfig& config) {
  Model m(config);
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    const Shape& s = m.shapes_[i];
    Mat& p = m.params_[i];
    if (s.fan_in == 0) {
      p.setConstant(s.fill);
      continue;
    }
    // Uniform with variance 1/fan_in.
    const double limit = std::sqrt(3.0 / s.fan_in);
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p(r, c) = (2.0 * u - 1.0) * limit;
      }
  }
  return m;
}

std::size_t Model::ParameterCount() const {
  std::size_t n = 0;
  for (const Mat& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

std::vector<Mat> Model::ZeroGrads() const {
  std::vector<Mat> g;
  g.reserve(params_.size());
  for (const Mat& p : params_) g.push_back(Mat::Zero(p.rows(), p.cols()));
  return g;
}

void Model::Save(const std::filesystem::path& path,
                 std::uint64_t vocab_hash) const {
  Writer w;
  w.buffer().append(kMagic, sizeof(kMagic));
  w.Pod(kCheckpointVersion);
  w.Pod(vocab_hash);
  w.Bytes(config_.ToJson().dump());
  w.Pod(static_cast<std::uint32_t>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    w.Bytes(info_[i].name);
    w.Pod(static_cast<std::uint32_t>(params_[i].rows()));
    w.Pod(static_cast<std::uint32_t>(params_[i].cols()));
    w.Doubles(params_[i].data(), static_cast<std::size_t>(params_[i].size()));
  }
  const std::uint64_t sum = Fnv1a(w.buffer().data(), w.buffer().size());
  w.Pod(sum);
  WriteFileAtomic(path, w.buffer());
}

Model Model::Load(const std::filesystem::path& path, std::uint64_t* vocab_hash) {
  const std::string buf = ReadFile(path);
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) ||
      std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    Fail(ErrorCode::kIntegrity, path.string() + ": not a genret checkpoint");
  std::uint32_t version = 0;
  std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion)
    Fail(ErrorCode::kVersion, path.string() + ": checkpoint version " +
                                  std::to_string(version) + ", expected " +
                                  std::to_string(kCheckpointVersion));
  if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    Fail(ErrorCode::kIntegrity, path.string() + ": checkpoint truncated");
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  if (stored != Fnv1a(buf.data(), body))
    Fail(ErrorCode::kIntegrity,
         path.string() + ": checkpoint checksum mismatch (truncated or corrupt)");

  Reader r(buf, body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.Pod<char>();
  r.Pod<std::uint32_t>();
  const auto hash = r.Pod<std::uint64_t>();
  if (vocab_hash != nullptr) *vocab_hash = hash;
  ModelConfig config;
  try {
    config = ModelConfig::FromJson(Json::parse(r.Bytes()));
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kIntegrity, path.string() + ": bad config block: " + e.what());
  }
  Model m(config);
  const auto count = r.Pod<std::uint32_t>();
  if (count != m.params_.size())
    Fail(ErrorCode::kIntegrity, path.string() + ": parameter count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = r.Bytes();
    const auto rows = r.Pod<std::uint32_t>();
    const auto cols = r.Pod<std::uint32_t>();
    Mat& p = m.params_[i];
    if (name != m.info_[i].name || rows != p.rows() || cols != p.cols())
      Fail(ErrorCode::kIntegrity, path.string() + ": unexpected tensor " + name);
    r.Doubles(p.data(), static_cast<std::size_t>(p.size()));
  }
  if (r.pos() != body)
    Fail(ErrorCode::kIntegrity, path.string() + ": trailing bytes in checkpoint");
  return m;
}

const Model::EncoderIdx& Model::EncoderFor(Head head) const {
  if (head == Head::kQa && !config_.share_encoder) return encoders_[1];
  return encoders_[0];
}

const Model::DecoderIdx& Model::DecoderFor(Head head) const {
  return head == Head::kRetrieval ? retrieval_ : qa_;
}

std::vector<TokenId> Model::ClampInput(std::span<const TokenId> input) const {
  Require(!input.empty(), "empty encoder input");
  for (TokenId t : input)
    Require(t >= 0 && t < config_.vocab_size,
            "input token " + std::to_string(t) + " outside vocabulary");
  const auto limit = static_cast<std::size_t>(config_.max_input_len);
  if (input.size() > limit) {
    Log(LogLevel::kWarning, "input of " + std::to_string(input.size()) +
                                " tokens truncated to " + std::to_string(limit));
    return {input.begin(), input.begin() + static_cast<std::ptrdiff_t>(limit)};
  }
  return {input.begin(), input.end()};
}

ad::Var Model::AttentionBlock(ad::Tape& tape, const AttnIdx& idx, ad::Var x,
                              ad::Var memory, bool causal) const {
  ad::Var q = tape.MatMul(x, tape.Param(idx.wq));
  ad::Var k = tape.MatMul(memory, tape.Param(idx.wk));
  ad::Var v = tape.MatMul(memory, tape.Param(idx.wv));
  ad::Var o = tape.Attention(q, k, v, config_.heads, causal);
  return tape.AddRow(tape.MatMul(o, tape.Param(idx.wo)), tape.Param(idx.bo));
}

ad::Var Model::EncodeOnTape(ad::Tape& tape, Head head,
                            std::span<const TokenId> input) const {
  const std::vector<TokenId> ids = ClampInput(input);
  const EncoderIdx& enc = EncoderFor(head);
  const auto n = static_cast<Eigen::Index>(ids.size());
  ad::Var x = tape.Embed(tape.Param(enc.embed), ids);
  x = tape.Scale(x, std::sqrt(static_cast<double>(config_.embed_dim)));
  x = tape.Dropout(tape.AddConstant(x, positions_.topRows(n)));
  for (const EncLayerIdx& L : enc.layers) {
    ad::Var h = tape.LayerNorm(x, tape.Param(L.ln1_g), tape.Param(L.ln1_b));
    x = tape.Add(x, tape.Dropout(AttentionBlock(tape, L.attn, h, h, false)));
    h = tape.LayerNorm(x, tape.Param(L.ln2_g), tape.Param(L.ln2_b));
    ad::Var f = tape.Gelu(tape.AddRow(tape.MatMul(h, tape.Param(L.w1)),
                                      tape.Param(L.b1)));
    f = tape.AddRow(tape.MatMul(f, tape.Param(L.w2)), tape.Param(L.b2));
    x = tape.Add(x, tape.Dropout(f));
  }
  return tape.LayerNorm(x, tape.Param(enc.lnf_g), tape.Param(enc.lnf_b));
}

ad::Var Model::DecoderLogitsOnTape(ad::Tape& tape, Head head, ad::Var memory,
                                   std::span<const TokenId> target) const {
  Require(!target.empty(), "empty decoder target");
  Require(target.size() <= static_cast<std::size_t>(config_.max_output_len),
          "decoder target longer than max_output_len");
  const EncoderIdx& enc = EncoderFor(head);
  const DecoderIdx& dec = DecoderFor(head);
  std::vector<TokenId> inputs;
  inputs.reserve(target.size());
  inputs.push_back(kBos);
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  const auto n = static_cast<Eigen::Index>(inputs.size());
  ad::Var embed = tape.Param(enc.embed);
  ad::Var x = tape.Embed(embed, inputs);
  x = tape.Scale(x, std::sqrt(static_cast<double>(config_.embed_dim)));
  x = tape.Dropout(tape.AddConstant(x, positions_.topRows(n)));
  for (const DecLayerIdx& L : dec.layers) {
    ad::Var h = tape.LayerNorm(x, tape.Param(L.ln1_g), tape.Param(L.ln1_b));
    x = tape.Add(x, tape.Dropout(AttentionBlock(tape, L.self, h, h, true)));
    h = tape.LayerNorm(x, tape.Param(L.ln2_g), tape.Param(L.ln2_b));
    x = tape.Add(x, tape.Dropout(AttentionBlock(tape, L.cross, h, memory, false)));
    h = tape.LayerNorm(x, tape.Param(L.ln3_g), tape.Param(L.ln3_b));
    ad::Var f = tape.Gelu(tape.AddRow(tape.MatMul(h, tape.Param(L.w1)),
                                      tape.Param(L.b1)));
    f = tape.AddRow(tape.MatMul(f, tape.Param(L.w2)), tape.Param(L.b2));
    x = tape.Add(x, tape.Dropout(f));
  }
  x = tape.LayerNorm(x, tape.Param(dec.lnf_g), tape.Param(dec.lnf_b));
  // Tied projection scaled by 1/sqrt(d) so initial logits are near uniform.
  x = tape.Scale(x, OutputScale(config_.embed_dim));
  return tape.AddRow(tape.MatMulT(x, embed), tape.Param(dec.out_bias));
}

ad::Var Model::DecoderLossOnTape(ad::Tape& tape, Head head, ad::Var memory,
                                 std::span<const TokenId> target) const {
  for (TokenId t : target)
    Require(t >= 0 && t < config_.vocab_size,
            "target token " + std::to_string(t) + " outside vocabulary");
  return tape.CrossEntropySum(DecoderLogitsOnTape(tape, head, memory, target),
                              target);
}

EncoderState Model::Encode(std::span<const TokenId> input) const {
  const std::vector<TokenId> ids = ClampInput(input);
  EncoderState state;
  {
    ad::Tape tape(params_, nullptr);
    state.retrieval =
        std::make_shared<const Mat>(tape.value(EncodeOnTape(tape, Head::kRetrieval, ids)));
  }
  if (config_.share_encoder) {
    state.qa = state.retrieval;
  } else {
    ad::Tape tape(params_, nullptr);
    state.qa = std::make_shared<const Mat>(tape.value(EncodeOnTape(tape, Head::kQa, ids)));
  }
  return state;
}

Mat Model::TeacherForcedLogProbs(Head head, const EncoderState& state,
                                 std::span<const TokenId> target) const {
  ad::Tape tape(params_, nullptr);
  ad::Var memory = tape.Constant(state.For(head));
  Mat logits = tape.value(DecoderLogitsOnTape(tape, head, memory, target));
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    logits.row(i) = LogSoftmax(logits.row(i)).transpose();
  return logits;
}

IncrementalDecoder Model::StartDecoder(Head head,
                                       const EncoderState& state) const {
  const DecoderIdx& dec = DecoderFor(head);
  const Mat& memory = state.For(head);
  auto cross = std::make_shared<IncrementalDecoder::CrossCache>();
  for (const DecLayerIdx& L : dec.layers) {
    Mat k, v;
    k.noalias() = memory * P(L.cross.wk);
    v.noalias() = memory * P(L.cross.wv);
    cross->keys.push_back(std::move(k));
    cross->values.push_back(std::move(v));
  }
  IncrementalDecoder d;
  d.model_ = this;
  d.head_ = head;
  d.cross_ = std::move(cross);
  d.self_.resize(dec.layers.size());
  for (auto& c : d.self_) {
    c.keys.resize(0, config_.embed_dim);
    c.values.resize(0, config_.embed_dim);
  }
  return d;
}

namespace {

// One query row against m keys; mirrors ad::Tape::Attention.
Eigen::RowVectorXd AttendRow(const Eigen::RowVectorXd& q, const Mat& keys,
                             const Mat& values, int heads) {
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Eigen::RowVectorXd out(d);
  for (int h = 0; h < heads; ++h) {
    Mat s;
    s.noalias() = q.middleCols(h * dh, dh) * keys.middleCols(h * dh, dh).transpose();
    s *= scale;
    ad::SoftmaxRowsInPlace(s);
    out.middleCols(h * dh, dh).noalias() = s * values.middleCols(h * dh, dh);
  }
  return out;
}

}  // namespace

Eigen::VectorXd IncrementalDecoder::Step(TokenId token) {
  const Model& m = *model_;
  const ModelConfig& cfg = m.config_;
  Require(token >= 0 && token < cfg.vocab_size,
          "decoder token " + std::to_string(token) + " outside vocabulary");
  Require(position_ <= cfg.max_output_len,
          "decoding beyond max_output_len");
  const Model::EncoderIdx& enc = m.EncoderFor(head_);
  const Model::DecoderIdx& dec = m.DecoderFor(head_);
  const Mat& embed = m.P(enc.embed);

  Mat x = embed.row(token) * std::sqrt(static_cast<double>(cfg.embed_dim));
  x += m.positions_.row(position_);
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    const Model::DecLayerIdx& L = dec.layers[l];
    LayerCache& cache = self_[l];

    Mat h = ad::LayerNormForward(x, m.P(L.ln1_g), m.P(L.ln1_b)).out;
    const Eigen::Index t = cache.keys.rows();
    cache.keys.conservativeResize(t + 1, Eigen::NoChange);
    cache.values.conservativeResize(t + 1, Eigen::NoChange);
    cache.keys.row(t).noalias() = h * m.P(L.self.wk);
    cache.values.row(t).noalias() = h * m.P(L.self.wv);
    Eigen::RowVectorXd q = h * m.P(L.self.wq);
    Eigen::RowVectorXd o = AttendRow(q, cache.keys, cache.values, cfg.heads);
    x.noalias() += o * m.P(L.self.wo);
    x += m.P(L.self.bo);

    h = ad::LayerNormForward(x, m.P(L.ln2_g), m.P(L.ln2_b)).out;
    q = h * m.P(L.cross.wq);
    o = AttendRow(q, cross_->keys[l], cross_->values[l], cfg.heads);
    x.noalias() += o * m.P(L.cross.wo);
    x += m.P(L.cross.bo);

    h = ad::LayerNormForward(x, m.P(L.ln3_g), m.P(L.ln3_b)).out;
    Mat f = h * m.P(L.w1);
    f += m.P(L.b1);
    f = f.unaryExpr([](double v) { return ad::Gelu(v); });
    x.noalias() += f * m.P(L.w2);
    x += m.P(L.b2);
  }
  x = ad::LayerNormForward(x, m.P(dec.lnf_g), m.P(dec.lnf_b)).out;
  x *= OutputScale(m.config_.embed_dim);
  Eigen::RowVectorXd logits = x * embed.transpose();
  logits += m.P(dec.out_bias);
  ++position_;
  return LogSoftmax(logits);
}

}  // namespace genret
