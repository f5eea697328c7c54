#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

// Compact post-LN transformer encoder with a linear head on the first
// ([CLS]) position. Double precision, manual backward pass. Only the real
// tokens of a sequence are processed, so results never depend on padding or
// on other sequences in a batch.
namespace triage::nn {

using Matrix = Eigen::MatrixXd;
using Params = std::vector<Matrix>;

enum class Pooling { Cls, Mean };

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t max_positions = 128;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t layers = 2;
  std::size_t num_labels = 14;
  double init_std = 0.02;
  double ln_eps = 1e-5;
  Pooling pooling = Pooling::Cls;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// Parameter layout: token emb, position emb, embedding LN (gain, bias), then
// per layer 16 tensors (see LayerSlot), then head weight and bias.
enum LayerSlot : std::size_t {
  kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
  kLn1G, kLn1B, kW1, kB1, kW2, kB2, kLn2G, kLn2B,
  kLayerSlots
};
inline constexpr std::size_t kTokEmb = 0;
inline constexpr std::size_t kPosEmb = 1;
inline constexpr std::size_t kEmbLnG = 2;
inline constexpr std::size_t kEmbLnB = 3;
inline constexpr std::size_t kFirstLayer = 4;

class TransformerEncoder {
 public:
  TransformerEncoder(EncoderConfig config, std::uint64_t seed);
  TransformerEncoder(EncoderConfig config, Params params);

  const EncoderConfig& config() const { return config_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

  std::size_t layer_index(std::size_t layer, LayerSlot slot) const {
    return kFirstLayer + layer * kLayerSlots + slot;
  }
  std::size_t head_weight_index() const { return kFirstLayer + config_.layers * kLayerSlots; }
  std::size_t head_bias_index() const { return head_weight_index() + 1; }

  // Final hidden states, one row per token (ids exclude padding).
  Matrix hidden(std::span<const int> ids) const;
  Eigen::VectorXd logits(std::span<const int> ids) const;
  Eigen::RowVectorXd pool(const Matrix& hidden) const;

  // Adds weight * d(cross-entropy)/d(params) into `grads`; returns the loss.
  double accumulate_gradient(std::span<const int> ids, std::size_t label, Params& grads,
                             double weight) const;

  Params zero_like() const;
  // True for tensors that receive decoupled weight decay (not biases or norms).
  std::vector<bool> decay_mask() const;
  std::size_t parameter_count() const;

  // Fresh head, e.g. when starting from another model's encoder.
  void reset_head(std::size_t num_labels, std::uint64_t seed);

  std::string serialize() const;
  static Params deserialize(const std::string& bytes);

 private:
  struct Cache;
  void forward(std::span<const int> ids, Cache* cache, Matrix& out) const;

  EncoderConfig config_;
  Params params_;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(Params& params, const Params& grads, double lr) = 0;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay applied to the masked tensors.
class AdamW final : public Optimizer {
 public:
  AdamW(AdamWConfig config, std::vector<bool> decay_mask);
  void step(Params& params, const Params& grads, double lr) override;
  std::size_t steps() const { return t_; }

 private:
  AdamWConfig config_;
  std::vector<bool> decay_;
  Params m_, v_;
  std::size_t t_ = 0;
};

double gelu(double x);
double gelu_grad(double x);

}  // namespace triage::nn
