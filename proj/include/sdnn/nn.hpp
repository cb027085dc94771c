#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdnn/dataset.hpp"
#include "sdnn/tensor.hpp"

namespace sdnn::nn {

// ============================================================================
// model
// ============================================================================

// Tag values are stable: they double as the layer kind byte in checkpoints.
enum class LayerKind : std::uint8_t {
  fully_connected = 1,
  conv2d = 2,
  relu = 3,
  max_pool = 4,
  global_avg_pool = 5,
  softmax = 6,
  flatten = 7,
};

const char* kind_name(LayerKind kind);
LayerKind kind_from_name(const std::string& name);

struct Layer {
  LayerKind kind;
  Tensor weights;  // fully_connected: [out, in]; conv2d: [out_c, in_c, kh, kw]
  Tensor bias;     // fully_connected: [out]; conv2d: [out_c]
  int kernel_h = 0, kernel_w = 0;  // conv2d, max_pool
  int stride = 1;                  // conv2d, max_pool
  int padding = 0;                 // conv2d only

  bool has_params() const {
    return kind == LayerKind::fully_connected || kind == LayerKind::conv2d;
  }
};

struct NetworkModel {
  std::vector<Layer> layers;
  std::vector<std::size_t> input_shape;
  std::size_t class_count = 0;

  // Shapes of X^(0..L) when composing from input_shape; throws with the
  // offending layer index on any mismatch.
  std::vector<std::vector<std::size_t>> activation_shapes() const;

  // Full structural check: shapes compose, the final output has class_count
  // entries, and softmax appears only as the final layer.
  void validate() const;

  std::size_t weight_parameter_count() const;
  std::vector<std::size_t> weight_nonzeros() const;  // per layer, 0 for param-free
};

// Architecture document -> model with zero-valued parameters.  See
// configs/mlp_784_128_10.json for the schema.
NetworkModel model_from_json(const nlohmann::json& doc);
NetworkModel model_from_json_file(const std::string& path);

// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
void init_glorot(NetworkModel& model, std::uint64_t seed);

// ============================================================================
// loss / optimizer
// ============================================================================

struct LossSpec {
  enum class DecayForm { squared_frobenius, frobenius_norm };
  double weight_decay = 0.0;  // lambda
  DecayForm form = DecayForm::squared_frobenius;
};

// The lambda-scaled decay term over all weight tensors (biases excluded):
// squared_frobenius -> lambda * sum w^2; frobenius_norm -> lambda * ||W||_F
// over the concatenation of all weight tensors (subgradient 0 at W = 0).
double decay_term(const NetworkModel& model, const LossSpec& spec);

struct Gradients {
  std::vector<Tensor> weights;  // aligned with model.layers; empty if no params
  std::vector<Tensor> biases;

  static Gradients zeros_like(const NetworkModel& model);
  void setZero();
  void scale(double factor);
};

struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::vector<Tensor> weight_velocity;  // aligned with model.layers
  std::vector<Tensor> bias_velocity;

  static OptimizerState for_model(const NetworkModel& model, double lr,
                                  double momentum);
};

// ============================================================================
// engine operations
// ============================================================================

// Activations X^(0..L); X^0 is the (reshaped) input.  The input may carry any
// shape whose element count matches the model's input_shape.
std::vector<Tensor> forward(const NetworkModel& model, const Tensor& x);

// Cross-entropy of the true class plus the decay term.  The predicted
// probability is clamped at 1e-12 before the log (recorded as a warning).
// Requires a softmax-final model.
double loss(const NetworkModel& model, const Tensor& x, std::size_t label,
            const LossSpec& spec);
double loss_from_activations(const NetworkModel& model,
                             const std::vector<Tensor>& acts,
                             std::size_t label, const LossSpec& spec);

// Parameter gradients of loss() at the given forward activations.
Gradients backward(const NetworkModel& model, const std::vector<Tensor>& acts,
                   std::size_t label, const LossSpec& spec);
// Accumulating form: adds this sample's cross-entropy gradients into `out`
// (decay gradients are not included; add_decay_gradients covers them once
// per batch).
void backward_into(const NetworkModel& model, const std::vector<Tensor>& acts,
                   std::size_t label, Gradients& out);
void add_decay_gradients(const NetworkModel& model, const LossSpec& spec,
                         Gradients& out);

// v <- momentum * v - lr * g;  w <- w + v   (weights then biases, in order)
void sgd_step(NetworkModel& model, const Gradients& grads,
              OptimizerState& opt);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

// Accuracy (argmax with ties to the lowest class index) and mean loss over a
// dataset.  Throws on an empty dataset.
EvalResult evaluate(const NetworkModel& model, const data::Dataset& ds,
                    const LossSpec& spec = {});

}  // namespace sdnn::nn
