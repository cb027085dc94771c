#include "sdnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace sdnn::nn {

namespace {

std::string layer_tag(std::size_t index, LayerKind kind) {
  return "layer " + std::to_string(index) + " (" + kind_name(kind) + ")";
}

[[noreturn]] void shape_error(std::size_t index, LayerKind kind,
                              const std::string& detail) {
  throw Error(layer_tag(index, kind) + ": " + detail);
}

// Output spatial extent for a kernel sweep; throws when the window does not
// fit at all.
std::size_t conv_extent(std::size_t in, int kernel, int stride, int padding,
                        std::size_t index, LayerKind kind) {
  const long padded = static_cast<long>(in) + 2L * padding;
  if (padded < kernel)
    shape_error(index, kind,
                "kernel " + std::to_string(kernel) + " exceeds padded input " +
                    std::to_string(padded));
  return static_cast<std::size_t>((padded - kernel) / stride + 1);
}

std::vector<std::size_t> layer_output_shape(const Layer& layer,
                                            const std::vector<std::size_t>& in,
                                            std::size_t index) {
  switch (layer.kind) {
    case LayerKind::fully_connected: {
      if (in.size() != 1)
        shape_error(index, layer.kind,
                    "requires rank-1 input, got " + shape_string(in) +
                        "; insert a flatten layer");
      const std::size_t in_features = layer.weights.shape.at(1);
      if (in[0] != in_features)
        shape_error(index, layer.kind,
                    "expected " + std::to_string(in_features) +
                        " input features, got " + std::to_string(in[0]));
      return {layer.weights.shape.at(0)};
    }
    case LayerKind::conv2d: {
      if (in.size() != 3)
        shape_error(index, layer.kind,
                    "requires [channels, height, width] input, got " +
                        shape_string(in));
      if (in[0] != layer.weights.shape.at(1))
        shape_error(index, layer.kind,
                    "expected " + std::to_string(layer.weights.shape.at(1)) +
                        " input channels, got " + std::to_string(in[0]));
      return {layer.weights.shape.at(0),
              conv_extent(in[1], layer.kernel_h, layer.stride, layer.padding,
                          index, layer.kind),
              conv_extent(in[2], layer.kernel_w, layer.stride, layer.padding,
                          index, layer.kind)};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::max_pool: {
      if (in.size() != 3)
        shape_error(index, layer.kind,
                    "requires [channels, height, width] input, got " +
                        shape_string(in));
      return {in[0],
              conv_extent(in[1], layer.kernel_h, layer.stride, 0, index,
                          layer.kind),
              conv_extent(in[2], layer.kernel_w, layer.stride, 0, index,
                          layer.kind)};
    }
    case LayerKind::global_avg_pool:
      if (in.size() != 3)
        shape_error(index, layer.kind,
                    "requires [channels, height, width] input, got " +
                        shape_string(in));
      return {in[0]};
    case LayerKind::softmax:
      if (in.size() != 1)
        shape_error(index, layer.kind,
                    "requires rank-1 input, got " + shape_string(in));
      return in;
    case LayerKind::flatten:
      return {Tensor::numel_of(in)};
  }
  throw Error("unknown layer kind");
}

// ---------------------------------------------------------------------------
// per-layer forward
// ---------------------------------------------------------------------------

Tensor fc_forward(const Layer& l, const Tensor& x) {
  const std::size_t out_n = l.weights.shape[0], in_n = l.weights.shape[1];
  Tensor y({out_n});
  const double* w = l.weights.data.data();
  for (std::size_t o = 0; o < out_n; ++o) {
    double acc = l.bias[o];
    const double* row = w + o * in_n;
    for (std::size_t j = 0; j < in_n; ++j) acc += row[j] * x[j];
    y[o] = acc;
  }
  return y;
}

Tensor conv_forward(const Layer& l, const Tensor& x,
                    const std::vector<std::size_t>& out_shape) {
  const std::size_t O = l.weights.shape[0], C = l.weights.shape[1];
  const std::size_t KH = l.weights.shape[2], KW = l.weights.shape[3];
  const std::size_t H = x.shape[1], W = x.shape[2];
  const std::size_t OH = out_shape[1], OW = out_shape[2];
  const int s = l.stride, p = l.padding;
  Tensor y(out_shape);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double acc = l.bias[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < KH; ++u) {
            const long iy = static_cast<long>(oy) * s - p + static_cast<long>(u);
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            for (std::size_t v = 0; v < KW; ++v) {
              const long ix = static_cast<long>(ox) * s - p + static_cast<long>(v);
              if (ix < 0 || ix >= static_cast<long>(W)) continue;
              acc += l.weights[((o * C + c) * KH + u) * KW + v] *
                     x[(c * H + static_cast<std::size_t>(iy)) * W +
                       static_cast<std::size_t>(ix)];
            }
          }
        y[(o * OH + oy) * OW + ox] = acc;
      }
  return y;
}

Tensor maxpool_forward(const Layer& l, const Tensor& x,
                       const std::vector<std::size_t>& out_shape) {
  const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
  const std::size_t OH = out_shape[1], OW = out_shape[2];
  Tensor y(out_shape);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        for (int u = 0; u < l.kernel_h; ++u)
          for (int v = 0; v < l.kernel_w; ++v) {
            const std::size_t iy = oy * l.stride + static_cast<std::size_t>(u);
            const std::size_t ix = ox * l.stride + static_cast<std::size_t>(v);
            best = std::max(best, x[(c * H + iy) * W + ix]);
          }
        y[(c * OH + oy) * OW + ox] = best;
      }
  return y;
}

Tensor softmax_forward(const Tensor& x) {
  Tensor y(x.shape);
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x.data) m = std::max(m, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    y[i] = std::exp(x[i] - m);
    sum += y[i];
  }
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] /= sum;
  return y;
}

}  // namespace

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::softmax: return "softmax";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

LayerKind kind_from_name(const std::string& name) {
  static const std::pair<const char*, LayerKind> table[] = {
      {"fully_connected", LayerKind::fully_connected},
      {"conv2d", LayerKind::conv2d},
      {"relu", LayerKind::relu},
      {"max_pool", LayerKind::max_pool},
      {"global_avg_pool", LayerKind::global_avg_pool},
      {"softmax", LayerKind::softmax},
      {"flatten", LayerKind::flatten},
  };
  for (const auto& [n, k] : table)
    if (name == n) return k;
  throw Error("unknown layer kind: \"" + name + "\"");
}

std::vector<std::vector<std::size_t>> NetworkModel::activation_shapes() const {
  std::vector<std::vector<std::size_t>> shapes;
  shapes.reserve(layers.size() + 1);
  shapes.push_back(input_shape);
  for (std::size_t i = 0; i < layers.size(); ++i)
    shapes.push_back(layer_output_shape(layers[i], shapes.back(), i));
  return shapes;
}

void NetworkModel::validate() const {
  if (layers.empty()) throw Error("model has no layers");
  if (input_shape.empty()) throw Error("model has no input shape");
  const auto shapes = activation_shapes();
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::softmax && i + 1 != layers.size())
      throw Error(layer_tag(i, layers[i].kind) +
                  ": softmax is only permitted as the final layer");
  const auto& out = shapes.back();
  if (out.size() != 1 || out[0] != class_count)
    throw Error("model output shape " + shape_string(out) +
                " does not match class count " + std::to_string(class_count));
}

std::size_t NetworkModel::weight_parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.numel();
  return n;
}

std::vector<std::size_t> NetworkModel::weight_nonzeros() const {
  std::vector<std::size_t> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.weights.nonzero_count());
  return out;
}

NetworkModel model_from_json(const nlohmann::json& doc) {
  NetworkModel m;
  try {
    m.input_shape = doc.at("input_shape").get<std::vector<std::size_t>>();
    m.class_count = doc.at("classes").get<std::size_t>();
    std::vector<std::size_t> cur = m.input_shape;
    for (const auto& spec : doc.at("layers")) {
      Layer l;
      l.kind = kind_from_name(spec.at("kind").get<std::string>());
      switch (l.kind) {
        case LayerKind::fully_connected: {
          if (cur.size() != 1)
            throw Error("fully_connected at layer " +
                        std::to_string(m.layers.size()) +
                        " requires rank-1 input " + shape_string(cur) +
                        "; insert a flatten layer");
          const std::size_t out_n = spec.at("out").get<std::size_t>();
          l.weights = Tensor({out_n, cur[0]});
          l.bias = Tensor({out_n});
          break;
        }
        case LayerKind::conv2d: {
          const std::size_t out_c = spec.at("out_channels").get<std::size_t>();
          const int k = spec.at("kernel").get<int>();
          l.kernel_h = l.kernel_w = k;
          l.stride = spec.value("stride", 1);
          l.padding = spec.value("padding", 0);
          if (cur.size() != 3)
            throw Error("conv2d at layer " + std::to_string(m.layers.size()) +
                        " requires [channels, height, width] input, got " +
                        shape_string(cur));
          l.weights = Tensor({out_c, cur[0], static_cast<std::size_t>(k),
                              static_cast<std::size_t>(k)});
          l.bias = Tensor({out_c});
          break;
        }
        case LayerKind::max_pool: {
          const int k = spec.at("kernel").get<int>();
          l.kernel_h = l.kernel_w = k;
          l.stride = spec.value("stride", k);
          break;
        }
        default:
          break;
      }
      if (l.kind == LayerKind::conv2d || l.kind == LayerKind::max_pool) {
        if (l.stride < 1)
          throw Error("layer " + std::to_string(m.layers.size()) +
                      ": stride must be at least 1");
      }
      cur = layer_output_shape(l, cur, m.layers.size());
      m.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("architecture document: ") + e.what());
  }
  m.validate();
  return m;
}

NetworkModel model_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open architecture file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("architecture file " + path + ": " + e.what());
  }
  return model_from_json(doc);
}

void init_glorot(NetworkModel& model, std::uint64_t seed) {
  auto rng = seeded_rng(seed, 0x1217'0001);  // init stream
  for (auto& l : model.layers) {
    if (!l.has_params()) continue;
    std::size_t fan_in, fan_out;
    if (l.kind == LayerKind::fully_connected) {
      fan_out = l.weights.shape[0];
      fan_in = l.weights.shape[1];
    } else {  // conv2d
      const std::size_t field = l.weights.shape[2] * l.weights.shape[3];
      fan_out = l.weights.shape[0] * field;
      fan_in = l.weights.shape[1] * field;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-a, a);
    for (double& w : l.weights.data) w = unif(rng);
    l.bias.fill(0.0);
  }
}

double decay_term(const NetworkModel& model, const LossSpec& spec) {
  if (spec.weight_decay == 0.0) return 0.0;
  double sq = 0.0;
  for (const auto& l : model.layers)
    for (double w : l.weights.data) sq += w * w;
  if (spec.form == LossSpec::DecayForm::squared_frobenius)
    return spec.weight_decay * sq;
  return spec.weight_decay * std::sqrt(sq);
}

Gradients Gradients::zeros_like(const NetworkModel& model) {
  Gradients g;
  g.weights.reserve(model.layers.size());
  g.biases.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    g.weights.emplace_back(l.has_params() ? Tensor(l.weights.shape) : Tensor());
    g.biases.emplace_back(l.has_params() ? Tensor(l.bias.shape) : Tensor());
  }
  return g;
}

void Gradients::setZero() {
  for (auto& t : weights) t.fill(0.0);
  for (auto& t : biases) t.fill(0.0);
}

void Gradients::scale(double factor) {
  for (auto& t : weights)
    for (double& v : t.data) v *= factor;
  for (auto& t : biases)
    for (double& v : t.data) v *= factor;
}

OptimizerState OptimizerState::for_model(const NetworkModel& model, double lr,
                                         double momentum) {
  OptimizerState st;
  st.learning_rate = lr;
  st.momentum = momentum;
  for (const auto& l : model.layers) {
    st.weight_velocity.emplace_back(l.has_params() ? Tensor(l.weights.shape)
                                                   : Tensor());
    st.bias_velocity.emplace_back(l.has_params() ? Tensor(l.bias.shape)
                                                 : Tensor());
  }
  return st;
}

std::vector<Tensor> forward(const NetworkModel& model, const Tensor& x) {
  if (!x.all_finite()) throw Error("forward: non-finite input");
  Tensor a = x;
  if (a.shape != model.input_shape) {
    if (a.numel() != Tensor::numel_of(model.input_shape))
      throw Error("input with " + std::to_string(a.numel()) +
                  " values cannot be reshaped to model input " +
                  shape_string(model.input_shape));
    a.shape = model.input_shape;
  }
  std::vector<Tensor> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(std::move(a));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    const Tensor& in = acts.back();
    const auto out_shape = layer_output_shape(l, in.shape, i);
    switch (l.kind) {
      case LayerKind::fully_connected:
        acts.push_back(fc_forward(l, in));
        break;
      case LayerKind::conv2d:
        acts.push_back(conv_forward(l, in, out_shape));
        break;
      case LayerKind::relu: {
        Tensor y(in.shape);
        for (std::size_t j = 0; j < in.numel(); ++j)
          y[j] = in[j] > 0.0 ? in[j] : 0.0;
        acts.push_back(std::move(y));
        break;
      }
      case LayerKind::max_pool:
        acts.push_back(maxpool_forward(l, in, out_shape));
        break;
      case LayerKind::global_avg_pool: {
        const std::size_t C = in.shape[0], plane = in.shape[1] * in.shape[2];
        Tensor y({C});
        for (std::size_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < plane; ++j) acc += in[c * plane + j];
          y[c] = acc / static_cast<double>(plane);
        }
        acts.push_back(std::move(y));
        break;
      }
      case LayerKind::softmax:
        acts.push_back(softmax_forward(in));
        break;
      case LayerKind::flatten: {
        Tensor y = in;
        y.shape = out_shape;
        acts.push_back(std::move(y));
        break;
      }
    }
  }
  return acts;
}

double loss_from_activations(const NetworkModel& model,
                             const std::vector<Tensor>& acts,
                             std::size_t label, const LossSpec& spec) {
  if (model.layers.empty() || model.layers.back().kind != LayerKind::softmax)
    throw Error("loss requires a softmax final layer");
  const Tensor& p = acts.back();
  if (label >= p.numel())
    throw Error("label " + std::to_string(label) + " out of range for " +
                std::to_string(p.numel()) + " classes");
  double prob = p[label];
  if (prob < 1e-12) {
    warn("predicted probability " + std::to_string(prob) +
         " clamped to 1e-12 before log");
    prob = 1e-12;
  }
  return -std::log(prob) + decay_term(model, spec);
}

double loss(const NetworkModel& model, const Tensor& x, std::size_t label,
            const LossSpec& spec) {
  return loss_from_activations(model, forward(model, x), label, spec);
}

void backward_into(const NetworkModel& model, const std::vector<Tensor>& acts,
                   std::size_t label, Gradients& out) {
  const std::size_t L = model.layers.size();
  if (L == 0 || model.layers.back().kind != LayerKind::softmax)
    throw Error("backward requires a softmax final layer");
  if (acts.size() != L + 1)
    throw Error("backward: expected " + std::to_string(L + 1) +
                " activations, got " + std::to_string(acts.size()));

  // Softmax + cross-entropy combined: gradient w.r.t. the softmax input.
  Tensor delta = acts[L];
  if (label >= delta.numel())
    throw Error("label " + std::to_string(label) + " out of range for " +
                std::to_string(delta.numel()) + " classes");
  delta[label] -= 1.0;

  for (std::size_t step = 1; step < L; ++step) {
    const std::size_t i = L - 1 - step;  // layer index below the softmax
    const Layer& l = model.layers[i];
    const Tensor& in = acts[i];
    Tensor next;  // gradient w.r.t. this layer's input
    switch (l.kind) {
      case LayerKind::fully_connected: {
        const std::size_t out_n = l.weights.shape[0], in_n = l.weights.shape[1];
        Tensor& dW = out.weights[i];
        Tensor& db = out.biases[i];
        next = Tensor({in_n});
        for (std::size_t o = 0; o < out_n; ++o) {
          const double d = delta[o];
          db[o] += d;
          double* dw_row = dW.data.data() + o * in_n;
          const double* w_row = l.weights.data.data() + o * in_n;
          for (std::size_t j = 0; j < in_n; ++j) {
            dw_row[j] += d * in[j];
            next[j] += w_row[j] * d;
          }
        }
        break;
      }
      case LayerKind::conv2d: {
        const std::size_t O = l.weights.shape[0], C = l.weights.shape[1];
        const std::size_t KH = l.weights.shape[2], KW = l.weights.shape[3];
        const std::size_t H = in.shape[1], W = in.shape[2];
        const std::size_t OH = delta.shape[1], OW = delta.shape[2];
        const int s = l.stride, p = l.padding;
        Tensor& dW = out.weights[i];
        Tensor& db = out.biases[i];
        next = Tensor(in.shape);
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
              const double d = delta[(o * OH + oy) * OW + ox];
              db[o] += d;
              for (std::size_t c = 0; c < C; ++c)
                for (std::size_t u = 0; u < KH; ++u) {
                  const long iy =
                      static_cast<long>(oy) * s - p + static_cast<long>(u);
                  if (iy < 0 || iy >= static_cast<long>(H)) continue;
                  for (std::size_t v = 0; v < KW; ++v) {
                    const long ix =
                        static_cast<long>(ox) * s - p + static_cast<long>(v);
                    if (ix < 0 || ix >= static_cast<long>(W)) continue;
                    const std::size_t in_idx =
                        (c * H + static_cast<std::size_t>(iy)) * W +
                        static_cast<std::size_t>(ix);
                    dW[((o * C + c) * KH + u) * KW + v] += d * in[in_idx];
                    next[in_idx] += d * l.weights[((o * C + c) * KH + u) * KW + v];
                  }
                }
            }
        break;
      }
      case LayerKind::relu: {
        next = Tensor(in.shape);
        for (std::size_t j = 0; j < in.numel(); ++j)
          next[j] = in[j] < 0.0 ? 0.0 : delta[j];
        break;
      }
      case LayerKind::max_pool: {
        const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
        const std::size_t OH = delta.shape[1], OW = delta.shape[2];
        next = Tensor(in.shape);
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
              // recompute the argmax; first maximum wins, deterministically
              std::size_t best_idx = 0;
              double best = -std::numeric_limits<double>::infinity();
              for (int u = 0; u < l.kernel_h; ++u)
                for (int v = 0; v < l.kernel_w; ++v) {
                  const std::size_t iy =
                      oy * l.stride + static_cast<std::size_t>(u);
                  const std::size_t ix =
                      ox * l.stride + static_cast<std::size_t>(v);
                  const std::size_t idx = (c * H + iy) * W + ix;
                  if (in[idx] > best) {
                    best = in[idx];
                    best_idx = idx;
                  }
                }
              next[best_idx] += delta[(c * OH + oy) * OW + ox];
            }
        break;
      }
      case LayerKind::global_avg_pool: {
        const std::size_t C = in.shape[0], plane = in.shape[1] * in.shape[2];
        next = Tensor(in.shape);
        for (std::size_t c = 0; c < C; ++c) {
          const double d = delta[c] / static_cast<double>(plane);
          for (std::size_t j = 0; j < plane; ++j) next[c * plane + j] = d;
        }
        break;
      }
      case LayerKind::flatten: {
        next = delta;
        next.shape = in.shape;
        break;
      }
      case LayerKind::softmax:
        throw Error(layer_tag(i, l.kind) +
                    ": softmax is only permitted as the final layer");
    }
    delta = std::move(next);
  }
}

void add_decay_gradients(const NetworkModel& model, const LossSpec& spec,
                         Gradients& out) {
  if (spec.weight_decay == 0.0) return;
  if (spec.form == LossSpec::DecayForm::squared_frobenius) {
    for (std::size_t i = 0; i < model.layers.size(); ++i)
      for (std::size_t j = 0; j < model.layers[i].weights.numel(); ++j)
        out.weights[i][j] += 2.0 * spec.weight_decay * model.layers[i].weights[j];
    return;
  }
  // frobenius_norm over the concatenated weights; subgradient 0 at the origin
  double sq = 0.0;
  for (const auto& l : model.layers)
    for (double w : l.weights.data) sq += w * w;
  if (sq == 0.0) return;
  const double inv_norm = 1.0 / std::sqrt(sq);
  for (std::size_t i = 0; i < model.layers.size(); ++i)
    for (std::size_t j = 0; j < model.layers[i].weights.numel(); ++j)
      out.weights[i][j] +=
          spec.weight_decay * model.layers[i].weights[j] * inv_norm;
}

Gradients backward(const NetworkModel& model, const std::vector<Tensor>& acts,
                   std::size_t label, const LossSpec& spec) {
  Gradients g = Gradients::zeros_like(model);
  backward_into(model, acts, label, g);
  add_decay_gradients(model, spec, g);
  return g;
}

void sgd_step(NetworkModel& model, const Gradients& grads,
              OptimizerState& opt) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Layer& l = model.layers[i];
    if (!l.has_params()) continue;
    Tensor& vw = opt.weight_velocity[i];
    for (std::size_t j = 0; j < l.weights.numel(); ++j) {
      vw[j] = opt.momentum * vw[j] - opt.learning_rate * grads.weights[i][j];
      l.weights[j] += vw[j];
    }
    Tensor& vb = opt.bias_velocity[i];
    for (std::size_t j = 0; j < l.bias.numel(); ++j) {
      vb[j] = opt.momentum * vb[j] - opt.learning_rate * grads.biases[i][j];
      l.bias[j] += vb[j];
    }
  }
}

EvalResult evaluate(const NetworkModel& model, const data::Dataset& ds,
                    const LossSpec& spec) {
  if (ds.size() == 0) throw Error("evaluate: empty dataset");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto acts = forward(model, ds.sample(i));
    const Tensor& p = acts.back();
    std::size_t pred = 0;
    for (std::size_t c = 1; c < p.numel(); ++c)
      if (p[c] > p[pred]) pred = c;  // ties keep the lower class index
    if (pred == static_cast<std::size_t>(ds.labels[i])) ++correct;
    loss_sum += loss_from_activations(model, acts,
                                      static_cast<std::size_t>(ds.labels[i]),
                                      spec);
  }
  return {static_cast<double>(correct) / static_cast<double>(ds.size()),
          loss_sum / static_cast<double>(ds.size())};
}

}  // namespace sdnn::nn
