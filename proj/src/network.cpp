#include "csshap/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "csshap/error.hpp"
#include "csshap/random.hpp"

namespace csshap {

std::string to_string(ModelKind kind) { return kind == ModelKind::kCnn1d ? "cnn1d" : "mlp"; }

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cnn1d") return ModelKind::kCnn1d;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigurationError("unknown model kind '" + name + "'");
}

namespace {

struct Builder {
  Architecture arch;
  int channels = 1;
  int length = 0;

  void add(LayerSpec spec) {
    spec.param_offset = arch.param_count;
    spec.buffer_offset = arch.buffer_count;
    arch.param_count += spec.param_count;
    arch.buffer_count += spec.buffer_count;
    channels = spec.out_channels;
    length = spec.out_length;
    arch.layers.push_back(spec);
  }

  void conv(int out_channels, int kernel) {
    if (kernel < 1) throw ConfigurationError("kernel size must be positive");
    const int out_length = length - kernel + 1;
    if (out_length < 1) throw ConfigurationError("input too short for conv kernel " + std::to_string(kernel));
    LayerSpec s{LayerKind::kConv, channels, out_channels, length, out_length, kernel};
    s.param_count = static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(channels * kernel) +
                    static_cast<std::size_t>(out_channels);
    add(s);
  }
  void batch_norm() {
    LayerSpec s{LayerKind::kBatchNorm, channels, channels, length, length};
    s.param_count = 2 * static_cast<std::size_t>(channels);
    s.buffer_count = 2 * static_cast<std::size_t>(channels);
    add(s);
  }
  void relu() { add({LayerKind::kRelu, channels, channels, length, length}); }
  void max_pool() {
    if (length / 2 < 1) throw ConfigurationError("input too short for max-pool");
    add({LayerKind::kMaxPool2, channels, channels, length, length / 2});
  }
  void global_max_pool() { add({LayerKind::kGlobalMaxPool, channels, channels, length, 1}); }
  void dense(int out) {
    const int in = channels * length;
    LayerSpec s{LayerKind::kDense, in, out, 1, 1};
    s.in_channels = in;
    s.param_count = static_cast<std::size_t>(out) * static_cast<std::size_t>(in) + static_cast<std::size_t>(out);
    add(s);
  }
};

}  // namespace

Architecture Architecture::from_config(const ModelConfig& config) {
  if (config.class_count < 2) throw ConfigurationError("class_count must be >= 2");
  if (config.input_length < 1) throw ConfigurationError("input_length must be >= 1");
  for (int c : config.channels) {
    if (c < 1) throw ConfigurationError("channel/width entries must be positive");
  }
  for (int h : config.head_widths) {
    if (h < 1) throw ConfigurationError("head widths must be positive");
  }

  Builder b;
  b.length = static_cast<int>(config.input_length);
  b.arch.input_length = config.input_length;
  b.arch.class_count = config.class_count;

  if (config.kind == ModelKind::kCnn1d) {
    if (config.channels.empty()) throw ConfigurationError("cnn1d needs at least one conv block");
    if (config.kernel_sizes.size() != config.channels.size()) {
      throw ConfigurationError("kernel_sizes must have one entry per conv block");
    }
    for (std::size_t i = 0; i < config.channels.size(); ++i) {
      b.conv(config.channels[i], config.kernel_sizes[i]);
      b.batch_norm();
      b.relu();
      b.max_pool();
    }
    b.global_max_pool();
  } else {
    for (int w : config.channels) {
      b.dense(w);
      b.relu();
    }
  }
  for (int h : config.head_widths) {
    b.dense(h);
    b.relu();
  }
  b.dense(static_cast<int>(config.class_count));
  return b.arch;
}

std::string Architecture::describe() const {
  std::ostringstream out;
  out << "input 1x" << input_length;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv: out << " | conv(" << l.out_channels << "@" << l.kernel << ")"; break;
      case LayerKind::kBatchNorm: out << "-bn"; break;
      case LayerKind::kRelu: out << "-relu"; break;
      case LayerKind::kMaxPool2: out << "-maxpool(2) -> " << l.out_channels << "x" << l.out_length; break;
      case LayerKind::kGlobalMaxPool: out << " | globalmaxpool -> " << l.out_channels; break;
      case LayerKind::kDense: out << " | fc(" << l.out_channels << ")"; break;
    }
  }
  out << " | params " << param_count;
  return out.str();
}

template <typename T>
Network<T>::Network(Architecture arch)
    : arch_(std::move(arch)), params_(arch_.param_count, T{0}), buffers_(arch_.buffer_count, T{0}) {}

template <typename T>
void Network<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& l : arch_.layers) {
    T* p = params_.data() + l.param_offset;
    switch (l.kind) {
      case LayerKind::kConv:
      case LayerKind::kDense: {
        const int fan_in = l.kind == LayerKind::kConv ? l.in_channels * l.kernel : l.in_channels;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < l.param_count; ++i) p[i] = static_cast<T>(dist(rng));
        break;
      }
      case LayerKind::kBatchNorm: {
        const auto c = static_cast<std::size_t>(l.out_channels);
        for (std::size_t i = 0; i < c; ++i) {
          p[i] = T{1};
          p[c + i] = T{0};
          buffers_[l.buffer_offset + i] = T{0};
          buffers_[l.buffer_offset + c + i] = T{1};
        }
        break;
      }
      default: break;
    }
  }
}

namespace {

// Valid convolution, out[co][t] = bias[co] + sum_{ci,kk} w[co][ci][kk] x[ci][t+kk].
// Output tiles of kVecs vectors stay in registers across the (channel, tap)
// reduction; the last tile is aligned to the end and may overlap the previous
// one, which recomputes identical values.
template <typename T>
struct Vec64;
template <>
struct Vec64<float> {
  typedef float type __attribute__((vector_size(64)));
};
template <>
struct Vec64<double> {
  typedef double type __attribute__((vector_size(64)));
};

template <typename T>
void conv_valid(const T* x, std::size_t cin, std::size_t lin, const T* weights, const T* bias,
                std::size_t cout, std::size_t k, std::size_t lout, T* out) {
  using Vec = typename Vec64<T>::type;
  constexpr std::size_t kLanes = 64 / sizeof(T);
  constexpr std::size_t kVecs = 4;
  constexpr std::size_t kTile = kLanes * kVecs;
  if (lout < kTile) {
    for (std::size_t co = 0; co < cout; ++co) {
      const T* w = weights + co * cin * k;
      for (std::size_t t = 0; t < lout; ++t) {
        T acc = bias[co];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t kk = 0; kk < k; ++kk) acc += w[ci * k + kk] * x[ci * lin + t + kk];
        }
        out[co * lout + t] = acc;
      }
    }
    return;
  }
  for (std::size_t start = 0; start < lout; start += kTile) {
    const std::size_t t0 = std::min(start, lout - kTile);
    for (std::size_t co = 0; co < cout; ++co) {
      Vec acc[kVecs];
      for (auto& a : acc) a = Vec{} + bias[co];
      const T* w = weights + co * cin * k;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const T* xc = x + ci * lin + t0;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const Vec wk = Vec{} + w[ci * k + kk];
          for (std::size_t v = 0; v < kVecs; ++v) {
            Vec xv;
            std::memcpy(&xv, xc + kk + v * kLanes, sizeof(Vec));
            acc[v] += wk * xv;
          }
        }
      }
      std::memcpy(out + co * lout + t0, acc, sizeof(acc));
    }
  }
}

// Scratch buffers reused per thread by evaluation-mode inference.
template <typename T>
struct Scratch {
  std::vector<T> a;
  std::vector<T> b;
};

template <typename T>
Scratch<T>& thread_scratch() {
  thread_local Scratch<T> s;
  return s;
}

}  // namespace

template <typename T>
void Network<T>::logits(std::span<const T> input, std::span<double> out) const {
  if (input.size() != arch_.input_length) throw InvalidInputError("network input length mismatch");
  if (out.size() != arch_.class_count) throw InvalidInputError("network output length mismatch");
  auto& scratch = thread_scratch<T>();
  std::vector<T>* cur = &scratch.a;
  std::vector<T>* next = &scratch.b;
  cur->assign(input.begin(), input.end());

  const std::size_t n_layers = arch_.layers.size();
  for (std::size_t li = 0; li < n_layers; ++li) {
    const LayerSpec& l = arch_.layers[li];
    const T* p = params_.data() + l.param_offset;
    const auto cin = static_cast<std::size_t>(l.in_channels);
    const auto cout = static_cast<std::size_t>(l.out_channels);
    const auto lin = static_cast<std::size_t>(l.in_length);
    const auto lout = static_cast<std::size_t>(l.out_length);
    switch (l.kind) {
      case LayerKind::kConv: {
        next->resize(cout * lout);
        const T* weights = p;
        const T* bias = p + cout * cin * static_cast<std::size_t>(l.kernel);
        const auto k = static_cast<std::size_t>(l.kernel);
        conv_valid(cur->data(), cin, lin, weights, bias, cout, k, lout, next->data());
        std::swap(cur, next);
        break;
      }
      case LayerKind::kBatchNorm: {
        const T* mean = buffers_.data() + l.buffer_offset;
        const T* var = mean + cout;
        for (std::size_t c = 0; c < cout; ++c) {
          const double scale = static_cast<double>(p[c]) / std::sqrt(static_cast<double>(var[c]) + kBatchNormEps);
          const double shift = static_cast<double>(p[cout + c]) - scale * static_cast<double>(mean[c]);
          const T s = static_cast<T>(scale);
          const T h = static_cast<T>(shift);
          T* x = cur->data() + c * lin;
          for (std::size_t t = 0; t < lin; ++t) x[t] = s * x[t] + h;
        }
        break;
      }
      case LayerKind::kRelu: {
        for (T& v : *cur) v = v > T{0} ? v : T{0};
        break;
      }
      case LayerKind::kMaxPool2: {
        next->resize(cout * lout);
        for (std::size_t c = 0; c < cout; ++c) {
          const T* x = cur->data() + c * lin;
          T* o = next->data() + c * lout;
          for (std::size_t t = 0; t < lout; ++t) o[t] = std::max(x[2 * t], x[2 * t + 1]);
        }
        std::swap(cur, next);
        break;
      }
      case LayerKind::kGlobalMaxPool: {
        next->resize(cout);
        for (std::size_t c = 0; c < cout; ++c) {
          const T* x = cur->data() + c * lin;
          (*next)[c] = *std::max_element(x, x + lin);
        }
        std::swap(cur, next);
        break;
      }
      case LayerKind::kDense: {
        const bool last = li + 1 == n_layers;
        next->resize(cout);
        const T* bias = p + cout * cin;
        for (std::size_t o = 0; o < cout; ++o) {
          const T* w = p + o * cin;
          double acc = static_cast<double>(bias[o]);
          for (std::size_t i = 0; i < cin; ++i) acc += static_cast<double>(w[i]) * static_cast<double>((*cur)[i]);
          if (last) {
            out[o] = acc;
          } else {
            (*next)[o] = static_cast<T>(acc);
          }
        }
        std::swap(cur, next);
        break;
      }
    }
  }
}

template <typename T>
double Network<T>::train_loss(std::span<const T> inputs, std::span<const int> labels,
                              std::vector<double>* grad, bool update_running_stats) {
  const std::size_t batch = labels.size();
  if (batch == 0) throw InvalidInputError("empty training batch");
  if (inputs.size() != batch * arch_.input_length) throw InvalidInputError("training batch shape mismatch");
  const std::size_t n_layers = arch_.layers.size();

  // acts[l] is the input of layer l; acts[n_layers] holds the logits.
  std::vector<std::vector<T>> acts(n_layers + 1);
  std::vector<std::vector<std::uint32_t>> argmax(n_layers);
  std::vector<std::vector<double>> bn_xhat(n_layers);
  std::vector<std::vector<double>> bn_inv_std(n_layers);
  acts[0].assign(inputs.begin(), inputs.end());

  for (std::size_t li = 0; li < n_layers; ++li) {
    const LayerSpec& l = arch_.layers[li];
    const T* p = params_.data() + l.param_offset;
    const auto cin = static_cast<std::size_t>(l.in_channels);
    const auto cout = static_cast<std::size_t>(l.out_channels);
    const auto lin = static_cast<std::size_t>(l.in_length);
    const auto lout = static_cast<std::size_t>(l.out_length);
    const std::vector<T>& x = acts[li];
    std::vector<T>& y = acts[li + 1];
    const std::size_t in_stride = cin * lin;
    const std::size_t out_stride = cout * lout;
    y.assign(batch * out_stride, T{0});

    switch (l.kind) {
      case LayerKind::kConv: {
        const auto k = static_cast<std::size_t>(l.kernel);
        const T* bias = p + cout * cin * k;
        for (std::size_t n = 0; n < batch; ++n) {
          conv_valid(x.data() + n * in_stride, cin, lin, p, bias, cout, k, lout, y.data() + n * out_stride);
        }
        break;
      }
      case LayerKind::kBatchNorm: {
        const double count = static_cast<double>(batch * lin);
        bn_xhat[li].resize(batch * out_stride);
        bn_inv_std[li].resize(cout);
        T* run_mean = buffers_.data() + l.buffer_offset;
        T* run_var = run_mean + cout;
        for (std::size_t c = 0; c < cout; ++c) {
          double sum = 0.0;
          for (std::size_t n = 0; n < batch; ++n) {
            const T* xc = x.data() + n * in_stride + c * lin;
            for (std::size_t t = 0; t < lin; ++t) sum += static_cast<double>(xc[t]);
          }
          const double mean = sum / count;
          double sq = 0.0;
          for (std::size_t n = 0; n < batch; ++n) {
            const T* xc = x.data() + n * in_stride + c * lin;
            for (std::size_t t = 0; t < lin; ++t) {
              const double d = static_cast<double>(xc[t]) - mean;
              sq += d * d;
            }
          }
          const double var = sq / count;
          const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
          bn_inv_std[li][c] = inv_std;
          const double gamma = static_cast<double>(p[c]);
          const double beta = static_cast<double>(p[cout + c]);
          for (std::size_t n = 0; n < batch; ++n) {
            const T* xc = x.data() + n * in_stride + c * lin;
            T* yc = y.data() + n * out_stride + c * lout;
            double* xh = bn_xhat[li].data() + n * out_stride + c * lout;
            for (std::size_t t = 0; t < lin; ++t) {
              xh[t] = (static_cast<double>(xc[t]) - mean) * inv_std;
              yc[t] = static_cast<T>(gamma * xh[t] + beta);
            }
          }
          if (update_running_stats) {
            const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
            run_mean[c] = static_cast<T>((1.0 - kBatchNormMomentum) * static_cast<double>(run_mean[c]) +
                                         kBatchNormMomentum * mean);
            run_var[c] = static_cast<T>((1.0 - kBatchNormMomentum) * static_cast<double>(run_var[c]) +
                                        kBatchNormMomentum * unbiased);
          }
        }
        break;
      }
      case LayerKind::kRelu: {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
        break;
      }
      case LayerKind::kMaxPool2:
      case LayerKind::kGlobalMaxPool: {
        const bool global = l.kind == LayerKind::kGlobalMaxPool;
        argmax[li].resize(batch * out_stride);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < cout; ++c) {
            const T* xc = x.data() + n * in_stride + c * lin;
            for (std::size_t t = 0; t < lout; ++t) {
              std::size_t best = global ? 0 : 2 * t;
              const std::size_t end = global ? lin : 2 * t + 2;
              for (std::size_t s = best + 1; s < end; ++s) {
                if (xc[s] > xc[best]) best = s;
              }
              y[n * out_stride + c * lout + t] = xc[best];
              argmax[li][n * out_stride + c * lout + t] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerKind::kDense: {
        const T* bias = p + cout * cin;
        for (std::size_t n = 0; n < batch; ++n) {
          const T* xi = x.data() + n * in_stride;
          for (std::size_t o = 0; o < cout; ++o) {
            const T* w = p + o * cin;
            double acc = static_cast<double>(bias[o]);
            for (std::size_t i = 0; i < cin; ++i) acc += static_cast<double>(w[i]) * static_cast<double>(xi[i]);
            y[n * out_stride + o] = static_cast<T>(acc);
          }
        }
        break;
      }
    }
  }

  // Softmax cross-entropy, mean over the batch.
  const std::size_t k = arch_.class_count;
  const std::vector<T>& logits = acts[n_layers];
  std::vector<T> dy(batch * k);
  double loss = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw InvalidInputError("label out of range");
    const T* z = logits.data() + n * k;
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(z[j]) - zmax);
    const double log_denom = std::log(denom);
    loss -= static_cast<double>(z[label]) - zmax - log_denom;
    for (std::size_t j = 0; j < k; ++j) {
      const double prob = std::exp(static_cast<double>(z[j]) - zmax - log_denom);
      dy[n * k + j] = static_cast<T>((prob - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) /
                                     static_cast<double>(batch));
    }
  }
  loss /= static_cast<double>(batch);
  if (grad == nullptr) return loss;

  grad->assign(arch_.param_count, 0.0);
  std::vector<T> dx;
  for (std::size_t li = n_layers; li-- > 0;) {
    const LayerSpec& l = arch_.layers[li];
    const T* p = params_.data() + l.param_offset;
    double* g = grad->data() + l.param_offset;
    const auto cin = static_cast<std::size_t>(l.in_channels);
    const auto cout = static_cast<std::size_t>(l.out_channels);
    const auto lin = static_cast<std::size_t>(l.in_length);
    const auto lout = static_cast<std::size_t>(l.out_length);
    const std::vector<T>& x = acts[li];
    const std::size_t in_stride = cin * lin;
    const std::size_t out_stride = cout * lout;
    const bool need_dx = li > 0;
    dx.assign(need_dx ? batch * in_stride : 0, T{0});

    switch (l.kind) {
      case LayerKind::kConv: {
        const auto k = static_cast<std::size_t>(l.kernel);
        double* gb = g + cout * cin * k;
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t co = 0; co < cout; ++co) {
            const T* d = dy.data() + n * out_stride + co * lout;
            double db = 0.0;
            for (std::size_t t = 0; t < lout; ++t) db += static_cast<double>(d[t]);
            gb[co] += db;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const T* xi = x.data() + n * in_stride + ci * lin;
              const T* w = p + (co * cin + ci) * k;
              double* gw = g + (co * cin + ci) * k;
              T* dxi = need_dx ? dx.data() + n * in_stride + ci * lin : nullptr;
              for (std::size_t kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                for (std::size_t t = 0; t < lout; ++t) {
                  acc += static_cast<double>(d[t]) * static_cast<double>(xi[t + kk]);
                }
                gw[kk] += acc;
                if (dxi != nullptr) {
                  const T wk = w[kk];
                  for (std::size_t t = 0; t < lout; ++t) dxi[t + kk] += wk * d[t];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::kBatchNorm: {
        const double count = static_cast<double>(batch * lin);
        for (std::size_t c = 0; c < cout; ++c) {
          double dgamma = 0.0;
          double dbeta = 0.0;
          for (std::size_t n = 0; n < batch; ++n) {
            const T* d = dy.data() + n * out_stride + c * lout;
            const double* xh = bn_xhat[li].data() + n * out_stride + c * lout;
            for (std::size_t t = 0; t < lout; ++t) {
              dgamma += static_cast<double>(d[t]) * xh[t];
              dbeta += static_cast<double>(d[t]);
            }
          }
          g[c] += dgamma;
          g[cout + c] += dbeta;
          if (!need_dx) continue;
          const double scale = static_cast<double>(p[c]) * bn_inv_std[li][c] / count;
          for (std::size_t n = 0; n < batch; ++n) {
            const T* d = dy.data() + n * out_stride + c * lout;
            const double* xh = bn_xhat[li].data() + n * out_stride + c * lout;
            T* dxc = dx.data() + n * in_stride + c * lin;
            for (std::size_t t = 0; t < lin; ++t) {
              dxc[t] = static_cast<T>(scale * (count * static_cast<double>(d[t]) - dbeta - xh[t] * dgamma));
            }
          }
        }
        break;
      }
      case LayerKind::kRelu: {
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
        break;
      }
      case LayerKind::kMaxPool2:
      case LayerKind::kGlobalMaxPool: {
        if (!need_dx) break;
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < cout; ++c) {
            for (std::size_t t = 0; t < lout; ++t) {
              const std::size_t idx = n * out_stride + c * lout + t;
              dx[n * in_stride + c * lin + argmax[li][idx]] += dy[idx];
            }
          }
        }
        break;
      }
      case LayerKind::kDense: {
        double* gb = g + cout * cin;
        for (std::size_t n = 0; n < batch; ++n) {
          const T* xi = x.data() + n * in_stride;
          const T* d = dy.data() + n * out_stride;
          for (std::size_t o = 0; o < cout; ++o) {
            const double dv = static_cast<double>(d[o]);
            gb[o] += dv;
            double* gw = g + o * cin;
            for (std::size_t i = 0; i < cin; ++i) gw[i] += dv * static_cast<double>(xi[i]);
          }
          if (need_dx) {
            T* dxi = dx.data() + n * in_stride;
            for (std::size_t o = 0; o < cout; ++o) {
              const T dv = d[o];
              const T* w = p + o * cin;
              for (std::size_t i = 0; i < cin; ++i) dxi[i] += w[i] * dv;
            }
          }
        }
        break;
      }
    }
    dy.swap(dx);
  }
  return loss;
}

template class Network<float>;
template class Network<double>;

}  // namespace csshap
