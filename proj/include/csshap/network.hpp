#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace csshap {

enum class ModelKind { kCnn1d, kMlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kCnn1d;
  std::size_t input_length = 2000;
  std::size_t class_count = 3;
  // cnn1d: output channels per conv block; mlp: hidden layer widths.
  std::vector<int> channels = {8, 16, 32, 64};
  // cnn1d: kernel size per conv block (7 then 3 by default).
  std::vector<int> kernel_sizes = {7, 3, 3, 3};
  // Fully connected hidden widths between the pooled features and the output.
  std::vector<int> head_widths = {64};
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

enum class LayerKind { kConv, kBatchNorm, kRelu, kMaxPool2, kGlobalMaxPool, kDense };

// Activations are [channels][length]; dense layers use length 1.
struct LayerSpec {
  LayerKind kind;
  int in_channels;
  int out_channels;
  int in_length;
  int out_length;
  int kernel = 0;
  std::size_t param_offset = 0;
  std::size_t param_count = 0;
  std::size_t buffer_offset = 0;  // batch-norm running statistics
  std::size_t buffer_count = 0;
};

// Conv blocks are valid (unpadded) stride-1 convolutions followed by
// batch-norm, ReLU and max-pool(2); then global max-pool and the dense head.
struct Architecture {
  std::vector<LayerSpec> layers;
  std::size_t param_count = 0;
  std::size_t buffer_count = 0;
  std::size_t input_length = 0;
  std::size_t class_count = 0;

  static Architecture from_config(const ModelConfig& config);
  std::string describe() const;
};

// Parameters of type T; reductions (dense dot products, batch statistics,
// weight gradients, loss) accumulate in double.
template <typename T>
class Network {
 public:
  explicit Network(Architecture arch);

  const Architecture& architecture() const { return arch_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::vector<T>& buffers() { return buffers_; }
  const std::vector<T>& buffers() const { return buffers_; }

  // Uniform fan-in initialisation U(-1/sqrt(fan_in), 1/sqrt(fan_in));
  // batch-norm scale 1, shift 0, running mean 0, running variance 1.
  void initialize(std::uint64_t seed);

  // Evaluation-mode logits (running batch-norm statistics). Thread-safe.
  void logits(std::span<const T> input, std::span<double> out) const;

  // Training-mode forward over a batch (batch statistics) and mean softmax
  // cross-entropy. When grad is non-empty it receives d(loss)/d(params).
  double train_loss(std::span<const T> inputs, std::span<const int> labels,
                    std::vector<double>* grad, bool update_running_stats);

 private:
  Architecture arch_;
  std::vector<T> params_;
  std::vector<T> buffers_;
};

extern template class Network<float>;
extern template class Network<double>;

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

}  // namespace csshap
