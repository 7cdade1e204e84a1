#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "csshap/matrix.hpp"
#include "csshap/network.hpp"
#include "csshap/parallel.hpp"
#include "csshap/signal.hpp"

namespace csshap {

// Black-box view used by the attribution engine.
class ProbabilityModel {
 public:
  virtual ~ProbabilityModel() = default;

  virtual std::size_t class_count() const = 0;
  virtual std::size_t input_length() const = 0;

  // Row i holds the class probabilities of xs[i]. Must be safe for
  // concurrent callers.
  virtual Matrix<double> predict_batch(std::span<const TimeSeries> xs) const = 0;

  std::vector<double> predict(const TimeSeries& x) const;
};

ModelConfig default_cnn_config();
// Two hidden layers (256, 64) over the raw samples.
ModelConfig default_mlp_config();

class Classifier final : public ProbabilityModel {
 public:
  explicit Classifier(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  Network<float>& network() { return net_; }
  const Network<float>& network() const { return net_; }

  std::size_t class_count() const override { return config_.class_count; }
  std::size_t input_length() const override { return config_.input_length; }
  Matrix<double> predict_batch(std::span<const TimeSeries> xs) const override;
  Matrix<double> predict_batch(std::span<const TimeSeries> xs, Execution exec) const;

  std::vector<double> logits(const TimeSeries& x) const;

 private:
  ModelConfig config_;
  Network<float> net_;
};

Classifier build_model(const ModelConfig& config);

void softmax_inplace(std::span<double> z);

struct LabeledSet {
  std::vector<TimeSeries> samples;
  std::vector<int> labels;

  std::size_t size() const { return samples.size(); }
};

struct TrainHyper {
  int epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double lr_decay = 0.99;  // multiplicative, per epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;  // mean minibatch loss
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainReport {
  ModelConfig model;
  TrainHyper hyper;
  std::vector<EpochRecord> epochs;
  Matrix<int> confusion;  // rows: true class, cols: predicted class (test split)
  double wall_clock_s = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  double final_test_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().test_accuracy; }
  std::string to_json() const;
  std::string to_csv() const;
};

// Minibatch Adam on softmax cross-entropy. The shuffle of epoch e uses
// derive_seed(hyper.seed, e). Throws TrainingError when the loss diverges.
TrainReport train(Classifier& model, const LabeledSet& train_set, const LabeledSet& test_set,
                  const TrainHyper& hyper);

double accuracy(const ProbabilityModel& model, const LabeledSet& set);
Matrix<int> confusion_matrix(const ProbabilityModel& model, const LabeledSet& set);

// Header (magic, version, config echo, counts) followed by little-endian
// float32 parameters and batch-norm running statistics.
void save_model(const Classifier& model, const std::filesystem::path& path);
Classifier load_model(const std::filesystem::path& path);
std::size_t model_header_bytes(const ModelConfig& config);

std::string model_config_json(const ModelConfig& config);

}  // namespace csshap
