#include "csshap/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "csshap/error.hpp"
#include "csshap/io.hpp"
#include "csshap/random.hpp"

namespace csshap {

namespace {

constexpr char kModelMagic[] = "CSMD";
constexpr std::uint32_t kModelVersion = 1;

void check_input(const TimeSeries& x, std::size_t length) {
  if (x.size() != length) {
    throw InvalidInputError("model expects " + std::to_string(length) + " samples, got " +
                            std::to_string(x.size()));
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::vector<double> ProbabilityModel::predict(const TimeSeries& x) const {
  const Matrix<double> p = predict_batch(std::span<const TimeSeries>(&x, 1));
  return {p.row(0).begin(), p.row(0).end()};
}

ModelConfig default_cnn_config() { return ModelConfig{}; }

ModelConfig default_mlp_config() {
  ModelConfig c;
  c.kind = ModelKind::kMlp;
  c.channels = {256, 64};
  c.kernel_sizes = {};
  c.head_widths = {};
  return c;
}

void softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

Classifier::Classifier(const ModelConfig& config)
    : config_(config), net_(Architecture::from_config(config)) {
  net_.initialize(config.seed);
}

Classifier build_model(const ModelConfig& config) { return Classifier(config); }

std::vector<double> Classifier::logits(const TimeSeries& x) const {
  check_input(x, config_.input_length);
  std::vector<float> input(x.values().begin(), x.values().end());
  std::vector<double> out(config_.class_count);
  net_.logits(input, out);
  return out;
}

Matrix<double> Classifier::predict_batch(std::span<const TimeSeries> xs) const {
  return predict_batch(xs, Execution::kSerial);
}

Matrix<double> Classifier::predict_batch(std::span<const TimeSeries> xs, Execution exec) const {
  for (const auto& x : xs) check_input(x, config_.input_length);
  Matrix<double> out(xs.size(), config_.class_count);
  parallel::for_each(xs.size(), exec, [&](std::size_t i) {
    thread_local std::vector<float> input;
    input.assign(xs[i].values().begin(), xs[i].values().end());
    auto row = out.row(i);
    net_.logits(input, row);
    softmax_inplace(row);
  });
  return out;
}

double accuracy(const ProbabilityModel& model, const LabeledSet& set) {
  if (set.size() == 0) return 0.0;
  const Matrix<double> p = model.predict_batch(set.samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (static_cast<int>(argmax(p.row(i))) == set.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

Matrix<int> confusion_matrix(const ProbabilityModel& model, const LabeledSet& set) {
  const std::size_t k = model.class_count();
  Matrix<int> m(k, k, 0);
  if (set.size() == 0) return m;
  const Matrix<double> p = model.predict_batch(set.samples);
  for (std::size_t i = 0; i < set.size(); ++i) {
    ++m(static_cast<std::size_t>(set.labels[i]), argmax(p.row(i)));
  }
  return m;
}

TrainReport train(Classifier& model, const LabeledSet& train_set, const LabeledSet& test_set,
                  const TrainHyper& hyper) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t k = model.class_count();
  const std::size_t len = model.input_length();
  if (hyper.epochs < 1) throw ConfigurationError("epochs must be >= 1");
  if (hyper.batch_size < 1) throw ConfigurationError("batch_size must be >= 1");
  if (!(hyper.learning_rate > 0.0)) throw ConfigurationError("learning_rate must be positive");
  if (train_set.size() == 0) throw InvalidInputError("empty training set");
  for (const LabeledSet* set : {&train_set, &test_set}) {
    if (set->labels.size() != set->samples.size()) throw InvalidInputError("labels/samples size mismatch");
    for (std::size_t i = 0; i < set->size(); ++i) {
      check_input(set->samples[i], len);
      if (set->labels[i] < 0 || static_cast<std::size_t>(set->labels[i]) >= k) {
        throw InvalidInputError("label " + std::to_string(set->labels[i]) + " outside [0, " +
                                std::to_string(k) + ")");
      }
    }
  }

  Network<float>& net = model.network();
  std::vector<float>& params = net.params();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<float> batch_inputs;
  std::vector<int> batch_labels;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.model = model.config();
  report.hyper = hyper;
  report.train_size = train_set.size();
  report.test_size = test_set.size();

  double lr = hyper.learning_rate;
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), begin + hyper.batch_size);
      batch_inputs.resize((end - begin) * len);
      batch_labels.resize(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& x = train_set.samples[order[i]].values();
        std::copy(x.begin(), x.end(), batch_inputs.begin() + static_cast<std::ptrdiff_t>((i - begin) * len));
        batch_labels[i - begin] = train_set.labels[order[i]];
      }
      const double loss = net.train_loss(batch_inputs, batch_labels, &grad, true);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: loss " << loss << " at epoch " << epoch + 1 << ", step " << step + 1
            << ", learning rate " << lr;
        throw TrainingError(msg.str());
      }
      ++step;
      const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grad[i];
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        params[i] = static_cast<float>(static_cast<double>(params[i]) - lr * mhat / (std::sqrt(vhat) + hyper.epsilon));
      }
      loss_sum += loss;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.learning_rate = lr;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.train_accuracy = accuracy(model, train_set);
    rec.test_accuracy = accuracy(model, test_set);
    report.epochs.push_back(rec);
    lr *= hyper.lr_decay;
  }
  report.confusion = confusion_matrix(model, test_set);
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string model_config_json(const ModelConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["input_length"] = c.input_length;
  j["class_count"] = c.class_count;
  j["channels"] = c.channels;
  j["kernel_sizes"] = c.kernel_sizes;
  j["head_widths"] = c.head_widths;
  j["seed"] = c.seed;
  return j.dump();
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(model_config_json(model));
  j["hyperparameters"] = {{"epochs", hyper.epochs},
                          {"batch_size", hyper.batch_size},
                          {"learning_rate", hyper.learning_rate},
                          {"lr_decay", hyper.lr_decay},
                          {"optimizer", "adam"},
                          {"beta1", hyper.beta1},
                          {"beta2", hyper.beta2},
                          {"epsilon", hyper.epsilon},
                          {"seed", hyper.seed}};
  j["train_size"] = train_size;
  j["test_size"] = test_size;
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"learning_rate", e.learning_rate},
                           {"train_loss", e.train_loss},
                           {"train_accuracy", e.train_accuracy},
                           {"test_accuracy", e.test_accuracy}});
  }
  j["epochs"] = epochs_json;
  nlohmann::json conf = nlohmann::json::array();
  for (std::size_t r = 0; r < confusion.rows(); ++r) {
    conf.push_back(std::vector<int>(confusion.row(r).begin(), confusion.row(r).end()));
  }
  j["confusion_matrix"] = conf;
  j["final_test_accuracy"] = final_test_accuracy();
  j["wall_clock_s"] = wall_clock_s;
  return j.dump(2);
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << "epoch,learning_rate,train_loss,train_accuracy,test_accuracy\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << io::format_double(e.learning_rate) << ',' << io::format_double(e.train_loss)
        << ',' << io::format_double(e.train_accuracy) << ',' << io::format_double(e.test_accuracy) << '\n';
  }
  return out.str();
}

namespace {

void put_int_list(io::ByteWriter& w, const std::vector<int>& v) {
  w.put_u32(static_cast<std::uint32_t>(v.size()));
  for (int x : v) w.put_u32(static_cast<std::uint32_t>(x));
}

std::vector<int> get_int_list(io::ByteReader& r) {
  const std::uint32_t n = r.get_u32();
  if (n > 1024) throw FormatError("model header: implausible layer list length " + std::to_string(n));
  std::vector<int> v(n);
  for (auto& x : v) {
    const std::uint32_t u = r.get_u32();
    if (u == 0 || u > (1U << 20)) throw FormatError("model header: invalid layer size");
    x = static_cast<int>(u);
  }
  return v;
}

}  // namespace

std::size_t model_header_bytes(const ModelConfig& c) {
  // magic, version, kind, input_length, class_count, three lists, seed,
  // param_count, buffer_count
  return 4 + 4 + 4 + 8 + 8 + (4 + 4 * c.channels.size()) + (4 + 4 * c.kernel_sizes.size()) +
         (4 + 4 * c.head_widths.size()) + 8 + 8 + 8;
}

void save_model(const Classifier& model, const std::filesystem::path& path) {
  const ModelConfig& c = model.config();
  const auto& net = model.network();
  io::ByteWriter w;
  w.put_bytes(std::string_view(kModelMagic, 4));
  w.put_u32(kModelVersion);
  w.put_u32(c.kind == ModelKind::kCnn1d ? 0U : 1U);
  w.put_u64(c.input_length);
  w.put_u64(c.class_count);
  put_int_list(w, c.channels);
  put_int_list(w, c.kernel_sizes);
  put_int_list(w, c.head_widths);
  w.put_u64(c.seed);
  w.put_u64(net.params().size());
  w.put_u64(net.buffers().size());
  for (float p : net.params()) w.put_f32(p);
  for (float b : net.buffers()) w.put_f32(b);
  io::write_file(path, w.bytes());
}

Classifier load_model(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path));
  if (r.get_bytes(4) != std::string_view(kModelMagic, 4)) throw FormatError("not a model file: " + path.string());
  const std::uint32_t version = r.get_u32();
  if (version != kModelVersion) {
    throw FormatError("unsupported model file version " + std::to_string(version));
  }
  ModelConfig c;
  const std::uint32_t kind = r.get_u32();
  if (kind > 1) throw FormatError("model header: unknown model kind");
  c.kind = kind == 0 ? ModelKind::kCnn1d : ModelKind::kMlp;
  c.input_length = r.get_u64();
  c.class_count = r.get_u64();
  if (c.input_length == 0 || c.input_length > (std::size_t{1} << 28) || c.class_count < 2 ||
      c.class_count > 65536) {
    throw FormatError("model header: invalid shape");
  }
  c.channels = get_int_list(r);
  c.kernel_sizes = get_int_list(r);
  c.head_widths = get_int_list(r);
  c.seed = r.get_u64();
  const std::uint64_t n_params = r.get_u64();
  const std::uint64_t n_buffers = r.get_u64();

  Architecture arch;
  try {
    arch = Architecture::from_config(c);
  } catch (const ConfigurationError& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  if (arch.param_count != n_params || arch.buffer_count != n_buffers) {
    throw FormatError("model header: parameter count does not match architecture");
  }
  if (r.remaining() != 4 * (n_params + n_buffers)) {
    throw FormatError("model file size does not match header (expected " +
                      std::to_string(4 * (n_params + n_buffers)) + " payload bytes, found " +
                      std::to_string(r.remaining()) + ")");
  }
  Classifier model(c);
  for (float& p : model.network().params()) p = r.get_f32();
  for (float& b : model.network().buffers()) b = r.get_f32();
  return model;
}

}  // namespace csshap
