#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "csshap/error.hpp"
#include "csshap/network.hpp"

namespace {

using namespace csshap;

ModelConfig tiny_cnn() {
  ModelConfig c;
  c.input_length = 40;
  c.class_count = 3;
  c.channels = {4, 6};
  c.kernel_sizes = {5, 3};
  c.head_widths = {8};
  return c;
}

ModelConfig tiny_mlp() {
  ModelConfig c;
  c.kind = ModelKind::kMlp;
  c.input_length = 24;
  c.class_count = 4;
  c.channels = {8, 6};
  c.head_widths = {};
  return c;
}

std::vector<double> random_inputs(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

TEST(Architecture, DefaultCnnShapesAndParameterCount) {
  const auto arch = Architecture::from_config(ModelConfig{});
  // conv(1->8@7) 64 + bn 16, conv(8->16@3) 400 + bn 32, conv(16->32@3) 1568 + bn 64,
  // conv(32->64@3) 6208 + bn 128, fc 64x64 4160, fc 64x3 195
  EXPECT_EQ(arch.param_count, 12835u);
  // running mean and variance per batch-norm channel
  EXPECT_EQ(arch.buffer_count, 2u * (8 + 16 + 32 + 64));

  std::vector<int> pooled;
  for (const auto& l : arch.layers) {
    if (l.kind == LayerKind::kMaxPool2) pooled.push_back(l.out_length);
  }
  EXPECT_EQ(pooled, (std::vector<int>{997, 497, 247, 122}));
  EXPECT_NE(arch.describe().find("params 12835"), std::string::npos);
}

TEST(Architecture, MlpParameterCount) {
  const auto arch = Architecture::from_config(tiny_mlp());
  EXPECT_EQ(arch.param_count, (24u * 8 + 8) + (8u * 6 + 6) + (6u * 4 + 4));
  EXPECT_EQ(arch.buffer_count, 0u);
}

TEST(Architecture, RejectsInvalidShapes) {
  auto c = ModelConfig{};
  c.class_count = 1;
  EXPECT_THROW(Architecture::from_config(c), ConfigurationError);
  c = ModelConfig{};
  c.kernel_sizes = {7, 3};
  EXPECT_THROW(Architecture::from_config(c), ConfigurationError);
  c = ModelConfig{};
  c.input_length = 20;
  EXPECT_THROW(Architecture::from_config(c), ConfigurationError);
  c = ModelConfig{};
  c.channels[1] = 0;
  EXPECT_THROW(Architecture::from_config(c), ConfigurationError);
}

TEST(Network, InitializationIsSeededAndBounded) {
  const auto arch = Architecture::from_config(ModelConfig{});
  Network<float> a(arch), b(arch), c(arch);
  a.initialize(5);
  b.initialize(5);
  c.initialize(6);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(a.params(), c.params());
  // first conv: fan-in 7
  const auto& conv = arch.layers.front();
  const float bound = static_cast<float>(1.0 / std::sqrt(7.0));
  for (std::size_t i = 0; i < conv.param_count; ++i) {
    EXPECT_LE(std::abs(a.params()[conv.param_offset + i]), bound);
  }
  // running variance starts at 1, running mean at 0
  const auto& bn = arch.layers[1];
  ASSERT_EQ(bn.kind, LayerKind::kBatchNorm);
  EXPECT_EQ(a.buffers()[bn.buffer_offset], 0.0f);
  EXPECT_EQ(a.buffers()[bn.buffer_offset + bn.buffer_count - 1], 1.0f);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

struct GradientCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t total = 0;
};

// Central differences on the training loss of a float64 miniature model.
// With screen set, parameters whose loss has a ReLU or max-pool kink inside
// [-eps, eps] are skipped: there the eps and eps/2 differences disagree.
GradientCheck check_gradient(const ModelConfig& config, std::size_t batch, double eps, bool screen) {
  Network<double> net(Architecture::from_config(config));
  net.initialize(3);
  const auto x = random_inputs(batch * config.input_length, 17);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % config.class_count);

  std::vector<double> grad;
  net.train_loss(x, labels, &grad, false);
  EXPECT_EQ(grad.size(), net.params().size());

  auto central = [&](std::size_t p, double h) {
    const double keep = net.params()[p];
    net.params()[p] = keep + h;
    const double up = net.train_loss(x, labels, nullptr, false);
    net.params()[p] = keep - h;
    const double down = net.train_loss(x, labels, nullptr, false);
    net.params()[p] = keep;
    return (up - down) / (2 * h);
  };

  GradientCheck r;
  r.total = grad.size();
  for (std::size_t p = 0; p < grad.size(); ++p) {
    const double numeric = central(p, eps);
    if (screen && relative_error(numeric, central(p, eps / 2)) > 1e-4) continue;
    ++r.checked;
    r.worst = std::max(r.worst, relative_error(numeric, grad[p]));
  }
  return r;
}

TEST(Network, CnnGradientMatchesFiniteDifferences) {
  const auto r = check_gradient(tiny_cnn(), 5, 1e-3, true);
  EXPECT_LT(r.worst, 1e-4);
  EXPECT_GE(static_cast<double>(r.checked), 0.95 * static_cast<double>(r.total));
}

TEST(Network, CnnGradientMatchesFiniteDifferencesEverywhere) {
  const auto r = check_gradient(tiny_cnn(), 5, 1e-5, false);
  EXPECT_LT(r.worst, 1e-4);
  EXPECT_EQ(r.checked, r.total);
}

TEST(Network, MlpGradientMatchesFiniteDifferences) {
  const auto r = check_gradient(tiny_mlp(), 6, 1e-3, false);
  EXPECT_LT(r.worst, 1e-4);
}

TEST(Network, TrainingModeUpdatesRunningStatistics) {
  Network<double> net(Architecture::from_config(tiny_cnn()));
  net.initialize(1);
  const auto before = net.buffers();
  const auto x = random_inputs(4 * 40, 2);
  const std::vector<int> labels{0, 1, 2, 0};
  net.train_loss(x, labels, nullptr, false);
  EXPECT_EQ(net.buffers(), before);
  net.train_loss(x, labels, nullptr, true);
  EXPECT_NE(net.buffers(), before);
}

TEST(Network, EvaluationLogitsAreBatchIndependent) {
  Network<float> net(Architecture::from_config(tiny_cnn()));
  net.initialize(9);
  const auto xd = random_inputs(40, 4);
  const std::vector<float> x(xd.begin(), xd.end());
  std::vector<double> a(3), b(3);
  net.logits(x, a);
  net.logits(x, b);
  EXPECT_EQ(a, b);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
}

TEST(Network, LossOfUniformPredictionIsLogK) {
  // zeroing every parameter makes all logits equal
  Network<double> net(Architecture::from_config(tiny_mlp()));
  net.initialize(0);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  const auto x = random_inputs(2 * 24, 8);
  const std::vector<int> labels{1, 3};
  EXPECT_NEAR(net.train_loss(x, labels, nullptr, false), std::log(4.0), 1e-12);
}

}  // namespace
