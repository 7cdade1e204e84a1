#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

#include "csshap/attribution.hpp"
#include "csshap/error.hpp"
#include "csshap/parallel.hpp"
#include "csshap/shapley.hpp"
#include "csshap/simulation.hpp"

namespace {

using namespace csshap;

class ThreadCount : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    saved_ = parallel::max_threads();
    parallel::set_threads(GetParam());
  }
  void TearDown() override { parallel::set_threads(saved_); }
  int saved_ = 1;
};

TEST_P(ThreadCount, ForEachVisitsEveryIndexOnce) {
  EXPECT_EQ(parallel::max_threads(), GetParam());
  std::vector<std::atomic<int>> hits(1000);
  parallel::for_each(hits.size(), Execution::kParallel, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST_P(ThreadCount, ExceptionsReachTheCaller) {
  for (Execution exec : {Execution::kSerial, Execution::kParallel}) {
    EXPECT_THROW(parallel::for_each(64, exec,
                                    [](std::size_t i) {
                                      if (i == 37) throw CapacityError("boom");
                                    }),
                 CapacityError);
  }
}

TEST_P(ThreadCount, DatasetSynthesisMatchesSerial) {
  auto spec = default_dataset_spec();
  spec.samples_per_class = 6;
  spec.seed = 13;
  EXPECT_EQ(build_dataset(spec, Execution::kParallel).samples, build_dataset(spec, Execution::kSerial).samples);
}

TEST_P(ThreadCount, SampledShapleyMatchesSerial) {
  const CooperativeGame g{24, [](const Coalition& c) {
                            double s = 0.0;
                            for (std::size_t i = 0; i < 24; ++i) s += c.test(i) ? std::sin(1.0 + i) : 0.0;
                            return s * s * s;
                          }};
  const auto a = sampled_shapley(g, 30, 2, Execution::kSerial);
  const auto b = sampled_shapley(g, 30, 2, Execution::kParallel);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(*a.standard_errors, *b.standard_errors);
}

TEST_P(ThreadCount, PredictionMatchesSerial) {
  auto spec = default_dataset_spec();
  spec.samples_per_class = 4;
  const auto ds = build_dataset(spec);
  const auto model = build_model(default_cnn_config());
  EXPECT_EQ(model.predict_batch(ds.samples, Execution::kParallel), model.predict_batch(ds.samples, Execution::kSerial));
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCount, ::testing::Values(1, 2, 4));

TEST(Parallel, NonPositiveThreadCountKeepsDefault) {
  const int before = parallel::max_threads();
  parallel::set_threads(0);
  EXPECT_EQ(parallel::max_threads(), before);
  EXPECT_GE(before, 1);
}

}  // namespace
