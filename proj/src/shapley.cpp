#include "csshap/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "csshap/error.hpp"
#include "csshap/random.hpp"

namespace csshap {

namespace {

Coalition from_mask(std::size_t players, std::uint64_t mask) {
  Coalition c(players);
  for (std::size_t i = 0; i < players; ++i) {
    if ((mask >> i) & 1U) c.set(i);
  }
  return c;
}

void require_value(const CooperativeGame& game) {
  if (!game.value) throw InvalidInputError("game has no value function");
  if (game.player_count == 0) throw InvalidInputError("game has no players");
}

}  // namespace

ShapleyResult exact_shapley(const CooperativeGame& game) {
  require_value(game);
  const std::size_t n = game.player_count;
  if (n > kMaxExactPlayers) {
    throw CapacityError("exact_shapley supports at most " + std::to_string(kMaxExactPlayers) +
                        " players (got " + std::to_string(n) + "); use sampled_shapley");
  }
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::vector<double> v(subsets);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) v[mask] = game.value(from_mask(n, mask));

  // weight(s) = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }

  ShapleyResult result;
  result.values.assign(n, 0.0);
  result.num_evaluations = static_cast<std::size_t>(subsets);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double acc = 0.0;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    result.values[i] = acc;
  }
  return result;
}

std::vector<std::size_t> schedule_permutation(std::size_t players, std::uint64_t seed, std::size_t p) {
  std::vector<std::size_t> order(players);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, p));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ShapleyResult sampled_shapley(const CooperativeGame& game, std::size_t num_permutations,
                              std::uint64_t seed, Execution exec) {
  require_value(game);
  if (num_permutations < 2) throw InvalidInputError("sampled_shapley needs at least 2 permutations");
  const std::size_t n = game.player_count;

  const double empty_value = game.value(Coalition(n));
  // Welford running moments: a constant marginal sequence yields its value exactly.
  std::vector<double> mean(n, 0.0);
  std::vector<double> m2(n, 0.0);
  std::vector<double> chain(n);

  for (std::size_t p = 0; p < num_permutations; ++p) {
    const auto order = schedule_permutation(n, seed, p);
    parallel::for_each(n, exec, [&](std::size_t j) {
      Coalition c(n);
      for (std::size_t q = 0; q <= j; ++q) c.set(order[q]);
      chain[j] = game.value(c);
    });
    double previous = empty_value;
    for (std::size_t j = 0; j < n; ++j) {
      const double marginal = chain[j] - previous;
      const std::size_t i = order[j];
      const double delta = marginal - mean[i];
      mean[i] += delta / static_cast<double>(p + 1);
      m2[i] += delta * (marginal - mean[i]);
      previous = chain[j];
    }
  }

  const auto count = static_cast<double>(num_permutations);
  ShapleyResult result;
  result.values.resize(n);
  result.standard_errors = std::vector<double>(n);
  result.num_evaluations = 1 + num_permutations * n;
  result.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const double var = std::max(0.0, m2[i] / (count - 1.0));
    result.values[i] = mean[i];
    (*result.standard_errors)[i] = std::sqrt(var / count);
  }
  return result;
}

CachedGame::CachedGame(CooperativeGame game)
    : game_(std::move(game)), state_(std::make_shared<State>()) {
  require_value(game_);
}

double CachedGame::operator()(const Coalition& c) const {
  {
    std::lock_guard lock(state_->mutex);
    if (auto it = state_->values.find(c); it != state_->values.end()) {
      ++state_->hits;
      return it->second;
    }
  }
  const double v = game_.value(c);
  std::lock_guard lock(state_->mutex);
  auto [it, inserted] = state_->values.emplace(c, v);
  if (inserted) ++state_->evaluations;
  return it->second;
}

CooperativeGame CachedGame::as_game() const {
  return {game_.player_count, [self = *this](const Coalition& c) { return self(c); }};
}

std::size_t CachedGame::evaluations() const {
  std::lock_guard lock(state_->mutex);
  return state_->evaluations;
}

std::size_t CachedGame::hits() const {
  std::lock_guard lock(state_->mutex);
  return state_->hits;
}

}  // namespace csshap
