#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "csshap/coalition.hpp"
#include "csshap/parallel.hpp"

namespace csshap {

// Transferable-utility game over player_count players.
struct CooperativeGame {
  std::size_t player_count = 0;
  std::function<double(const Coalition&)> value;
};

struct ShapleyResult {
  std::vector<double> values;
  std::optional<std::vector<double>> standard_errors;  // absent for exact results
  std::size_t num_evaluations = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxExactPlayers = 20;

// Full subset enumeration with weights s!(n-s-1)!/n!.
ShapleyResult exact_shapley(const CooperativeGame& game);

// Random permutations in a fixed schedule derived from seed; values are the
// mean marginal contributions and standard errors come from their spread.
// Parallel execution evaluates each permutation's coalitions concurrently and
// is bit-identical to serial execution; value must then be thread-safe.
ShapleyResult sampled_shapley(const CooperativeGame& game, std::size_t num_permutations,
                              std::uint64_t seed, Execution exec = Execution::kSerial);

// Permutation p of the sampling schedule.
std::vector<std::size_t> schedule_permutation(std::size_t players, std::uint64_t seed, std::size_t p);

// Memoises a game's value per coalition. Concurrent lookups of the same
// coalition may both compute; the first insertion wins and values are equal
// because the wrapped game is deterministic.
class CachedGame {
 public:
  explicit CachedGame(CooperativeGame game);

  double operator()(const Coalition& c) const;
  CooperativeGame as_game() const;

  std::size_t evaluations() const;
  std::size_t hits() const;

 private:
  struct State {
    std::mutex mutex;
    std::unordered_map<Coalition, double, CoalitionHash> values;
    std::size_t evaluations = 0;
    std::size_t hits = 0;
  };
  CooperativeGame game_;
  std::shared_ptr<State> state_;
};

}  // namespace csshap
