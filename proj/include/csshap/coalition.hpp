#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace csshap {

// Fixed-size set of players, stored as a packed bitset.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::size_t players, bool all = false)
      : players_(players), words_((players + 63) / 64, all ? ~std::uint64_t{0} : 0) {
    trim();
  }

  static Coalition full(std::size_t players) { return Coalition(players, true); }

  std::size_t players() const noexcept { return players_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool is_subset_of(const Coalition& other) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if ((words_[i] & ~other.words_[i]) != 0) return false;
    }
    return true;
  }

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  bool operator==(const Coalition&) const = default;

 private:
  void trim() {
    if (players_ % 64 != 0 && !words_.empty()) {
      words_.back() &= (std::uint64_t{1} << (players_ % 64)) - 1;
    }
  }

  std::size_t players_ = 0;
  std::vector<std::uint64_t> words_;
};

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ c.players();
    for (auto w : c.words()) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace csshap
