#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace floodaid {

// Named deterministic random stream. Two streams built from the same
// (seed, name) pair produce the same sequence; different names give
// independent sequences so consumers never perturb each other.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name);

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p);

  std::vector<std::size_t> permutation(std::size_t n);

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::string name_;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Stream names used by the trainer and generator.
namespace streams {
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kAdversaryInit = "adversary-init";
inline constexpr std::string_view kDropout = "dropout";
inline constexpr std::string_view kShuffle = "shuffle";
inline constexpr std::string_view kSplit = "split";
inline constexpr std::string_view kSynthetic = "synthetic";
}  // namespace streams

}  // namespace floodaid
