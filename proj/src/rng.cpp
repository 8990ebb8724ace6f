#include "floodaid/rng.hpp"

#include <numeric>

namespace floodaid {

namespace {

// FNV-1a, used only to turn a stream name into seed material.
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::string_view name) {
  const std::uint64_t h = hash_name(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view name)
    : name_(name), seed_(seed), engine_(make_engine(seed, name)) {}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(engine_);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(idx.begin(), idx.end());
  return idx;
}

}  // namespace floodaid
