#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "roic/linalg.hpp"

namespace roic {

/// SplitMix64 finalizer. Used to spread raw seeds and to derive
/// independent stream seeds from (base, index...) tuples.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives a child seed from a base seed and one stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Derives a child seed from a base seed and two stream indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

/// Deterministic random source. All randomness in the project flows
/// through this class so that runs are reproducible given a seed.
/// Gaussians come from Box-Muller pairs; the spare of a scalar draw is
/// discarded so the state is exactly the underlying engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  /// Standard normal draw.
  double normal();

  /// Fills v with independent standard normal draws.
  void fill_normal(Vector& v);

  /// Standard normal vector of length n.
  Vector normal_vector(Index n) {
    Vector v(n);
    fill_normal(v);
    return v;
  }

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
      std::swap(items[i], items[uniform_int(i + 1)]);
    }
  }

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roic
