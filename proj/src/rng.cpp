#include "roic/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace roic {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  // Modulo bias is < n / 2^64, negligible at the ranges used here.
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

namespace {

// Box-Muller transform: two uniforms -> two independent normals.
// u1 is mapped to (0, 1] so the log is always finite.
inline void box_muller(std::uint64_t r1, std::uint64_t r2, double& z0,
                       double& z1) {
  const double u1 = static_cast<double>((r1 >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(r2 >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = radius * std::cos(angle);
  z1 = radius * std::sin(angle);
}

}  // namespace

double Rng::normal() {
  double z0;
  double z1;
  box_muller(next_u64(), next_u64(), z0, z1);
  return z0;
}

void Rng::fill_normal(Vector& v) {
  const Index n = v.size();
  Index i = 0;
  for (; i + 1 < n; i += 2) {
    box_muller(next_u64(), next_u64(), v[i], v[i + 1]);
  }
  if (i < n) v[i] = normal();
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& state) {
  Rng r(0);
  std::istringstream in(state);
  in >> r.engine_;
  if (in.fail()) throw std::invalid_argument("Rng: malformed serialized state");
  return r;
}

}  // namespace roic
