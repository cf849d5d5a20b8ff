#include "moffle/rng.hpp"

#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + kGolden * counter_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RngStream::uniform_int(int n) {
  if (n < 1) throw InvalidArgument("uniform_int needs n >= 1");
  // Rejection to avoid modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return static_cast<int>(v % bound);
}

int RngStream::categorical(const Vector& probs) {
  const int n = static_cast<int>(probs.size());
  if (n == 0) throw InvalidArgument("categorical on empty weight vector");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] < 0.0) throw InvalidArgument("categorical weight is negative");
    total += probs[i];
  }
  if (total <= 0.0) throw InvalidArgument("categorical weights sum to zero");
  double u = uniform() * total;
  for (int i = 0; i < n; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

double RngStream::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::gamma(double alpha) {
  if (alpha <= 0.0) throw InvalidArgument("gamma needs alpha > 0");
  if (alpha < 1.0) {
    const double u = uniform();
    return gamma(alpha + 1.0) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Vector RngStream::dirichlet(double alpha, int dim) {
  if (dim < 1) throw InvalidArgument("dirichlet needs dim >= 1");
  Vector out(dim);
  double total = 0.0;
  for (int i = 0; i < dim; ++i) {
    out[i] = gamma(alpha);
    total += out[i];
  }
  if (total <= 0.0) {
    out.setConstant(1.0 / dim);
    return out;
  }
  out /= total;
  return out;
}

RngStream RngStream::derive(std::uint64_t id) const {
  return RngStream(mix64(key_ ^ mix64(id + kGolden)));
}

RngStream RngStream::derive(const std::string& label) const {
  return derive(hash_label(label));
}

std::uint64_t hash_label(const std::string& label) {
  // FNV-1a.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace moffle
