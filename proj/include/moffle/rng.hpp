#pragma once

#include <cstdint>
#include <string>

#include "moffle/common.hpp"

namespace moffle {

// Counter-based stream: output i is a pure function of (key, i), so streams can
// be split per episode/worker and results do not depend on interleaving.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key = 0) : key_(key), counter_(0) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();

  // Uniform integer in {0, ..., n-1}, n >= 1.
  int uniform_int(int n);

  // Index sampled from an unnormalized nonnegative weight vector.
  int categorical(const Vector& probs);

  // Standard normal via Box-Muller.
  double normal();

  // Gamma(alpha, 1), alpha > 0 (Marsaglia-Tsang with boost for alpha < 1).
  double gamma(double alpha);

  // Dirichlet(alpha * ones(dim)); returns a point on the simplex.
  Vector dirichlet(double alpha, int dim);

  // Child stream fully determined by (key, id); independent of this stream's counter.
  RngStream derive(std::uint64_t id) const;
  RngStream derive(const std::string& label) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

std::uint64_t hash_label(const std::string& label);

}  // namespace moffle
