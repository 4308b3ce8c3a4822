#pragma once

#include <cstdint>
#include <string>

namespace pdfa::pac {

struct PacParams {
  double mu = 0.5;
  double alpha = 0.05;
  double beta = 0.01;
  double gamma = 0.01;
  double epsilon = 0.1;
  double delta_prime = 0.05;
  std::uint64_t n = 10;
  std::uint64_t alphabet_size = 8;
  std::uint64_t future_length = 4;  // F_s
  std::uint64_t w = 128;
  std::uint64_t d = 4;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// (1/(2m)) / (1/(2m) + (mu - sqrt((2/m) ln(2/alpha)))^2)
double f_m0(double m, double mu, double alpha);

/// The real-valued location of the maximum of f (where f == 1).
double f_m0_argmax(double mu, double alpha);

/// Smallest m with f(m') <= bound for every m' >= m.
std::uint64_t min_m0(double mu, double alpha, double bound);

/// delta' / (2 n^2 |Sigma|^2 (w d)^2 F_s): the per-pair false-accept budget m0 must meet.
double m0_target(const PacParams& p);

struct BatchBound {
  double hoeffding_term = 0.0;  // (8 n^2 |Sigma|^2 / eps^2) ln(2 n^2 |Sigma|^2 / delta')
  double sample_term = 0.0;     // 4 m0 n |Sigma| / eps
  double value = 0.0;           // ceil(max of both)
  bool hoeffding_dominates() const { return hoeffding_term >= sample_term; }
};

BatchBound batch_lower_bound(std::uint64_t n, std::uint64_t alphabet_size, double epsilon, double delta_prime,
                             std::uint64_t m0);
BatchBound batch_lower_bound(const PacParams& p, std::uint64_t m0);

struct CollisionBound {
  double probability = 0.0;  // P(n' <= t)
  double mean = 0.0;
  double stddev = 0.0;
  /// False when |Sigma| < 10 w, where the normal approximation is poor.
  bool reliable = true;
};

/// Normal approximation (with continuity correction) to Binomial(|Sigma|, 1/w).
CollisionBound collision_bound(std::uint64_t alphabet_size, std::uint64_t w, double t);

/// ceil(n_c n^2 |Sigma|^2 / ((mu / (4 n_c))^2 delta'))
double cellwise_m0_bound(std::uint64_t n_c, std::uint64_t n, std::uint64_t alphabet_size, double mu,
                         double delta_prime);

/// Suggested w, d, m0 and B for the given parameters as printable text.
std::string report(const PacParams& p);

}  // namespace pdfa::pac
