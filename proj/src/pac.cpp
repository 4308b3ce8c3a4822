#include "pdfa/pac.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pdfa/sketch.hpp"

namespace pdfa::pac {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void PacParams::validate() const {
  require(mu > 0.0 && mu <= 1.0, "mu must lie in (0, 1]");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(beta > 0.0 && beta < mu, "beta must lie in (0, mu)");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(delta_prime > 0.0 && delta_prime < 1.0, "delta' must lie in (0, 1)");
  require(n >= 1, "n must be at least 1");
  require(alphabet_size >= 1, "alphabet size must be at least 1");
  require(future_length >= 1, "F_s must be at least 1");
  require(w >= 1 && d >= 1, "w and d must be at least 1");
}

double f_m0(double m, double mu, double alpha) {
  const double inv = 1.0 / (2.0 * m);
  const double gap = mu - std::sqrt((2.0 / m) * std::log(2.0 / alpha));
  return inv / (inv + gap * gap);
}

double f_m0_argmax(double mu, double alpha) { return 2.0 * std::log(2.0 / alpha) / (mu * mu); }

std::uint64_t min_m0(double mu, double alpha, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("bound must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  auto f = [&](std::uint64_t m) { return f_m0(static_cast<double>(m), mu, alpha); };
  // f rises up to its argmax and decreases afterwards; scan to the first
  // integer past the maximum.
  std::uint64_t peak = static_cast<std::uint64_t>(std::floor(f_m0_argmax(mu, alpha)));
  if (peak < 1) peak = 1;
  while (f(peak + 1) >= f(peak)) ++peak;
  if (f(peak) > bound) {
    std::uint64_t lo = peak, hi = peak;  // f(lo) > bound
    while (f(hi) > bound) {
      lo = hi;
      if (hi > std::numeric_limits<std::uint64_t>::max() / 2) throw std::overflow_error("m0 out of range");
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      (f(mid) > bound ? lo : hi) = mid;
    }
    return hi;
  }
  // Whole tail satisfies the bound; the rising side is increasing, so find
  // the last m below the peak that still exceeds it.
  if (f(1) <= bound) return 1;
  std::uint64_t lo = 1, hi = peak;  // f(lo) > bound >= f(hi)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (f(mid) > bound ? lo : hi) = mid;
  }
  return hi;
}

double m0_target(const PacParams& p) {
  const double n = static_cast<double>(p.n), s = static_cast<double>(p.alphabet_size);
  const double cells = static_cast<double>(p.w) * static_cast<double>(p.d);
  return p.delta_prime / (2.0 * n * n * s * s * cells * cells * static_cast<double>(p.future_length));
}

BatchBound batch_lower_bound(std::uint64_t n, std::uint64_t alphabet_size, double epsilon, double delta_prime,
                             std::uint64_t m0) {
  const double ns = static_cast<double>(n) * static_cast<double>(alphabet_size);
  BatchBound b;
  b.hoeffding_term = (8.0 * ns * ns / (epsilon * epsilon)) * std::log(2.0 * ns * ns / delta_prime);
  b.sample_term = 4.0 * static_cast<double>(m0) * ns / epsilon;
  b.value = std::ceil(std::max(b.hoeffding_term, b.sample_term));
  return b;
}

BatchBound batch_lower_bound(const PacParams& p, std::uint64_t m0) {
  return batch_lower_bound(p.n, p.alphabet_size, p.epsilon, p.delta_prime, m0);
}

CollisionBound collision_bound(std::uint64_t alphabet_size, std::uint64_t w, double t) {
  if (w == 0) throw std::invalid_argument("w must be positive");
  const double s = static_cast<double>(alphabet_size), p = 1.0 / static_cast<double>(w);
  CollisionBound out;
  out.mean = s * p;
  out.stddev = std::sqrt(s * p * (1.0 - p));
  out.reliable = alphabet_size >= 10 * w;
  if (out.stddev == 0.0) {
    out.probability = t >= out.mean ? 1.0 : 0.0;
  } else {
    const double z = (t + 0.5 - out.mean) / out.stddev;
    out.probability = 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
  return out;
}

double cellwise_m0_bound(std::uint64_t n_c, std::uint64_t n, std::uint64_t alphabet_size, double mu,
                         double delta_prime) {
  if (n_c == 0) throw std::invalid_argument("n_c must be at least 1");
  const double nc = static_cast<double>(n_c);
  const double ns = static_cast<double>(n) * static_cast<double>(alphabet_size);
  const double q = mu / (4.0 * nc);
  return std::ceil(nc * ns * ns / (q * q * delta_prime));
}

std::string report(const PacParams& p) {
  p.validate();
  const auto dims = sketch_dimensions(p.beta, p.gamma);
  const double target = m0_target(p);
  const auto m0 = min_m0(p.mu, p.alpha, target);
  const auto batch = batch_lower_bound(p, m0);
  std::ostringstream out;
  out << "parameters: mu=" << p.mu << " alpha=" << p.alpha << " beta=" << p.beta << " gamma=" << p.gamma
      << " eps=" << p.epsilon << " delta'=" << p.delta_prime << " n=" << p.n << " |Sigma|=" << p.alphabet_size
      << " F_s=" << p.future_length << " w=" << p.w << " d=" << p.d << '\n';
  out << "suggested sketch: w=" << dims.width << " d=" << dims.depth << "  (from beta, gamma)\n";
  out << "f(m0) argmax ~ " << f_m0_argmax(p.mu, p.alpha) << '\n';
  out << "m0 target f(m0) <= " << target << '\n';
  out << "m0 = " << m0 << '\n';
  out.precision(6);
  out << "batch bound term 1 (Hoeffding) = " << batch.hoeffding_term << '\n';
  out << "batch bound term 2 (4 m0 n |Sigma| / eps) = " << batch.sample_term << '\n';
  out << "B >= " << std::fixed << std::setprecision(0) << batch.value << "  (dominant: "
      << (batch.hoeffding_dominates() ? "term 1" : "term 2") << ")\n";
  const auto coll = collision_bound(p.alphabet_size, p.w, std::ceil(static_cast<double>(p.alphabet_size) /
                                                                      static_cast<double>(p.w)));
  out << std::defaultfloat << std::setprecision(6) << "collisions per cell: mean " << coll.mean << ", P(n' <= "
      << std::ceil(coll.mean) << ") = " << coll.probability << (coll.reliable ? "" : "  (|Sigma| < 10 w: unreliable)")
      << '\n';
  return out.str();
}

}  // namespace pdfa::pac
