#pragma once

#include <span>
#include <vector>

#include "pdfa/core.hpp"

namespace pdfa {

inline constexpr double kDefaultSmoothing = 1e-9;

/// 2^(-sum_i target_i * log2 candidate'_i), with candidate'_i the smoothed
/// candidate renormalized over the given set:
/// (c_i + epsilon) / sum_j (c_j + epsilon). Terms with target_i == 0 are skipped.
double perplexity_from_probabilities(std::span<const double> candidate, std::span<const double> target,
                                     double epsilon = kDefaultSmoothing);

/// Probabilities the model assigns to each test string (0 when a transition is missing).
std::vector<double> model_probabilities(const PdfaView& model, std::span<const Trace> test);

double perplexity(const PdfaView& model, std::span<const Trace> test, std::span<const double> solution,
                  double epsilon = kDefaultSmoothing);

/// Perplexity of the solution distribution against itself (the entropy floor).
double true_perplexity(std::span<const double> solution);

}  // namespace pdfa
