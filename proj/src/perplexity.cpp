#include "pdfa/perplexity.hpp"

#include <cmath>
#include <stdexcept>

namespace pdfa {

double perplexity_from_probabilities(std::span<const double> candidate, std::span<const double> target,
                                     double epsilon) {
  if (candidate.size() != target.size()) throw std::invalid_argument("candidate and target sizes differ");
  if (epsilon < 0.0) throw std::invalid_argument("smoothing must be non-negative");
  double norm = 0.0;
  for (double c : candidate) norm += c + epsilon;
  double cross = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] <= 0.0) continue;
    cross -= target[i] * std::log2((candidate[i] + epsilon) / norm);
  }
  return std::exp2(cross);
}

std::vector<double> model_probabilities(const PdfaView& model, std::span<const Trace> test) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const auto& t : test) out.push_back(string_probability(model, t).value);
  return out;
}

double perplexity(const PdfaView& model, std::span<const Trace> test, std::span<const double> solution,
                  double epsilon) {
  const auto probs = model_probabilities(model, test);
  return perplexity_from_probabilities(probs, solution, epsilon);
}

double true_perplexity(std::span<const double> solution) {
  return perplexity_from_probabilities(solution, solution, 0.0);
}

}  // namespace pdfa
