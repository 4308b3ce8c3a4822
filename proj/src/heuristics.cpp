#include "pdfa/heuristics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pdfa {

std::string_view to_string(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::CSS: return "css";
    case HeuristicKind::CSSMinHash: return "css-minhash";
    case HeuristicKind::CSSCellWise: return "css-cellwise";
    case HeuristicKind::Alergia: return "alergia";
    case HeuristicKind::AlergiaKTails: return "alergia-ktails";
  }
  return "?";
}

HeuristicKind parse_heuristic_kind(std::string_view name) {
  for (auto k : {HeuristicKind::CSS, HeuristicKind::CSSMinHash, HeuristicKind::CSSCellWise, HeuristicKind::Alergia,
                 HeuristicKind::AlergiaKTails}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown heuristic '" + std::string(name) + "'");
}

SketchLayout HeuristicConfig::sketch_layout() const {
  switch (kind) {
    case HeuristicKind::CSS:
    case HeuristicKind::CSSCellWise: return {future_length, 0};
    case HeuristicKind::CSSMinHash: return {future_length, minhash_length};
    default: return {0, 0};
  }
}

void HeuristicConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (narrowing < 0.0) throw std::invalid_argument("narrowing must be non-negative");
  if (uses_sketches() && future_length < 1) throw std::invalid_argument("F_s must be at least 1");
  if (kind == HeuristicKind::CSSMinHash && (minhash_length == 0 || minhash_length >= future_length)) {
    throw std::invalid_argument("CSS-MinHash needs 0 < l_m < F_s");
  }
}

double hoeffding_threshold(double n1, double n2, double alpha) {
  return std::sqrt(0.5 * std::log(2.0 / alpha)) * (1.0 / std::sqrt(n1) + 1.0 / std::sqrt(n2));
}

bool hoeffding_check_frequencies(double f1, double n1, double f2, double n2, double alpha, double narrowing) {
  return std::abs(f1 - f2) < hoeffding_threshold(n1, n2, alpha) - narrowing;
}

bool hoeffding_check(std::uint64_t c1, std::uint64_t n1, std::uint64_t c2, std::uint64_t n2, double alpha,
                     double narrowing) {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("hoeffding_check needs non-empty samples");
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  return hoeffding_check_frequencies(static_cast<double>(c1) / a, a, static_cast<double>(c2) / b, b, alpha,
                                     narrowing);
}

double cosine_similarity(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    dot += v1[i] * v2[i];
    s1 += v1[i] * v1[i];
    s2 += v2[i] * v2[i];
  }
  if (s1 == 0.0 || s2 == 0.0) return 0.0;
  return dot / (std::sqrt(s1) * std::sqrt(s2));
}

namespace {

// Cosine accumulated on the fly; identical arithmetic to cosine_similarity.
struct CosineAccumulator {
  double dot = 0.0, s1 = 0.0, s2 = 0.0;
  void add(double a, double b) {
    dot += a * b;
    s1 += a * a;
    s2 += b * b;
  }
  double value() const { return (s1 == 0.0 || s2 == 0.0) ? 0.0 : dot / (std::sqrt(s1) * std::sqrt(s2)); }
};

}  // namespace

HeuristicVerdict css_consistency(const SketchStack& stack1, std::uint64_t n1, const SketchStack& stack2,
                                 std::uint64_t n2, std::span<const KeyRegistry> registries,
                                 const SketchLayout& layout, double alpha, double narrowing, CssTrace* trace) {
  if (stack1.layer_count() != stack2.layer_count() || registries.size() < stack1.layer_count()) {
    throw std::invalid_argument("css_consistency: layer mismatch");
  }
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("css_consistency: empty state");
  double score_sum = 0.0;
  for (std::size_t layer = 0; layer < stack1.layer_count(); ++layer) {
    if (trace) ++trace->layers_evaluated;
    const double span = static_cast<double>(layout.lengths_in_layer(layer));
    const double m1 = static_cast<double>(n1), m2 = static_cast<double>(n2);
    const double threshold = hoeffding_threshold(m1, m2, alpha) - narrowing;
    const auto& a = stack1.layer(layer);
    const auto& b = stack2.layer(layer);
    const auto& registry = registries[layer];
    CosineAccumulator cos;
    for (std::size_t i = 0; i < registry.size(); ++i) {
      if (trace) ++trace->keys_evaluated;
      const auto cols = registry.columns(i);
      const double f1 = static_cast<double>(a.retrieve_columns(cols)) / (m1 * span);
      const double f2 = static_cast<double>(b.retrieve_columns(cols)) / (m2 * span);
      if (!(std::abs(f1 - f2) < threshold)) return HeuristicVerdict::reject();
      cos.add(f1, f2);
    }
    score_sum += cos.value();
  }
  const auto layers = stack1.layer_count();
  return HeuristicVerdict::accept(layers == 0 ? 0.0 : score_sum / static_cast<double>(layers));
}

HeuristicVerdict css_cellwise_consistency(const SketchStack& stack1, std::uint64_t n1, const SketchStack& stack2,
                                          std::uint64_t n2, const SketchLayout& layout, double alpha,
                                          double narrowing) {
  if (stack1.layer_count() != stack2.layer_count()) throw std::invalid_argument("cell-wise: layer mismatch");
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("cell-wise: empty state");
  double score_sum = 0.0;
  for (std::size_t layer = 0; layer < stack1.layer_count(); ++layer) {
    const auto& a = stack1.layer(layer);
    const auto& b = stack2.layer(layer);
    if (!(a.family() == b.family())) throw std::invalid_argument("cell-wise: sketch dimensions differ");
    const double span = static_cast<double>(layout.lengths_in_layer(layer));
    const double m1 = static_cast<double>(n1), m2 = static_cast<double>(n2);
    const double threshold = hoeffding_threshold(m1, m2, alpha) - narrowing;
    CosineAccumulator cos;
    const auto cells = static_cast<std::uint32_t>(a.width() * a.depth());
    for (std::uint32_t c = 0; c < cells; ++c) {
      const double f1 = static_cast<double>(a.cells().get(c)) / (m1 * span);
      const double f2 = static_cast<double>(b.cells().get(c)) / (m2 * span);
      if (!(std::abs(f1 - f2) < threshold)) return HeuristicVerdict::reject();
      cos.add(f1, f2);
    }
    score_sum += cos.value();
  }
  const auto layers = stack1.layer_count();
  return HeuristicVerdict::accept(layers == 0 ? 0.0 : score_sum / static_cast<double>(layers));
}

namespace {

bool alergia_recursive(const PrefixTree& tree, StateId q1, StateId q2, double alpha, std::size_t depth_left,
                       std::vector<StateId>* touched) {
  if (q1 == q2) return true;
  if (touched) {
    touched->push_back(q1);
    touched->push_back(q2);
  }
  const Node& a = tree.node(q1);
  const Node& b = tree.node(q2);
  if (!hoeffding_check(a.final_count, a.size, b.final_count, b.size, alpha)) return false;
  for (std::size_t s = 0; s < a.symbol_counts.size(); ++s) {
    if (!hoeffding_check(a.symbol_counts[s], a.size, b.symbol_counts[s], b.size, alpha)) return false;
  }
  if (depth_left == 0) return true;
  for (const auto& [sym, c1] : a.children) {
    auto c2 = tree.child(q2, sym);
    if (!c2) continue;
    if (!alergia_recursive(tree, tree.find(c1), *c2, alpha, depth_left - 1, touched)) return false;
  }
  return true;
}

}  // namespace

HeuristicVerdict alergia_consistency(const PrefixTree& tree, StateId q1, StateId q2, double alpha, std::size_t k,
                                     std::vector<StateId>* touched) {
  if (!alergia_recursive(tree, q1, q2, alpha, k, touched)) return HeuristicVerdict::reject();
  const Node& a = tree.node(q1);
  const Node& b = tree.node(q2);
  const double n1 = static_cast<double>(a.size), n2 = static_cast<double>(b.size);
  std::vector<double> v1, v2;
  v1.reserve(a.symbol_counts.size() + 1);
  v2.reserve(a.symbol_counts.size() + 1);
  for (std::size_t s = 0; s < a.symbol_counts.size(); ++s) {
    v1.push_back(static_cast<double>(a.symbol_counts[s]) / n1);
    v2.push_back(static_cast<double>(b.symbol_counts[s]) / n2);
  }
  v1.push_back(static_cast<double>(a.final_count) / n1);
  v2.push_back(static_cast<double>(b.final_count) / n2);
  return HeuristicVerdict::accept(cosine_similarity(v1, v2));
}

ConsistencyChecker::ConsistencyChecker(HeuristicConfig config) : config_(config) { config_.validate(); }

HeuristicVerdict ConsistencyChecker::evaluate(const PrefixTree& tree, StateId q1, StateId q2,
                                              std::vector<StateId>* touched) const {
  const Node& a = tree.node(q1);
  const Node& b = tree.node(q2);
  switch (config_.kind) {
    case HeuristicKind::CSS:
    case HeuristicKind::CSSMinHash: {
      if (touched) {
        touched->push_back(q1);
        touched->push_back(q2);
      }
      const auto& ctx = tree.sketch_context();
      return css_consistency(a.sketches, a.size, b.sketches, b.size, ctx.registries(), ctx.layout(),
                             config_.alpha, config_.narrowing);
    }
    case HeuristicKind::CSSCellWise:
      if (touched) {
        touched->push_back(q1);
        touched->push_back(q2);
      }
      return css_cellwise_consistency(a.sketches, a.size, b.sketches, b.size, tree.sketch_context().layout(),
                                      config_.alpha, config_.narrowing);
    case HeuristicKind::Alergia: return alergia_consistency(tree, q1, q2, config_.alpha, 0, touched);
    case HeuristicKind::AlergiaKTails:
      return alergia_consistency(tree, q1, q2, config_.alpha, config_.ktails_depth, touched);
  }
  return HeuristicVerdict::reject();
}

}  // namespace pdfa
