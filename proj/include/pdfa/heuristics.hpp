#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdfa/prefix_tree.hpp"
#include "pdfa/sketch.hpp"

namespace pdfa {

struct HeuristicVerdict {
  bool consistent = false;
  std::optional<double> score;  // present iff consistent

  static HeuristicVerdict reject() { return {false, std::nullopt}; }
  static HeuristicVerdict accept(double score) { return {true, score}; }
  friend bool operator==(const HeuristicVerdict&, const HeuristicVerdict&) = default;
};

enum class HeuristicKind { CSS, CSSMinHash, CSSCellWise, Alergia, AlergiaKTails };

std::string_view to_string(HeuristicKind kind);
/// Accepts css, css-minhash, css-cellwise, alergia, alergia-ktails.
HeuristicKind parse_heuristic_kind(std::string_view name);

struct HeuristicConfig {
  HeuristicKind kind = HeuristicKind::CSSMinHash;
  double alpha = 0.05;
  std::size_t future_length = 4;   // F_s
  std::size_t minhash_length = 2;  // l_m
  std::size_t ktails_depth = 3;    // k
  /// Subtracts beta from the Hoeffding threshold (the narrowed test); 0 = off.
  double narrowing = 0.0;

  bool uses_sketches() const { return kind == HeuristicKind::CSS || kind == HeuristicKind::CSSMinHash || kind == HeuristicKind::CSSCellWise; }
  /// Layout of the per-state sketch stacks this heuristic reads.
  SketchLayout sketch_layout() const;
  void validate() const;
};

/// |c1/n1 - c2/n2| < sqrt(ln(2/alpha)/2) * (1/sqrt(n1) + 1/sqrt(n2)) - narrowing.
bool hoeffding_check(std::uint64_t c1, std::uint64_t n1, std::uint64_t c2, std::uint64_t n2, double alpha,
                     double narrowing = 0.0);
/// Same test on precomputed frequencies.
bool hoeffding_check_frequencies(double f1, double n1, double f2, double n2, double alpha, double narrowing = 0.0);
double hoeffding_threshold(double n1, double n2, double alpha);

/// dot(v1,v2)/(|v1||v2|); 0 when either vector is all zeros. Throws
/// std::invalid_argument on length mismatch.
double cosine_similarity(std::span<const double> v1, std::span<const double> v2);

/// Counters exposed for tests that check layer short-circuiting.
struct CssTrace {
  std::size_t layers_evaluated = 0;
  std::size_t keys_evaluated = 0;
};

/// Layered sketch consistency: layers in ascending order, each iterating its
/// registry of observed keys; the first Hoeffding failure rejects and skips
/// the remaining layers. Score is the mean of per-layer cosines.
HeuristicVerdict css_consistency(const SketchStack& stack1, std::uint64_t n1, const SketchStack& stack2,
                                 std::uint64_t n2, std::span<const KeyRegistry> registries,
                                 const SketchLayout& layout, double alpha, double narrowing = 0.0,
                                 CssTrace* trace = nullptr);

/// Hoeffding test on every aligned cell pair; O(w*d) per layer.
HeuristicVerdict css_cellwise_consistency(const SketchStack& stack1, std::uint64_t n1, const SketchStack& stack2,
                                          std::uint64_t n2, const SketchLayout& layout, double alpha,
                                          double narrowing = 0.0);

/// Alergia test on symbol and final frequencies, recursing into shared
/// children down to depth k. `touched` (optional) collects visited nodes.
HeuristicVerdict alergia_consistency(const PrefixTree& tree, StateId q1, StateId q2, double alpha, std::size_t k,
                                     std::vector<StateId>* touched = nullptr);

/// Dispatches a configured heuristic over two tree states.
class ConsistencyChecker {
 public:
  explicit ConsistencyChecker(HeuristicConfig config);

  const HeuristicConfig& config() const { return config_; }
  HeuristicVerdict evaluate(const PrefixTree& tree, StateId q1, StateId q2,
                            std::vector<StateId>* touched = nullptr) const;

 private:
  HeuristicConfig config_;
};

}  // namespace pdfa
