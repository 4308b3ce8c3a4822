#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdfa {

/// Index into the alphabet. The final symbol is encoded as index |Sigma|.
using Symbol = std::uint32_t;
using StateId = std::uint32_t;

/// Raised when an automaton or tree violates a structural precondition.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Alphabet {
  std::size_t size = 0;

  Symbol final_symbol() const { return static_cast<Symbol>(size); }
  /// Number of distinct values a trace position can take (symbols plus final).
  std::size_t extended_size() const { return size + 1; }
  bool contains(Symbol s) const { return s < size; }
};

/// A string followed by the final symbol.
class Trace {
 public:
  /// Builds a trace from the string body and appends the final symbol.
  static Trace from_body(std::span<const Symbol> body, Alphabet alphabet);
  static Trace from_body(std::initializer_list<Symbol> body, Alphabet alphabet) {
    return from_body(std::span<const Symbol>(body.begin(), body.size()), alphabet);
  }

  std::span<const Symbol> symbols() const { return symbols_; }
  /// The string without its terminating final symbol.
  std::span<const Symbol> body() const { return std::span<const Symbol>(symbols_).first(symbols_.size() - 1); }
  std::size_t size() const { return symbols_.size(); }
  std::size_t length() const { return symbols_.size() - 1; }
  Symbol operator[](std::size_t i) const { return symbols_[i]; }
  Symbol final_symbol() const { return symbols_.back(); }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<Symbol> symbols_;
};

struct PdfaTransition {
  Symbol symbol = 0;
  /// Empty when the learner saw the symbol but did not route it to a state.
  std::optional<StateId> target;
  double prob = 0.0;
};

struct PdfaState {
  double final_prob = 0.0;
  std::vector<PdfaTransition> transitions;  // sorted by symbol, unique

  const PdfaTransition* find(Symbol a) const;
};

/// Read-only probabilistic deterministic automaton.
struct PdfaView {
  Alphabet alphabet;
  StateId root = 0;
  std::vector<PdfaState> states;

  std::size_t size() const { return states.size(); }
  /// Largest |final + sum(symbol probs) - 1| over all states.
  double max_normalization_error() const;
  /// Throws StructuralError on nondeterminism, dangling targets or bad probabilities.
  void validate() const;
};

struct StringProbability {
  double value = 0.0;
  bool missing_transition = false;
};

StringProbability string_probability(const PdfaView& model, const Trace& trace);

/// Merge-time counts of one state before normalization.
struct CountState {
  std::uint64_t size = 0;  // n_q
  std::uint64_t final_count = 0;
  struct Out {
    Symbol symbol = 0;
    std::optional<StateId> target;
    std::uint64_t count = 0;
  };
  std::vector<Out> transitions;
};

struct CountModel {
  Alphabet alphabet;
  StateId root = 0;
  std::vector<CountState> states;
};

/// lambda(q,a) = count(q,a)/n_q, eta(q) = final(q)/n_q.
PdfaView normalize_counts(const CountModel& counts);

}  // namespace pdfa
