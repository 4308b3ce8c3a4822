#include "pdfa/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdfa {

Trace Trace::from_body(std::span<const Symbol> body, Alphabet alphabet) {
  Trace t;
  t.symbols_.reserve(body.size() + 1);
  for (Symbol s : body) {
    if (!alphabet.contains(s)) {
      throw std::out_of_range("symbol " + std::to_string(s) + " outside alphabet of size " +
                              std::to_string(alphabet.size));
    }
    t.symbols_.push_back(s);
  }
  t.symbols_.push_back(alphabet.final_symbol());
  return t;
}

const PdfaTransition* PdfaState::find(Symbol a) const {
  auto it = std::lower_bound(transitions.begin(), transitions.end(), a,
                             [](const PdfaTransition& t, Symbol s) { return t.symbol < s; });
  if (it == transitions.end() || it->symbol != a) return nullptr;
  return &*it;
}

double PdfaView::max_normalization_error() const {
  double worst = 0.0;
  for (const auto& s : states) {
    double total = s.final_prob;
    for (const auto& t : s.transitions) total += t.prob;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

void PdfaView::validate() const {
  if (states.empty()) throw StructuralError("automaton has no states");
  if (root >= states.size()) throw StructuralError("root out of range");
  for (std::size_t q = 0; q < states.size(); ++q) {
    const auto& s = states[q];
    if (s.final_prob < 0.0 || s.final_prob > 1.0) {
      throw StructuralError("final probability out of range at state " + std::to_string(q));
    }
    for (std::size_t i = 0; i < s.transitions.size(); ++i) {
      const auto& t = s.transitions[i];
      if (i > 0 && s.transitions[i - 1].symbol >= t.symbol) {
        throw StructuralError("transitions not sorted/unique at state " + std::to_string(q));
      }
      if (!alphabet.contains(t.symbol)) throw StructuralError("transition symbol outside alphabet");
      if (t.target && *t.target >= states.size()) throw StructuralError("dangling transition target");
      if (t.prob < 0.0 || t.prob > 1.0) throw StructuralError("transition probability out of range");
    }
  }
  if (max_normalization_error() > 1e-9) throw StructuralError("state probabilities do not sum to one");
}

StringProbability string_probability(const PdfaView& model, const Trace& trace) {
  StringProbability out;
  StateId q = model.root;
  double p = 1.0;
  for (Symbol a : trace.body()) {
    const PdfaTransition* t = model.states[q].find(a);
    if (t == nullptr || !t->target) {
      out.missing_transition = true;
      return out;
    }
    p *= t->prob;
    q = *t->target;
  }
  out.value = p * model.states[q].final_prob;
  return out;
}

PdfaView normalize_counts(const CountModel& counts) {
  PdfaView view;
  view.alphabet = counts.alphabet;
  view.root = counts.root;
  view.states.reserve(counts.states.size());
  for (std::size_t q = 0; q < counts.states.size(); ++q) {
    const auto& c = counts.states[q];
    if (c.size == 0) throw StructuralError("state " + std::to_string(q) + " has size zero");
    const double n = static_cast<double>(c.size);
    PdfaState s;
    s.final_prob = static_cast<double>(c.final_count) / n;
    for (const auto& out : c.transitions) {
      if (out.count == 0) continue;
      s.transitions.push_back({out.symbol, out.target, static_cast<double>(out.count) / n});
    }
    std::sort(s.transitions.begin(), s.transitions.end(),
              [](const PdfaTransition& a, const PdfaTransition& b) { return a.symbol < b.symbol; });
    view.states.push_back(std::move(s));
  }
  return view;
}

}  // namespace pdfa
