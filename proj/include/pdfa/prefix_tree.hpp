#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdfa/core.hpp"
#include "pdfa/sketch.hpp"

namespace pdfa {

enum class Color : std::uint8_t { White = 0, Blue = 1, Red = 2 };

const char* to_string(Color c);

/// Sorted symbol -> node map; children are few, so a flat vector wins.
class ChildMap {
 public:
  std::optional<StateId> get(Symbol a) const;
  /// Sets (or, with nullopt, erases) the entry and returns the previous target.
  std::optional<StateId> set(Symbol a, std::optional<StateId> target);
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<std::pair<Symbol, StateId>> entries_;
};

struct Node {
  StateId id = 0;
  Color color = Color::White;
  /// Colour this node carried in the last hypothesis; lets gated ingestion
  /// keep growing the tree below it after all refinements were undone.
  Color mark = Color::White;
  std::optional<StateId> parent;
  std::optional<Symbol> in_symbol;
  ChildMap children;
  std::uint64_t size = 0;  // n_q: visits by input strings
  std::vector<std::uint64_t> symbol_counts;
  std::uint64_t final_count = 0;
  SketchStack sketches;
  StateId representative = 0;
};

/// A red-blue refinement descriptor, replayable across batches.
struct Refinement {
  enum class Kind : std::uint8_t { Merge, Promote };
  Kind kind = Kind::Promote;
  StateId red = 0;  // unused for promotions
  StateId blue = 0;

  static Refinement merge(StateId red, StateId blue) { return {Kind::Merge, red, blue}; }
  static Refinement promote(StateId blue) { return {Kind::Promote, 0, blue}; }
  friend bool operator==(const Refinement&, const Refinement&) = default;
};

std::string to_string(const Refinement& r);

/// Handle on a performed refinement; its undo record is the journal slice
/// [journal_begin, journal_end).
struct AppliedRefinement {
  Refinement op;
  std::size_t journal_begin = 0;
  std::size_t journal_end = 0;
  std::size_t sequence = 0;
};

enum class GrowthPolicy {
  Full,   // every visited node may spawn children (batch prefix tree)
  Gated,  // only red/blue (or red/blue-marked) nodes spawn children
};

struct TreeConfig {
  Alphabet alphabet;
  /// future_length == 0 disables sketches (count-based heuristics only).
  SketchLayout layout{0, 0};
  SketchDimensions dims = kDefaultSketchDimensions;
  std::uint64_t seed = 0;
  std::uint64_t blue_threshold = 1;  // t_S
};

struct IngestResult {
  std::size_t visited = 0;
  std::size_t created = 0;
  /// Children created below a node that was neither red nor blue. Always 0
  /// under GrowthPolicy::Gated.
  std::size_t created_under_white = 0;
};

class PrefixTree {
 public:
  explicit PrefixTree(TreeConfig config);

  StateId root() const { return 0; }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(StateId q) const { return nodes_.at(q); }
  const TreeConfig& config() const { return config_; }
  Alphabet alphabet() const { return config_.alphabet; }
  bool has_sketches() const { return sketches_.has_value(); }
  const SketchContext& sketch_context() const { return *sketches_; }

  /// Walks `trace` from the root (through merged representatives),
  /// updating counts and sketches of every visited state.
  IngestResult ingest(const Trace& trace, GrowthPolicy policy);

  StateId find(StateId q) const;
  bool alive(StateId q) const { return nodes_.at(q).representative == q; }
  /// Child of `q` on `a`, resolved to its representative.
  std::optional<StateId> child(StateId q, Symbol a) const;
  Color effective_color(StateId q) const;

  const std::set<StateId>& reds() const { return reds_; }
  const std::set<StateId>& blues() const { return blues_; }
  std::size_t white_count() const;

  bool structurally_possible(const Refinement& r) const;
  /// Folds `blue` into `red` (recursive determinization). Throws
  /// StructuralError unless red is a live red state and blue a live blue one.
  AppliedRefinement merge(StateId red, StateId blue);
  /// Turns `blue` red and colours its qualifying white children blue.
  AppliedRefinement promote(StateId blue);
  AppliedRefinement apply(const Refinement& r);
  /// Reverts the most recent refinement; anything else throws std::logic_error.
  void undo(const AppliedRefinement& applied);
  void undo_all();
  /// Makes every applied refinement permanent and drops the journal.
  void commit();
  std::size_t applied_count() const { return applied_.size(); }
  std::size_t journal_size() const { return journal_.size(); }

  /// Every node whose representative is red or blue, with that colour; taken
  /// from a hypothesis snapshot and later applied as growth marks.
  std::vector<std::pair<StateId, Color>> coloured_nodes() const;
  void apply_marks(std::span<const std::pair<StateId, Color>> marks);

  /// Bumped whenever a node's counts, sketches, children or representative change.
  std::uint64_t version(StateId q) const { return versions_[q]; }

  /// Canonical hash over structure, colours, marks, counts and sketch cells.
  std::uint64_t state_hash() const;

  /// Count model over the live red states (root first, breadth-first).
  CountModel hypothesis_counts() const;
  /// Normalized hypothesis; a tree that has seen no traces yields the
  /// root-only model that stops immediately.
  PdfaView hypothesis() const;

  /// nodes x (fixed node overhead + dense sketch stack bytes).
  std::size_t memory_estimate_bytes() const;
  std::size_t node_overhead_bytes() const;

  std::string to_json() const;
  std::string to_dot() const;

 private:
  struct JournalEntry {
    enum class Op : std::uint8_t { SetColor, Absorb, Relink };
    Op op;
    StateId a;
    StateId b;  // absorbed node, or new child target
    Symbol symbol;
    Color old_color;
    Color new_color;
    std::optional<StateId> old_target;
  };

  StateId create_child(StateId parent, Symbol a);
  void visit(StateId q, std::span<const Symbol> remaining);
  void set_color(StateId q, Color c);
  void absorb(StateId into, StateId from);
  void relink(StateId q, Symbol a, StateId target);
  void colour_ready_children(StateId red);
  void fold(StateId red, StateId blue);
  void revert(const JournalEntry& e);
  void track(StateId q, Color c, bool insert);
  void bump(StateId q) { versions_[q] = ++clock_; }

  TreeConfig config_;
  std::optional<SketchContext> sketches_;
  std::vector<Node> nodes_;
  std::vector<std::uint64_t> versions_;
  std::uint64_t clock_ = 0;
  std::set<StateId> reds_;
  std::set<StateId> blues_;
  std::vector<JournalEntry> journal_;
  std::vector<AppliedRefinement> applied_;
  std::size_t sequence_ = 0;
};

}  // namespace pdfa
