#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdfa/heuristics.hpp"
#include "pdfa/prefix_tree.hpp"

namespace pdfa {

enum class StreamMode { Batch, StreamOld, StreamNew };

std::string_view to_string(StreamMode mode);
/// Accepts batch, stream-old, stream-new.
StreamMode parse_stream_mode(std::string_view name);

struct StreamConfig {
  std::size_t batch_size = 5000;     // B
  std::uint64_t threshold = 25;      // t_S
  std::size_t state_bound = 1000;    // n, bounds the red states of a hypothesis
  StreamMode mode = StreamMode::StreamNew;
  HeuristicConfig heuristic;
  SketchDimensions sketch_dims = kDefaultSketchDimensions;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-pass counters; one CSV row per minimization pass.
struct BatchMetrics {
  std::size_t batch_index = 0;
  std::size_t traces = 0;  // traces ingested so far
  std::size_t nodes = 0;
  std::size_t red = 0;
  std::size_t blue = 0;
  std::size_t white = 0;
  std::size_t refinements_replayed = 0;
  std::size_t refinements_failed_structural = 0;
  std::size_t refinements_discarded_consistency = 0;
  std::size_t replay_queue = 0;  // |R_old| at pass start
  std::size_t peak_mem_estimate_bytes = 0;
  double wall_ms = 0.0;
};

void write_metrics_csv(std::ostream& out, std::span<const BatchMetrics> rows);

/// R_old / R_new / R_failed queues and the applied stack R of one pass.
struct ReplayQueues {
  std::deque<Refinement> replay;   // R_old
  std::deque<Refinement> fresh;    // R_new
  std::deque<Refinement> failed;   // R_failed
  std::vector<AppliedRefinement> applied;  // R
};

struct MinimizationResult {
  PdfaView hypothesis;
  std::vector<Refinement> performed;  // R_new, in order
  /// Colours held at the hypothesis snapshot (pre-undo), used as growth marks.
  std::vector<std::pair<StateId, Color>> frontier;
  std::size_t replayed = 0;
  std::size_t failed_structural = 0;
  std::size_t discarded_consistency = 0;
  std::size_t greedy_steps = 0;
  std::size_t red = 0, blue = 0, white = 0;
};

/// Greedy red-blue minimizer with cached pair verdicts.
class Minimizer {
 public:
  Minimizer(PrefixTree& tree, const ConsistencyChecker& checker) : tree_(tree), checker_(checker) {}

  /// Cached heuristic verdict for a (red, blue) pair.
  HeuristicVerdict verdict(StateId red, StateId blue);
  /// Best merge over all red-blue pairs by score, ties to (smaller red,
  /// smaller blue); otherwise promotion of the largest blue. nullopt when no
  /// blue state remains.
  std::optional<Refinement> best_refinement();
  /// Structural flag check followed (if it passes) by the consistency check.
  enum class Check { Ok, Structural, Inconsistent };
  Check check(const Refinement& r);

  std::size_t evaluations() const { return evaluations_; }

 private:
  struct CacheEntry {
    HeuristicVerdict verdict;
    std::vector<std::pair<StateId, std::uint64_t>> deps;
  };
  bool promotion_consistent(StateId blue);

  PrefixTree& tree_;
  const ConsistencyChecker& checker_;
  std::map<std::pair<StateId, StateId>, CacheEntry> cache_;
  std::size_t evaluations_ = 0;
};

/// Phase 1 replays `replay` (R_old), phase 2 runs greedy with R_failed
/// sweeps; the hypothesis is snapshotted and every refinement undone.
MinimizationResult minimize_new(PrefixTree& tree, const ConsistencyChecker& checker, std::span<const Refinement> replay);

/// Greedy minimization whose refinements stay applied (journal committed).
MinimizationResult minimize_old(PrefixTree& tree, const ConsistencyChecker& checker);

struct RunResult {
  PdfaView hypothesis;
  std::vector<BatchMetrics> metrics;
  std::size_t passes = 0;
  std::size_t traces = 0;
  std::size_t final_nodes = 0;
  std::size_t peak_mem_estimate_bytes = 0;
  double wall_ms = 0.0;
  /// R_new of every pass, in order (R_old of the following pass).
  std::vector<std::vector<Refinement>> refinement_log;
};

/// Pulls traces until exhausted; returns nullopt at end of stream.
using TraceSource = std::function<std::optional<Trace>()>;

class Learner {
 public:
  Learner(Alphabet alphabet, StreamConfig config);

  /// Ingests one trace; runs a minimization pass when a batch completes.
  void push(const Trace& trace);
  /// Final pass over any partial batch; returns the last hypothesis.
  RunResult finish();
  /// True once a hypothesis reached the state bound.
  bool saturated() const { return saturated_; }

  const PrefixTree& tree() const { return tree_; }
  const StreamConfig& config() const { return config_; }
  /// Invoked after every pass (e.g. for logging).
  std::function<void(const BatchMetrics&)> on_pass;

 private:
  void run_pass();

  StreamConfig config_;
  ConsistencyChecker checker_;
  PrefixTree tree_;
  std::vector<Refinement> replay_;
  std::optional<PdfaView> hypothesis_;
  std::vector<BatchMetrics> metrics_;
  std::vector<std::vector<Refinement>> log_;
  std::size_t pending_ = 0;
  std::size_t traces_ = 0;
  std::size_t peak_mem_ = 0;
  bool saturated_ = false;
  double wall_ms_ = 0.0;
};

RunResult run(const TraceSource& source, Alphabet alphabet, const StreamConfig& config);
RunResult run(std::span<const Trace> traces, Alphabet alphabet, const StreamConfig& config);

}  // namespace pdfa
