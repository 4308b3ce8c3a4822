#include "pdfa/streamer.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pdfa {

std::string_view to_string(StreamMode mode) {
  switch (mode) {
    case StreamMode::Batch: return "batch";
    case StreamMode::StreamOld: return "stream-old";
    case StreamMode::StreamNew: return "stream-new";
  }
  return "?";
}

StreamMode parse_stream_mode(std::string_view name) {
  for (auto m : {StreamMode::Batch, StreamMode::StreamOld, StreamMode::StreamNew}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void StreamConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size B must be at least 1");
  if (threshold == 0) throw std::invalid_argument("threshold t_S must be at least 1");
  if (state_bound == 0) throw std::invalid_argument("state bound n must be at least 1");
  heuristic.validate();
}

void write_metrics_csv(std::ostream& out, std::span<const BatchMetrics> rows) {
  out << "batch_index,nodes,red,blue,white,refinements_replayed,refinements_failed_structural,"
         "refinements_discarded_consistency,peak_mem_estimate_bytes,wall_ms\n";
  for (const auto& r : rows) {
    out << r.batch_index << ',' << r.nodes << ',' << r.red << ',' << r.blue << ',' << r.white << ','
        << r.refinements_replayed << ',' << r.refinements_failed_structural << ','
        << r.refinements_discarded_consistency << ',' << r.peak_mem_estimate_bytes << ',' << r.wall_ms << '\n';
  }
}

// --- Minimizer -----------------------------------------------------------------

HeuristicVerdict Minimizer::verdict(StateId red, StateId blue) {
  const auto key = std::make_pair(red, blue);
  if (auto it = cache_.find(key); it != cache_.end()) {
    const bool fresh = std::all_of(it->second.deps.begin(), it->second.deps.end(),
                                   [&](const auto& d) { return tree_.version(d.first) == d.second; });
    if (fresh) return it->second.verdict;
  }
  ++evaluations_;
  std::vector<StateId> touched{red, blue};
  const auto v = checker_.evaluate(tree_, red, blue, &touched);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  CacheEntry entry{v, {}};
  entry.deps.reserve(touched.size());
  for (StateId q : touched) entry.deps.emplace_back(q, tree_.version(q));
  cache_[key] = std::move(entry);
  return v;
}

std::optional<Refinement> Minimizer::best_refinement() {
  if (tree_.blues().empty()) return std::nullopt;
  std::optional<Refinement> best;
  double best_score = 0.0;
  for (StateId blue : tree_.blues()) {
    for (StateId red : tree_.reds()) {
      const auto v = verdict(red, blue);
      if (!v.consistent) continue;
      const double s = *v.score;
      const bool better = !best || s > best_score ||
                          (s == best_score && std::pair(red, blue) < std::pair(best->red, best->blue));
      if (better) {
        best = Refinement::merge(red, blue);
        best_score = s;
      }
    }
  }
  if (best) return best;
  StateId largest = *tree_.blues().begin();
  for (StateId blue : tree_.blues()) {
    if (tree_.node(blue).size > tree_.node(largest).size) largest = blue;
  }
  return Refinement::promote(largest);
}

bool Minimizer::promotion_consistent(StateId blue) {
  for (StateId red : tree_.reds()) {
    if (verdict(red, blue).consistent) return false;
  }
  return true;
}

Minimizer::Check Minimizer::check(const Refinement& r) {
  if (!tree_.structurally_possible(r)) return Check::Structural;
  if (r.kind == Refinement::Kind::Merge) return verdict(r.red, r.blue).consistent ? Check::Ok : Check::Inconsistent;
  return promotion_consistent(r.blue) ? Check::Ok : Check::Inconsistent;
}

// --- minimization routines -------------------------------------------------------

namespace {

void snapshot(const PrefixTree& tree, MinimizationResult& res) {
  res.hypothesis = tree.hypothesis();
  res.red = tree.reds().size();
  res.blue = tree.blues().size();
  res.white = tree.white_count();
}

}  // namespace

MinimizationResult minimize_new(PrefixTree& tree, const ConsistencyChecker& checker,
                                std::span<const Refinement> replay) {
  if (tree.applied_count() != 0) throw std::logic_error("minimize_new expects an unrefined tree");
  Minimizer minimizer(tree, checker);
  MinimizationResult res;
  ReplayQueues queues;
  queues.replay.assign(replay.begin(), replay.end());

  auto perform = [&](const Refinement& r) {
    queues.applied.push_back(tree.apply(r));
    queues.fresh.push_back(r);
  };

  while (!queues.replay.empty()) {
    const Refinement r = queues.replay.front();
    queues.replay.pop_front();
    switch (minimizer.check(r)) {
      case Minimizer::Check::Ok:
        perform(r);
        ++res.replayed;
        break;
      case Minimizer::Check::Structural:
        queues.failed.push_back(r);
        ++res.failed_structural;
        break;
      case Minimizer::Check::Inconsistent:
        ++res.discarded_consistency;
        break;
    }
  }

  while (auto r = minimizer.best_refinement()) {
    perform(*r);
    ++res.greedy_steps;
    for (auto it = queues.failed.begin(); it != queues.failed.end();) {
      if (minimizer.check(*it) == Minimizer::Check::Ok) {
        const Refinement retry = *it;
        it = queues.failed.erase(it);
        perform(retry);
      } else {
        ++it;
      }
    }
  }

  snapshot(tree, res);
  res.frontier = tree.coloured_nodes();
  while (!queues.applied.empty()) {
    tree.undo(queues.applied.back());
    queues.applied.pop_back();
  }
  res.performed.assign(queues.fresh.begin(), queues.fresh.end());
  return res;
}

MinimizationResult minimize_old(PrefixTree& tree, const ConsistencyChecker& checker) {
  Minimizer minimizer(tree, checker);
  MinimizationResult res;
  while (auto r = minimizer.best_refinement()) {
    tree.apply(*r);
    res.performed.push_back(*r);
    ++res.greedy_steps;
  }
  snapshot(tree, res);
  tree.commit();
  return res;
}

// --- Learner -------------------------------------------------------------------

namespace {

TreeConfig tree_config(Alphabet alphabet, const StreamConfig& config) {
  TreeConfig tc;
  tc.alphabet = alphabet;
  tc.layout = config.heuristic.sketch_layout();
  tc.dims = config.sketch_dims;
  tc.seed = config.seed;
  tc.blue_threshold = config.threshold;
  return tc;
}

}  // namespace

Learner::Learner(Alphabet alphabet, StreamConfig config)
    : config_((config.validate(), config)), checker_(config_.heuristic), tree_(tree_config(alphabet, config_)) {}

void Learner::push(const Trace& trace) {
  if (saturated_) return;
  tree_.ingest(trace, config_.mode == StreamMode::Batch ? GrowthPolicy::Full : GrowthPolicy::Gated);
  ++pending_;
  ++traces_;
  if (config_.mode != StreamMode::Batch && pending_ == config_.batch_size) run_pass();
}

void Learner::run_pass() {
  const auto start = std::chrono::steady_clock::now();
  peak_mem_ = std::max(peak_mem_, tree_.memory_estimate_bytes());
  const std::size_t replay_size = replay_.size();
  MinimizationResult res;
  if (config_.mode == StreamMode::StreamNew) {
    res = minimize_new(tree_, checker_, replay_);
    replay_ = res.performed;
    tree_.apply_marks(res.frontier);
  } else {
    res = minimize_old(tree_, checker_);
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  wall_ms_ += ms;

  BatchMetrics m;
  m.batch_index = metrics_.size();
  m.traces = traces_;
  m.nodes = tree_.node_count();
  m.red = res.red;
  m.blue = res.blue;
  m.white = res.white;
  m.refinements_replayed = res.replayed;
  m.refinements_failed_structural = res.failed_structural;
  m.refinements_discarded_consistency = res.discarded_consistency;
  m.replay_queue = replay_size;
  m.peak_mem_estimate_bytes = peak_mem_;
  m.wall_ms = ms;
  metrics_.push_back(m);
  log_.push_back(res.performed);
  if (res.hypothesis.size() >= config_.state_bound) saturated_ = true;
  hypothesis_ = std::move(res.hypothesis);
  pending_ = 0;
  if (on_pass) on_pass(m);
}

RunResult Learner::finish() {
  if (pending_ > 0 || metrics_.empty()) run_pass();
  RunResult out;
  out.hypothesis = *hypothesis_;
  out.metrics = metrics_;
  out.passes = metrics_.size();
  out.traces = traces_;
  out.final_nodes = tree_.node_count();
  out.peak_mem_estimate_bytes = peak_mem_;
  out.wall_ms = wall_ms_;
  out.refinement_log = log_;
  return out;
}

RunResult run(const TraceSource& source, Alphabet alphabet, const StreamConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Learner learner(alphabet, config);
  while (!learner.saturated()) {
    auto t = source();
    if (!t) break;
    learner.push(*t);
  }
  auto result = learner.finish();
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run(std::span<const Trace> traces, Alphabet alphabet, const StreamConfig& config) {
  std::size_t i = 0;
  return run([&]() -> std::optional<Trace> { return i < traces.size() ? std::optional(traces[i++]) : std::nullopt; },
             alphabet, config);
}

}  // namespace pdfa
