#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pdfa/model_io.hpp"
#include "pdfa/perplexity.hpp"
#include "pdfa/streamer.hpp"
#include "pdfa/synthetic.hpp"

using namespace pdfa;

namespace {

constexpr Symbol a = 0, b = 1;

// q0: stop .3, a->q1 .5, b->q0 .2;  q1: stop .6, b->q0 .4
PdfaView two_state_source() {
  PdfaView m;
  m.alphabet.size = 2;
  m.states.resize(2);
  m.states[0].final_prob = 0.3;
  m.states[0].transitions = {{a, 1, 0.5}, {b, 0, 0.2}};
  m.states[1].final_prob = 0.6;
  m.states[1].transitions = {{b, 0, 0.4}};
  return m;
}

std::vector<Trace> sample(const PdfaView& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Trace> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Trace::from_body(sample_body(m, rng), m.alphabet));
  return out;
}

StreamConfig config(StreamMode mode, HeuristicKind kind, std::size_t batch, std::uint64_t t_s = 25) {
  StreamConfig c;
  c.mode = mode;
  c.batch_size = batch;
  c.threshold = t_s;
  c.heuristic.kind = kind;
  c.heuristic.future_length = 3;
  c.heuristic.minhash_length = 1;
  return c;
}

TreeConfig tree_config(const StreamConfig& c, Alphabet sigma) {
  TreeConfig t;
  t.alphabet = sigma;
  t.layout = c.heuristic.sketch_layout();
  t.dims = c.sketch_dims;
  t.seed = c.seed;
  t.blue_threshold = c.threshold;
  return t;
}

}  // namespace

TEST_CASE("pass count follows the batch boundary") {
  const auto traces = sample(two_state_source(), 10, 1);
  auto c = config(StreamMode::StreamNew, HeuristicKind::Alergia, 3, 1);
  CHECK(run(traces, Alphabet{2}, c).passes == 4);
  CHECK(run(std::span(traces).first(9), Alphabet{2}, c).passes == 3);
  c.batch_size = 100;
  CHECK(run(traces, Alphabet{2}, c).passes == 1);
  c.mode = StreamMode::Batch;
  c.batch_size = 3;
  CHECK(run(traces, Alphabet{2}, c).passes == 1);
}

TEST_CASE("empty stream gives the root-only model") {
  const auto r = run(std::span<const Trace>{}, Alphabet{2}, config(StreamMode::StreamNew, HeuristicKind::CSS, 10));
  CHECK(r.passes == 1);
  REQUIRE(r.hypothesis.size() == 1);
  CHECK(r.hypothesis.states[0].final_prob == 1.0);
  CHECK(r.hypothesis.states[0].transitions.empty());
}

TEST_CASE("runs are deterministic") {
  const auto traces = sample(two_state_source(), 3000, 2);
  for (auto mode : {StreamMode::Batch, StreamMode::StreamOld, StreamMode::StreamNew}) {
    const auto c = config(mode, HeuristicKind::CSSMinHash, 700);
    Learner l1(Alphabet{2}, c), l2(Alphabet{2}, c);
    for (const auto& t : traces) {
      l1.push(t);
      l2.push(t);
    }
    const auto r1 = l1.finish(), r2 = l2.finish();
    CHECK(l1.tree().state_hash() == l2.tree().state_hash());
    CHECK(model_to_json(r1.hypothesis) == model_to_json(r2.hypothesis));
  }
}

TEST_CASE("stream-new recovers a stationary two-state source") {
  const auto traces = sample(two_state_source(), 20000, 3);
  for (auto kind : {HeuristicKind::CSS, HeuristicKind::CSSMinHash, HeuristicKind::AlergiaKTails}) {
    const auto r = run(traces, Alphabet{2}, config(StreamMode::StreamNew, kind, 2000));
    CAPTURE(to_string(kind));
    CHECK(r.passes == 10);
    CHECK(r.hypothesis.size() == 2);
    for (std::size_t i = 5; i < r.metrics.size(); ++i) CHECK(r.metrics[i].red == 2);
  }
}

TEST_CASE("minimize_new restores the tree exactly") {
  const auto traces = sample(two_state_source(), 3000, 4);
  const auto c = config(StreamMode::StreamNew, HeuristicKind::CSS, 1000);
  PrefixTree tree(tree_config(c, Alphabet{2}));
  const ConsistencyChecker checker(c.heuristic);
  std::vector<Refinement> replay;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    tree.ingest(traces[i], GrowthPolicy::Gated);
    if ((i + 1) % 1000 != 0) continue;
    const auto before = tree.state_hash();
    const auto res = minimize_new(tree, checker, replay);
    CHECK(tree.state_hash() == before);
    CHECK(tree.applied_count() == 0);
    CHECK(tree.journal_size() == 0);
    if (!replay.empty()) CHECK(res.replayed + res.failed_structural + res.discarded_consistency == replay.size());
    replay = res.performed;
    tree.apply_marks(res.frontier);
  }
}

TEST_CASE("without replay minimize_new matches plain greedy") {
  const auto traces = sample(two_state_source(), 1500, 5);
  const auto c = config(StreamMode::StreamNew, HeuristicKind::CSSMinHash, 1500);
  PrefixTree t1(tree_config(c, Alphabet{2})), t2(tree_config(c, Alphabet{2}));
  for (const auto& t : traces) {
    t1.ingest(t, GrowthPolicy::Gated);
    t2.ingest(t, GrowthPolicy::Gated);
  }
  const ConsistencyChecker checker(c.heuristic);
  const auto fresh = minimize_new(t1, checker, {});
  const auto greedy = minimize_old(t2, checker);
  CHECK(fresh.performed == greedy.performed);
  CHECK(model_to_json(fresh.hypothesis) == model_to_json(greedy.hypothesis));
}

TEST_CASE("refinements of one pass are the replay of the next") {
  const auto traces = sample(two_state_source(), 6000, 6);
  Learner learner(Alphabet{2}, config(StreamMode::StreamNew, HeuristicKind::CSS, 1500));
  for (const auto& t : traces) learner.push(t);
  const auto r = learner.finish();
  REQUIRE(r.refinement_log.size() == 4);
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    CHECK(r.metrics[i].replay_queue == r.refinement_log[i - 1].size());
  }
}

TEST_CASE("a distribution shift discards stale refinements") {
  // Batch 1 makes the a- and b-successors look alike; afterwards they differ.
  PdfaView same;
  same.alphabet.size = 2;
  same.states.resize(2);
  same.states[0].final_prob = 0.2;
  same.states[0].transitions = {{a, 1, 0.4}, {b, 1, 0.4}};
  same.states[1].final_prob = 0.9;
  same.states[1].transitions = {{a, 1, 0.1}};
  PdfaView split = same;
  split.states.resize(3);
  split.states[0].transitions = {{a, 1, 0.4}, {b, 2, 0.4}};
  split.states[2].final_prob = 0.1;
  split.states[2].transitions = {{b, 2, 0.9}};

  auto traces = sample(same, 2000, 7);
  const auto after = sample(split, 8000, 8);
  traces.insert(traces.end(), after.begin(), after.end());
  const auto c = config(StreamMode::StreamNew, HeuristicKind::AlergiaKTails, 2000);
  const auto r = run(traces, Alphabet{2}, c);
  std::size_t discarded = 0;
  for (const auto& m : r.metrics) discarded += m.refinements_discarded_consistency;
  CHECK(discarded >= 1);
}

TEST_CASE("stream-old never loses red states on a stationary source") {
  const auto traces = sample(two_state_source(), 10000, 9);
  const auto r = run(traces, Alphabet{2}, config(StreamMode::StreamOld, HeuristicKind::CSS, 1000));
  for (std::size_t i = 1; i < r.metrics.size(); ++i) CHECK(r.metrics[i].red >= r.metrics[i - 1].red);
}

TEST_CASE("with a single batch both streaming modes agree") {
  const auto traces = sample(two_state_source(), 1800, 10);
  for (auto kind : {HeuristicKind::CSSMinHash, HeuristicKind::AlergiaKTails}) {
    const auto o = run(traces, Alphabet{2}, config(StreamMode::StreamOld, kind, 5000));
    const auto n = run(traces, Alphabet{2}, config(StreamMode::StreamNew, kind, 5000));
    CHECK(model_to_json(o.hypothesis) == model_to_json(n.hypothesis));
  }
}

TEST_CASE("undoing beats a misleading first batch") {
  PdfaView same;
  same.alphabet.size = 2;
  same.states.resize(2);
  same.states[0].final_prob = 0.2;
  same.states[0].transitions = {{a, 1, 0.4}, {b, 1, 0.4}};
  same.states[1].final_prob = 0.5;
  same.states[1].transitions = {{a, 1, 0.25}, {b, 1, 0.25}};
  PdfaView target;
  target.alphabet.size = 2;
  target.states.resize(3);
  target.states[0].final_prob = 0.2;
  target.states[0].transitions = {{a, 1, 0.4}, {b, 2, 0.4}};
  target.states[1].final_prob = 0.5;
  target.states[1].transitions = {{a, 1, 0.45}, {b, 1, 0.05}};
  target.states[2].final_prob = 0.5;
  target.states[2].transitions = {{a, 2, 0.05}, {b, 2, 0.45}};

  auto traces = sample(same, 3000, 11);
  const auto rest = sample(target, 12000, 12);
  traces.insert(traces.end(), rest.begin(), rest.end());

  std::vector<Trace> test;
  std::vector<double> truth;
  {
    std::mt19937_64 rng(13);
    std::set<std::vector<Symbol>> seen;
    while (test.size() < 300) {
      auto body = sample_body(target, rng);
      if (!seen.insert(body).second) continue;
      test.push_back(Trace::from_body(body, target.alphabet));
      truth.push_back(string_probability(target, test.back()).value);
    }
    double total = 0;
    for (double p : truth) total += p;
    for (double& p : truth) p /= total;
  }
  const auto c_old = config(StreamMode::StreamOld, HeuristicKind::AlergiaKTails, 3000);
  const auto c_new = config(StreamMode::StreamNew, HeuristicKind::AlergiaKTails, 3000);
  const double pp_old = perplexity(run(traces, Alphabet{2}, c_old).hypothesis, test, truth);
  const double pp_new = perplexity(run(traces, Alphabet{2}, c_new).hypothesis, test, truth);
  CHECK(pp_new < pp_old);
}

TEST_CASE("state bound stops ingestion") {
  const auto traces = sample(two_state_source(), 5000, 14);
  auto c = config(StreamMode::StreamNew, HeuristicKind::CSS, 500);
  c.state_bound = 1;
  Learner learner(Alphabet{2}, c);
  std::size_t pushed = 0;
  for (const auto& t : traces) {
    if (learner.saturated()) break;
    learner.push(t);
    ++pushed;
  }
  const auto r = learner.finish();
  CHECK(r.passes == 1);
  CHECK(pushed == 500);
}

TEST_CASE("metrics csv") {
  std::vector<BatchMetrics> rows(2);
  rows[1].batch_index = 1;
  rows[1].nodes = 42;
  std::ostringstream out;
  write_metrics_csv(out, rows);
  const auto text = out.str();
  CHECK(text.rfind("batch_index,nodes,red,blue,white,refinements_replayed,refinements_failed_structural,"
                   "refinements_discarded_consistency,peak_mem_estimate_bytes,wall_ms\n",
                   0) == 0);
  CHECK(text.find("\n1,42,") != std::string::npos);
}

TEST_CASE("config validation") {
  StreamConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.threshold = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_stream_mode("stream-old") == StreamMode::StreamOld);
  CHECK_THROWS_AS(parse_stream_mode("online"), std::invalid_argument);
}
