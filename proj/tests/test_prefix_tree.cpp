#include <random>

#include "doctest.h"
#include "pdfa/prefix_tree.hpp"

using namespace pdfa;

namespace {

constexpr Symbol a = 0, b = 1;

PrefixTree make_tree(std::uint64_t t_s, SketchLayout layout = {0, 0}) {
  TreeConfig c;
  c.alphabet.size = 2;
  c.layout = layout;
  c.dims = {64, 3};
  c.seed = 9;
  c.blue_threshold = t_s;
  return PrefixTree(c);
}

void feed(PrefixTree& t, std::initializer_list<Symbol> body, int times = 1, GrowthPolicy p = GrowthPolicy::Full) {
  for (int i = 0; i < times; ++i) t.ingest(Trace::from_body(body, t.alphabet()), p);
}

StateId path(const PrefixTree& t, std::initializer_list<Symbol> body) {
  StateId q = t.root();
  for (Symbol s : body) q = *t.child(q, s);
  return q;
}

// Blue parents are red, and every alive node hangs below an alive coloured node.
void check_topology(const PrefixTree& t) {
  for (std::size_t i = 0; i < t.node_count(); ++i) {
    const auto q = static_cast<StateId>(i);
    if (!t.alive(q) || !t.node(q).parent) continue;
    const Color parent = t.node(t.find(*t.node(q).parent)).color;
    if (t.node(q).color == Color::Blue) CHECK(parent == Color::Red);
  }
}

}  // namespace

TEST_CASE("first trace creates a blue child under the red root") {
  auto t = make_tree(1);
  CHECK(t.node(t.root()).color == Color::Red);
  const auto r = t.ingest(Trace::from_body({a}, t.alphabet()), GrowthPolicy::Gated);
  CHECK(r.created == 1);
  const auto c = t.child(t.root(), a);
  REQUIRE(c);
  CHECK(t.node(*c).color == Color::Blue);
  CHECK(t.blues().count(*c) == 1);
}

TEST_CASE("blue threshold") {
  auto t = make_tree(10);
  feed(t, {a}, 9, GrowthPolicy::Gated);
  const auto c = *t.child(t.root(), a);
  CHECK(t.node(c).color == Color::White);
  CHECK(t.node(c).size == 9);
  feed(t, {a}, 1, GrowthPolicy::Gated);
  CHECK(t.node(c).color == Color::Blue);
}

TEST_CASE("gated ingestion never grows below white nodes") {
  auto t = make_tree(5);
  std::size_t under_white = 0;
  for (int i = 0; i < 3; ++i) under_white += t.ingest(Trace::from_body({a, b, a}, t.alphabet()), GrowthPolicy::Gated).created_under_white;
  CHECK(under_white == 0);
  CHECK(t.node_count() == 2);  // root and its white child
  const auto c = *t.child(t.root(), a);
  CHECK(t.node(c).size == 3);
  CHECK(t.node(c).symbol_counts[b] == 3);  // white nodes still carry counts
}

TEST_CASE("node counts add up") {
  auto t = make_tree(1);
  feed(t, {a, b}, 2);
  feed(t, {b, b});
  feed(t, {});
  const auto& root = t.node(t.root());
  CHECK(root.size == 4);
  CHECK(root.final_count == 1);
  CHECK(root.symbol_counts[a] == 2);
  CHECK(root.symbol_counts[b] == 1);
  CHECK(root.size == root.final_count + root.symbol_counts[a] + root.symbol_counts[b]);
}

TEST_CASE("merge with disjoint children takes the union") {
  auto t = make_tree(1);
  feed(t, {a, b});
  feed(t, {b, a});
  const auto A = path(t, {a}), B = path(t, {b});
  const auto AB = path(t, {a, b}), BA = path(t, {b, a});
  t.promote(A);
  t.merge(A, B);
  CHECK(t.child(A, a) == BA);
  CHECK(t.child(A, b) == AB);
  CHECK(t.node(A).size == 2);
  CHECK_FALSE(t.alive(B));
  CHECK(t.find(B) == A);
}

TEST_CASE("merge folds shared children recursively") {
  auto t = make_tree(1);
  feed(t, {a, b, a}, 2);
  feed(t, {b, b, a});
  feed(t, {});
  const auto A = path(t, {a}), B = path(t, {b});
  const auto AB = path(t, {a, b}), BB = path(t, {b, b});
  const auto ABA = path(t, {a, b, a}), BBA = path(t, {b, b, a});
  const auto before = t.state_hash();
  t.promote(A);
  const auto m = t.merge(A, B);
  CHECK(t.node(A).size == 3);
  CHECK(t.find(BB) == AB);
  CHECK(t.node(AB).size == 3);
  CHECK(t.find(BBA) == ABA);
  CHECK(t.node(ABA).size == 3);
  CHECK(t.node(ABA).final_count == 3);
  check_topology(t);
  t.undo(m);
  CHECK(t.alive(B));
  CHECK(t.node(AB).size == 2);
  t.undo_all();
  CHECK(t.state_hash() == before);
}

TEST_CASE("merge sums sketches and undo restores them") {
  auto t = make_tree(1, {3, 0});
  feed(t, {a, b, a}, 3);
  feed(t, {b, b});
  const auto A = path(t, {a}), B = path(t, {b});
  const auto sketch_a = t.node(A).sketches;
  const auto before = t.state_hash();
  t.promote(A);
  t.merge(A, B);
  CHECK(t.node(A).sketches.layer(0).total_inserted() ==
        sketch_a.layer(0).total_inserted() + t.node(B).sketches.layer(0).total_inserted());
  t.undo_all();
  CHECK(t.node(A).sketches == sketch_a);
  CHECK(t.state_hash() == before);
}

TEST_CASE("promote colours qualifying children") {
  auto t = make_tree(1);
  feed(t, {a, a});
  feed(t, {a, b});
  const auto A = path(t, {a});
  CHECK(t.reds().size() == 1);
  const auto p = t.promote(A);
  CHECK(t.node(A).color == Color::Red);
  CHECK(t.reds().size() == 2);
  CHECK(t.node(path(t, {a, a})).color == Color::Blue);
  CHECK(t.node(path(t, {a, b})).color == Color::Blue);
  t.undo(p);
  CHECK(t.node(A).color == Color::Blue);
  CHECK(t.node(path(t, {a, a})).color == Color::White);
}

TEST_CASE("structural preconditions") {
  auto t = make_tree(1);
  feed(t, {a, b});
  feed(t, {b});
  const auto A = path(t, {a}), AB = path(t, {a, b}), B = path(t, {b});
  CHECK_FALSE(t.structurally_possible(Refinement::merge(A, B)));
  CHECK_THROWS_AS(t.merge(A, B), StructuralError);
  CHECK_THROWS_AS(t.promote(AB), StructuralError);
  CHECK(t.structurally_possible(Refinement::merge(t.root(), B)));
  const auto m1 = t.promote(A);
  const auto m2 = t.merge(A, B);
  CHECK_FALSE(t.structurally_possible(Refinement::merge(A, B)));
  CHECK_THROWS_AS(t.undo(m1), std::logic_error);
  t.undo(m2);
  t.undo(m1);
  CHECK(t.applied_count() == 0);
}

TEST_CASE("ingest refuses to run with applied refinements") {
  auto t = make_tree(1);
  feed(t, {a});
  t.promote(*t.child(t.root(), a));
  CHECK_THROWS_AS(feed(t, {a}), std::logic_error);
  t.commit();
  CHECK_NOTHROW(feed(t, {a}));
}

TEST_CASE("random refinement sequences undo to the original hash") {
  std::mt19937_64 rng(21);
  for (int episode = 0; episode < 60; ++episode) {
    auto t = make_tree(1 + rng() % 3, {2, 0});
    for (int i = 0; i < 40; ++i) {
      std::vector<Symbol> body(rng() % 6);
      for (auto& s : body) s = static_cast<Symbol>(rng() % 2);
      t.ingest(Trace::from_body(body, t.alphabet()), GrowthPolicy::Full);
    }
    const auto before = t.state_hash();
    for (int step = 0; step < 12 && !t.blues().empty(); ++step) {
      std::vector<StateId> blues(t.blues().begin(), t.blues().end()), reds(t.reds().begin(), t.reds().end());
      const StateId blue = blues[rng() % blues.size()];
      if (rng() % 3 == 0) {
        t.promote(blue);
      } else {
        t.merge(reds[rng() % reds.size()], blue);
      }
      check_topology(t);
    }
    t.undo_all();
    CHECK(t.state_hash() == before);
  }
}

TEST_CASE("marks let gated ingestion grow below undone states") {
  auto t = make_tree(1);
  feed(t, {a, a, a}, 1, GrowthPolicy::Gated);
  CHECK(t.node_count() == 3);  // AA stays white below the blue A
  const auto A = path(t, {a}), AA = path(t, {a, a});
  t.promote(A);
  CHECK(t.node(AA).color == Color::Blue);
  const auto marks = t.coloured_nodes();
  t.undo_all();
  feed(t, {a, a, a}, 1, GrowthPolicy::Gated);
  CHECK(t.node_count() == 3);
  t.apply_marks(marks);
  CHECK(t.node(A).color == Color::Blue);
  CHECK(t.effective_color(A) == Color::Red);
  CHECK(t.effective_color(AA) == Color::Blue);
  feed(t, {a, a, a}, 1, GrowthPolicy::Gated);
  CHECK(t.node_count() == 4);
}

TEST_CASE("hypothesis keeps only red states") {
  auto t = make_tree(1);
  feed(t, {a}, 3);
  feed(t, {b});
  const auto h = t.hypothesis();
  CHECK(h.size() == 1);
  REQUIRE(h.states[0].transitions.size() == 2);
  CHECK_FALSE(h.states[0].transitions[0].target.has_value());
  CHECK(h.states[0].transitions[0].prob == doctest::Approx(0.75));
  CHECK(h.max_normalization_error() < 1e-9);
}

TEST_CASE("exports") {
  auto t = make_tree(1);
  feed(t, {a, b});
  CHECK(t.to_dot().find("digraph") != std::string::npos);
  CHECK(t.to_json().find("\"nodes\"") != std::string::npos);
}
