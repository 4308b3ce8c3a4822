#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pdfa/heuristics.hpp"

using namespace pdfa;

namespace {

constexpr Symbol a = 0, b = 1;

struct Pair {
  SketchContext ctx;
  SketchStack s1, s2;
  std::uint64_t n1 = 0, n2 = 0;

  Pair(SketchLayout layout, SketchDimensions dims = {1024, 4}, std::size_t sigma = 2)
      : ctx(Alphabet{sigma}, layout, dims, 17), s1(ctx.make_stack()), s2(ctx.make_stack()) {}

  void add1(std::initializer_list<Symbol> body, int times = 1) { add(s1, n1, body, times); }
  void add2(std::initializer_list<Symbol> body, int times = 1) { add(s2, n2, body, times); }

 private:
  void add(SketchStack& s, std::uint64_t& n, std::initializer_list<Symbol> body, int times) {
    const auto t = Trace::from_body(body, ctx.alphabet());
    for (int i = 0; i < times; ++i) {
      ctx.record(s, t.symbols());
      ++n;
    }
  }
};

PrefixTree tree_with(std::uint64_t t_s = 1) {
  TreeConfig c;
  c.alphabet.size = 2;
  c.blue_threshold = t_s;
  return PrefixTree(c);
}

void feed(PrefixTree& t, std::initializer_list<Symbol> body, int times) {
  for (int i = 0; i < times; ++i) t.ingest(Trace::from_body(body, t.alphabet()), GrowthPolicy::Full);
}

}  // namespace

TEST_CASE("hoeffding examples") {
  CHECK(hoeffding_threshold(100, 100, 0.05) == doctest::Approx(std::sqrt(0.5 * std::log(40.0)) * 0.2));
  CHECK(hoeffding_threshold(100, 100, 0.05) == doctest::Approx(0.2716).epsilon(1e-3));
  CHECK_FALSE(hoeffding_check(60, 100, 30, 100, 0.05));
  CHECK(hoeffding_check(50, 100, 30, 100, 0.05));
  for (double alpha : {0.001, 0.05, 0.5, 0.99}) CHECK(hoeffding_check(3, 10, 30, 100, alpha));
  CHECK_FALSE(hoeffding_check(50, 100, 30, 100, 0.05, 0.1));
  CHECK_THROWS_AS(hoeffding_check(0, 0, 1, 1, 0.05), std::invalid_argument);
}

TEST_CASE("cosine similarity examples") {
  const std::vector<double> v{0.3, 0.1, 0.6}, x{1, 0}, y{0, 1}, p{1, 2, 3}, q{3, 2, 1}, z{0, 0, 0};
  CHECK(cosine_similarity(v, v) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(cosine_similarity(p, q) == doctest::Approx(10.0 / 14.0));
  CHECK(cosine_similarity(p, z) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(p, x), std::invalid_argument);
}

TEST_CASE("css on identical inputs") {
  Pair p({3, 0});
  for (auto body : {std::initializer_list<Symbol>{a, b}, {b}, {a, a, a}}) {
    p.add1(body, 4);
    p.add2(body, 4);
  }
  const auto v = css_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.registries(), p.ctx.layout(), 0.05);
  CHECK(v.consistent);
  CHECK(*v.score == doctest::Approx(1.0));
}

TEST_CASE("css rejects disjoint dominant suffixes at the first layer") {
  Pair p({3, 0});
  p.add1({a, a}, 10000);
  p.add2({b, b}, 10000);
  oracle::ExactState x(3), y(3);
  const std::vector<Symbol> s1{a, a, 2}, s2{b, b, 2};
  for (int i = 0; i < 10000; ++i) {
    x.record(s1);
    y.record(s2);
  }
  CHECK_FALSE(oracle::exact_css(x, y, 0.05).consistent);
  CssTrace trace;
  const auto v = css_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.registries(), p.ctx.layout(), 0.05, 0.0, &trace);
  CHECK_FALSE(v.consistent);
  CHECK_FALSE(v.score.has_value());
  CHECK(trace.layers_evaluated == 1);
}

TEST_CASE("css stops at the first failing layer") {
  Pair p({3, 0});
  p.add1({a, a}, 500);
  p.add2({a, b}, 500);
  CssTrace trace;
  const auto v = css_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.registries(), p.ctx.layout(), 0.05, 0.0, &trace);
  CHECK_FALSE(v.consistent);
  CHECK(trace.layers_evaluated == 2);
}

TEST_CASE("css with no observed keys is consistent with score zero") {
  Pair p({2, 0});
  const auto v = css_consistency(p.s1, 1, p.s2, 1, p.ctx.registries(), p.ctx.layout(), 0.05);
  CHECK(v.consistent);
  CHECK(*v.score == 0.0);
}

TEST_CASE("css score is the mean of layer cosines") {
  Pair p({2, 0}, {4096, 4});
  p.add1({a, b}, 30);
  p.add1({b, a}, 10);
  p.add2({a, b}, 20);
  p.add2({b, a}, 20);
  oracle::ExactState x(2), y(2);
  const std::vector<Symbol> ab{a, b, 2}, ba{b, a, 2};
  for (int i = 0; i < 30; ++i) x.record(ab);
  for (int i = 0; i < 10; ++i) x.record(ba);
  for (int i = 0; i < 20; ++i) y.record(ab), y.record(ba);
  const auto expected = oracle::exact_css(x, y, 0.05);
  const auto v = css_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.registries(), p.ctx.layout(), 0.05);
  REQUIRE(expected.consistent);
  REQUIRE(v.consistent);
  CHECK(*v.score == doctest::Approx(expected.score).epsilon(1e-12));
  // layer cosine is (3*1 + 1*1)/(sqrt(10)*sqrt(2)) for both layers here
  CHECK(*v.score == doctest::Approx(4.0 / std::sqrt(20.0)));
}

TEST_CASE("css-minhash on identical inputs") {
  Pair p({4, 2});
  for (auto body : {std::initializer_list<Symbol>{a, b, a, b, b}, {b}, {a, a, a}}) {
    p.add1(body, 5);
    p.add2(body, 5);
  }
  const auto v = css_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.registries(), p.ctx.layout(), 0.05);
  CHECK(v.consistent);
  CHECK(*v.score == doctest::Approx(1.0));
}

TEST_CASE("cell-wise test") {
  Pair p({2, 0}, {128, 4});
  p.add1({a, b}, 50);
  p.add2({a, b}, 50);
  auto v = css_cellwise_consistency(p.s1, p.n1, p.s2, p.n2, p.ctx.layout(), 0.05);
  CHECK(v.consistent);
  CHECK(*v.score == doctest::Approx(1.0));

  Pair q({2, 0}, {128, 4});
  q.add2({a, b}, 100000);
  v = css_cellwise_consistency(q.s1, 100000, q.s2, q.n2, q.ctx.layout(), 0.05);
  CHECK_FALSE(v.consistent);

  SketchContext other(Alphabet{2}, {2, 0}, {64, 4}, 17);
  const auto mismatched = other.make_stack();
  CHECK_THROWS_AS(css_cellwise_consistency(p.s1, 1, mismatched, 1, p.ctx.layout(), 0.05), std::invalid_argument);
}

TEST_CASE("alergia with and without k-tails") {
  auto t = tree_with();
  feed(t, {a, a}, 50);
  feed(t, {b, a, b}, 50);
  REQUIRE(t.node_count() == 6);
  const auto A = *t.child(t.root(), a), B = *t.child(t.root(), b);
  auto self = alergia_consistency(t, A, A, 0.05, 3);
  CHECK(self.consistent);
  CHECK(*self.score == doctest::Approx(1.0));
  CHECK(alergia_consistency(t, A, B, 0.05, 0).consistent);
  CHECK_FALSE(alergia_consistency(t, A, B, 0.05, 1).consistent);
}

TEST_CASE("verdicts are symmetric") {
  std::mt19937_64 rng(3);
  TreeConfig c;
  c.alphabet.size = 3;
  c.layout = {3, 0};
  c.dims = {64, 3};
  PrefixTree css_tree(c);
  c.layout = {3, 1};
  PrefixTree mh_tree(c);
  for (int i = 0; i < 400; ++i) {
    std::vector<Symbol> body(rng() % 5);
    for (auto& s : body) s = static_cast<Symbol>(rng() % 3);
    const auto t = Trace::from_body(body, c.alphabet);
    css_tree.ingest(t, GrowthPolicy::Full);
    mh_tree.ingest(t, GrowthPolicy::Full);
  }
  std::vector<std::pair<HeuristicKind, const PrefixTree*>> cases{{HeuristicKind::CSS, &css_tree},
                                                                 {HeuristicKind::CSSCellWise, &css_tree},
                                                                 {HeuristicKind::CSSMinHash, &mh_tree},
                                                                 {HeuristicKind::Alergia, &css_tree},
                                                                 {HeuristicKind::AlergiaKTails, &css_tree}};
  for (const auto& [kind, tree] : cases) {
    HeuristicConfig h;
    h.kind = kind;
    h.future_length = 3;
    h.minhash_length = 1;
    const ConsistencyChecker checker(h);
    for (int i = 0; i < 200; ++i) {
      const auto q1 = static_cast<StateId>(rng() % tree->node_count());
      const auto q2 = static_cast<StateId>(rng() % tree->node_count());
      CHECK(checker.evaluate(*tree, q1, q2) == checker.evaluate(*tree, q2, q1));
    }
  }
}

TEST_CASE("heuristic config validation and names") {
  HeuristicConfig h;
  CHECK_NOTHROW(h.validate());
  h.minhash_length = 4;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  h = {};
  h.alpha = 1.0;
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
  for (auto k : {HeuristicKind::CSS, HeuristicKind::CSSMinHash, HeuristicKind::CSSCellWise, HeuristicKind::Alergia,
                 HeuristicKind::AlergiaKTails}) {
    CHECK(parse_heuristic_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_heuristic_kind("spacesave"), std::invalid_argument);
}
