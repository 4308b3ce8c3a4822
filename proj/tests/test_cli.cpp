#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pdfa/model_io.hpp"
#include "pdfa/pautomac.hpp"
#include "pdfa/report.hpp"
#include "pdfa/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kBinary = PDFASTREAM_BIN;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = kBinary.string() + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("pdfa_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A small scenario on disk, named "1".
pdfa::ScenarioPaths small_scenario(const fs::path& dir, std::uint64_t seed = 3) {
  pdfa::ScenarioSpec spec;
  spec.target.states = 4;
  spec.target.alphabet = 3;
  spec.train_size = 3000;
  spec.test_size = 200;
  spec.seed = seed;
  return pdfa::write_scenario(dir, "1", pdfa::generate_scenario(spec));
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  const auto dir = scratch("usage");
  CHECK(run("learn", dir).code == 2);
  CHECK(run("learn --train x --mode sideways", dir).code == 2);
  CHECK(run("pac --mu 0", dir).code == 2);
  CHECK(run("pac --mu 0.1 --beta 0.2", dir).code == 2);
  CHECK(run("bogus", dir).code == 2);
}

TEST_CASE("learn then eval") {
  const auto dir = scratch("learn");
  const auto s = small_scenario(dir);
  const auto out = dir / "model";
  const auto learned =
      run("learn --train " + s.train.string() + " --out " + out.string() + " --mode stream-new --batch 1000", dir);
  REQUIRE(learned.code == 0);
  for (const char* f : {"model.json", "model.dot", "metrics.csv", "manifest.json"}) CHECK(fs::exists(out / f));
  CHECK(count(learned.err, "pass ") == 3);
  CHECK_NOTHROW(pdfa::load_model(out / "model.json"));

  const auto results = dir / "results.csv";
  const auto scored = run("eval --model " + (out / "model.json").string() + " --test " + s.test.string() +
                              " --solution " + s.solution.string() + " --results " + results.string() +
                              " --scenario 1",
                          dir);
  REQUIRE(scored.code == 0);
  CHECK(scored.out.find("perplexity") != std::string::npos);
  const auto rows = pdfa::read_results_file(results);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mode == "stream-new");
  CHECK(rows[0].ratio() >= 1.0 - 1e-9);
  CHECK(rows[0].ratio() < 2.0);
}

TEST_CASE("batch mode runs a single pass") {
  const auto dir = scratch("batch");
  const auto s = small_scenario(dir);
  const auto r = run("learn --train " + s.train.string() + " --out " + (dir / "m").string() +
                         " --mode batch --heuristic css --Fs 3 --batch 100",
                     dir);
  REQUIRE(r.code == 0);
  CHECK(count(r.err, "pass ") == 1);
}

TEST_CASE("the target scores its own entropy floor") {
  const auto dir = scratch("floor");
  pdfa::ScenarioSpec spec;
  spec.target.states = 5;
  spec.train_size = 10;
  spec.test_size = 300;
  spec.seed = 9;
  const auto g = pdfa::generate_scenario(spec);
  const auto s = pdfa::write_scenario(dir, "1", g);
  pdfa::save_model(dir / "target.json", g.target);
  const auto results = dir / "r.csv";
  const auto r = run("eval --model " + (dir / "target.json").string() + " --test " + s.test.string() +
                         " --solution " + s.solution.string() + " --results " + results.string(),
                     dir);
  REQUIRE(r.code == 0);
  const auto rows = pdfa::read_results_file(results);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].perplexity == doctest::Approx(rows[0].true_perplexity).epsilon(1e-6));
}

TEST_CASE("directory evaluation writes a row per scenario") {
  const auto dir = scratch("dir");
  small_scenario(dir, 3);
  pdfa::ScenarioSpec spec;
  spec.target.states = 3;
  spec.train_size = 1000;
  spec.test_size = 100;
  spec.seed = 4;
  pdfa::write_scenario(dir, "2", pdfa::generate_scenario(spec));
  for (const auto& s : pdfa::discover_scenarios(dir)) {
    REQUIRE(run("learn --train " + s.train.string() + " --out " + (dir / "models" / s.name).string(), dir).code ==
            0);
  }
  const auto r = run("eval --dir " + dir.string() + " --models " + (dir / "models").string() + " --results " +
                         (dir / "r.csv").string(),
                     dir);
  REQUIRE(r.code == 0);
  const auto rows = pdfa::read_results_file(dir / "r.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].scenario == "1");
  CHECK(rows[1].scenario == "2");
}

TEST_CASE("learning is reproducible") {
  const auto dir = scratch("repro");
  const auto s = small_scenario(dir);
  for (const char* out : {"a", "b"}) {
    REQUIRE(run("learn --train " + s.train.string() + " --out " + (dir / out).string() +
                    " --heuristic css-minhash --seed 11 --batch 700",
                dir)
                .code == 0);
  }
  CHECK(slurp(dir / "a" / "model.json") == slurp(dir / "b" / "model.json"));
  CHECK(slurp(dir / "a" / "metrics.csv").substr(0, 40) == slurp(dir / "b" / "metrics.csv").substr(0, 40));
}

TEST_CASE("learn reads stdin") {
  const auto dir = scratch("stdin");
  const auto s = small_scenario(dir);
  const auto r = run("learn --train - --out " + (dir / "m").string() + " < " + s.train.string(), dir);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "m" / "model.json"));
}

TEST_CASE("pac report") {
  const auto dir = scratch("pac");
  const auto r = run("pac --mu 0.5 --n 5 --sigma 3", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("term 1") != std::string::npos);
  CHECK(r.out.find("dominant") != std::string::npos);
}
