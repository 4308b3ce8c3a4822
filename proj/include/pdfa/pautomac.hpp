#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdfa/core.hpp"

namespace pdfa {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Reads "<num> <alphabet>" followed by "<len> s1 .. slen" lines one at a time.
class TraceReader {
 public:
  TraceReader(std::istream& in, std::string source);

  std::size_t declared_count() const { return declared_count_; }
  std::size_t declared_alphabet() const { return declared_alphabet_; }
  std::size_t line() const { return line_; }
  /// Next string body; nullopt at end of input. Throws ParseError when the
  /// file holds fewer or more strings than declared.
  std::optional<std::vector<Symbol>> next();

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::size_t declared_count_ = 0;
  std::size_t declared_alphabet_ = 0;
  std::size_t read_ = 0;
};

struct TraceFile {
  std::size_t declared_alphabet = 0;
  std::vector<std::vector<Symbol>> bodies;

  /// max(declared alphabet, largest symbol + 1).
  std::size_t inferred_alphabet() const;
};

TraceFile read_trace_file(const std::filesystem::path& path);
TraceFile read_trace_stream(std::istream& in, const std::string& source);
std::vector<double> read_solution_file(const std::filesystem::path& path);
std::vector<double> read_solution_stream(std::istream& in, const std::string& source);

void write_trace_stream(std::ostream& out, std::size_t alphabet_size, std::span<const std::vector<Symbol>> bodies);
void write_solution_stream(std::ostream& out, std::span<const double> probabilities);

std::vector<Trace> to_traces(std::span<const std::vector<Symbol>> bodies, Alphabet alphabet);

struct ScenarioBundle {
  Alphabet alphabet;
  std::vector<Trace> train;
  std::vector<Trace> test;
  std::vector<double> solution;  // aligned with test
};

/// Alphabet is inferred over train and test as the largest symbol + 1 (or the
/// declared size, whichever is larger). Throws ParseError on malformed input
/// or when the solution count disagrees with the test file.
ScenarioBundle parse_pautomac(const std::filesystem::path& train, const std::filesystem::path& test,
                              const std::filesystem::path& solution);

/// "<dir>/<name>.pautomac.train" and friends.
struct ScenarioPaths {
  std::string name;
  std::filesystem::path train, test, solution;
};
ScenarioPaths scenario_paths(const std::filesystem::path& dir, const std::string& name);
/// Every scenario in `dir` with all three files present, sorted by name
/// (numerically when names are numbers).
std::vector<ScenarioPaths> discover_scenarios(const std::filesystem::path& dir);

}  // namespace pdfa
