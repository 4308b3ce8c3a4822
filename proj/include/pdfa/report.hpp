#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pdfa {

/// One evaluated learning run. `F` holds F_s for CSS variants and k for
/// k-tails (0 when neither applies).
struct ResultRow {
  std::string scenario;
  std::string mode;
  std::string heuristic;
  std::size_t F = 0;
  double perplexity = 0.0;
  double true_perplexity = 0.0;
  double wall_ms = 0.0;
  std::size_t peak_mem_bytes = 0;
  std::size_t states = 0;

  double ratio() const { return perplexity / true_perplexity; }
};

inline constexpr const char* kResultsHeader =
    "scenario,mode,heuristic,F,perplexity,true_perplexity,wall_ms,peak_mem_bytes,states";

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows, bool header = true);
std::vector<ResultRow> read_results_csv(std::istream& in);
/// Appends rows to `path`, writing the header first when the file is new or empty.
void append_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_file(const std::filesystem::path& path);

/// Per-configuration means (perplexity ratio, runtime, memory) as an aligned text table.
std::string summary_table(std::span<const ResultRow> rows);

}  // namespace pdfa
