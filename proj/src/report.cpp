#include "pdfa/report.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pdfa {

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows, bool header) {
  std::ostringstream buf;
  buf.precision(10);
  if (header) buf << kResultsHeader << '\n';
  for (const auto& r : rows) {
    buf << r.scenario << ',' << r.mode << ',' << r.heuristic << ',' << r.F << ',' << r.perplexity << ','
        << r.true_perplexity << ',' << r.wall_ms << ',' << r.peak_mem_bytes << ',' << r.states << '\n';
  }
  out << buf.str();
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == kResultsHeader) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 9) throw std::runtime_error("results line " + std::to_string(lineno) + ": expected 9 fields");
    try {
      rows.push_back({f[0], f[1], f[2], std::stoul(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                      std::stoul(f[7]), std::stoul(f[8])});
    } catch (const std::logic_error&) {
      throw std::runtime_error("results line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

void append_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_results_csv(out, rows, fresh);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<ResultRow> read_results_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_results_csv(in);
}

std::string summary_table(std::span<const ResultRow> rows) {
  struct Acc {
    std::size_t runs = 0;
    double ratio = 0, wall = 0, mem = 0, states = 0;
  };
  std::map<std::tuple<std::string, std::string, std::size_t>, Acc> groups;
  for (const auto& r : rows) {
    auto& a = groups[{r.mode, r.heuristic, r.F}];
    ++a.runs;
    a.ratio += r.ratio();
    a.wall += r.wall_ms;
    a.mem += static_cast<double>(r.peak_mem_bytes);
    a.states += static_cast<double>(r.states);
  }
  std::ostringstream out;
  out << std::left << std::setw(12) << "mode" << std::setw(16) << "heuristic" << std::setw(4) << "F" << std::right
      << std::setw(6) << "runs" << std::setw(12) << "pp/true" << std::setw(12) << "wall_ms" << std::setw(14)
      << "peak_mem_MiB" << std::setw(9) << "states" << '\n';
  out << std::fixed;
  for (const auto& [key, a] : groups) {
    const double n = static_cast<double>(a.runs);
    out << std::left << std::setw(12) << std::get<0>(key) << std::setw(16) << std::get<1>(key) << std::setw(4)
        << std::get<2>(key) << std::right << std::setw(6) << a.runs << std::setw(12) << std::setprecision(4)
        << a.ratio / n << std::setw(12) << std::setprecision(1) << a.wall / n << std::setw(14)
        << std::setprecision(2) << a.mem / n / (1024.0 * 1024.0) << std::setw(9) << std::setprecision(1)
        << a.states / n << '\n';
  }
  return out.str();
}

}  // namespace pdfa
