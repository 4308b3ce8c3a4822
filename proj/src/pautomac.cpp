#include "pdfa/pautomac.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pdfa {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& value) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

// Skips blank lines; returns false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_ws(line).empty()) return true;
  }
  return false;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), source_(source), line_(line) {}

TraceReader::TraceReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
  std::string header;
  if (!next_line(in_, header, line_)) throw ParseError(source_, line_, "missing header");
  const auto tok = split_ws(header);
  if (tok.size() != 2 || !parse_number(tok[0], declared_count_) || !parse_number(tok[1], declared_alphabet_)) {
    throw ParseError(source_, line_, "header must be '<num_strings> <alphabet_size>'");
  }
}

std::optional<std::vector<Symbol>> TraceReader::next() {
  std::string line;
  if (!next_line(in_, line, line_)) {
    if (read_ != declared_count_) {
      throw ParseError(source_, line_,
                       "header declares " + std::to_string(declared_count_) + " strings, found " + std::to_string(read_));
    }
    return std::nullopt;
  }
  if (read_ == declared_count_) throw ParseError(source_, line_, "more strings than the header declares");
  const auto tok = split_ws(line);
  std::size_t len = 0;
  if (!parse_number(tok[0], len)) throw ParseError(source_, line_, "bad length '" + std::string(tok[0]) + "'");
  if (tok.size() != len + 1) {
    throw ParseError(source_, line_,
                     "length " + std::to_string(len) + " but " + std::to_string(tok.size() - 1) + " symbols");
  }
  std::vector<Symbol> body(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (!parse_number(tok[i + 1], body[i])) {
      throw ParseError(source_, line_, "bad symbol '" + std::string(tok[i + 1]) + "'");
    }
  }
  ++read_;
  return body;
}

std::size_t TraceFile::inferred_alphabet() const {
  std::size_t size = declared_alphabet;
  for (const auto& b : bodies) {
    for (Symbol s : b) size = std::max<std::size_t>(size, std::size_t{s} + 1);
  }
  return size;
}

TraceFile read_trace_stream(std::istream& in, const std::string& source) {
  TraceReader reader(in, source);
  TraceFile file;
  file.declared_alphabet = reader.declared_alphabet();
  file.bodies.reserve(reader.declared_count());
  while (auto b = reader.next()) file.bodies.push_back(std::move(*b));
  return file;
}

TraceFile read_trace_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_trace_stream(in, path.string());
}

std::vector<double> read_solution_stream(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw ParseError(source, lineno, "missing count line");
  auto tok = split_ws(line);
  std::size_t count = 0;
  if (tok.size() != 1 || !parse_number(tok[0], count)) throw ParseError(source, lineno, "bad count line");
  std::vector<double> out;
  out.reserve(count);
  while (next_line(in, line, lineno)) {
    tok = split_ws(line);
    double p = 0.0;
    // from_chars for double is available in libstdc++ 11
    if (tok.size() != 1 || !parse_number(tok[0], p) || p < 0.0) {
      throw ParseError(source, lineno, "bad probability '" + line + "'");
    }
    out.push_back(p);
  }
  if (out.size() != count) {
    throw ParseError(source, lineno,
                     "count line says " + std::to_string(count) + ", found " + std::to_string(out.size()));
  }
  return out;
}

std::vector<double> read_solution_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_solution_stream(in, path.string());
}

void write_trace_stream(std::ostream& out, std::size_t alphabet_size, std::span<const std::vector<Symbol>> bodies) {
  out << bodies.size() << ' ' << alphabet_size << '\n';
  for (const auto& b : bodies) {
    out << b.size();
    for (Symbol s : b) out << ' ' << s;
    out << '\n';
  }
}

void write_solution_stream(std::ostream& out, std::span<const double> probabilities) {
  std::ostringstream buf;
  buf.precision(17);
  buf << probabilities.size() << '\n';
  for (double p : probabilities) buf << p << '\n';
  out << buf.str();
}

std::vector<Trace> to_traces(std::span<const std::vector<Symbol>> bodies, Alphabet alphabet) {
  std::vector<Trace> out;
  out.reserve(bodies.size());
  for (const auto& b : bodies) out.push_back(Trace::from_body(b, alphabet));
  return out;
}

ScenarioBundle parse_pautomac(const std::filesystem::path& train, const std::filesystem::path& test,
                              const std::filesystem::path& solution) {
  const auto train_file = read_trace_file(train);
  const auto test_file = read_trace_file(test);
  auto probs = read_solution_file(solution);
  if (probs.size() != test_file.bodies.size()) {
    throw ParseError(solution.string(), 1,
                     "solution has " + std::to_string(probs.size()) + " entries but the test file has " +
                         std::to_string(test_file.bodies.size()) + " strings");
  }
  ScenarioBundle bundle;
  bundle.alphabet.size = std::max(train_file.inferred_alphabet(), test_file.inferred_alphabet());
  bundle.train = to_traces(train_file.bodies, bundle.alphabet);
  bundle.test = to_traces(test_file.bodies, bundle.alphabet);
  bundle.solution = std::move(probs);
  return bundle;
}

ScenarioPaths scenario_paths(const std::filesystem::path& dir, const std::string& name) {
  return {name, dir / (name + ".pautomac.train"), dir / (name + ".pautomac.test"),
          dir / (name + ".pautomac_solution.txt")};
}

std::vector<ScenarioPaths> discover_scenarios(const std::filesystem::path& dir) {
  constexpr std::string_view suffix = ".pautomac.train";
  std::vector<ScenarioPaths> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto file = entry.path().filename().string();
    if (file.size() <= suffix.size() || !file.ends_with(suffix)) continue;
    auto paths = scenario_paths(dir, file.substr(0, file.size() - suffix.size()));
    if (std::filesystem::exists(paths.test) && std::filesystem::exists(paths.solution)) out.push_back(paths);
  }
  auto key = [](const std::string& s) {
    std::size_t v = 0;
    const bool numeric = parse_number(std::string_view(s), v);
    return std::make_tuple(!numeric, v, s);
  };
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a.name) < key(b.name); });
  return out;
}

}  // namespace pdfa
