#include "pdfa/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace pdfa {
namespace {

std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finalizer over the running state
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace

SketchDimensions sketch_dimensions(double beta, double gamma) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  // The small tolerance keeps exact ratios such as e/e or ln(e) from rounding up.
  auto ceil_tol = [](double x) { return static_cast<std::size_t>(std::ceil(x - 1e-12)); };
  SketchDimensions dims;
  dims.width = std::max<std::size_t>(1, ceil_tol(std::numbers::e / beta));
  dims.depth = std::max<std::size_t>(1, ceil_tol(std::log(1.0 / gamma)));
  return dims;
}

RowHashFamily::RowHashFamily(SketchDimensions dims, std::uint64_t seed) : dims_(dims), seed_(seed) {
  if (dims.width == 0 || dims.depth == 0) throw std::invalid_argument("sketch dimensions must be positive");
  if (dims.width > (1ULL << 32)) throw std::invalid_argument("sketch width too large");
  std::mt19937_64 rng(seed);
  rows_.reserve(dims.depth);
  for (std::size_t j = 0; j < dims.depth; ++j) {
    unsigned __int128 a = (static_cast<unsigned __int128>(rng()) << 64) | rng();
    unsigned __int128 b = (static_cast<unsigned __int128>(rng()) << 64) | rng();
    rows_.push_back({a | 1, b});
  }
}

std::uint32_t RowHashFamily::column(std::size_t row, std::uint64_t key) const {
  const auto& c = rows_[row];
  const auto h = static_cast<std::uint64_t>((c.multiplier * key + c.offset) >> 64);
  return static_cast<std::uint32_t>((static_cast<unsigned __int128>(h) * dims_.width) >> 64);
}

void RowHashFamily::columns(std::uint64_t key, std::span<std::uint32_t> out) const {
  for (std::size_t j = 0; j < rows_.size(); ++j) out[j] = column(j, key);
}

// --- CellStore ---------------------------------------------------------------

std::uint64_t CellStore::get(std::uint32_t index) const {
  if (!dense_.empty()) return dense_[index];
  auto it = std::lower_bound(sparse_.begin(), sparse_.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  return (it != sparse_.end() && it->first == index) ? it->second : 0;
}

void CellStore::increment(std::uint32_t index, std::uint64_t by) {
  if (!dense_.empty()) {
    dense_[index] += by;
    return;
  }
  auto it = std::lower_bound(sparse_.begin(), sparse_.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  if (it != sparse_.end() && it->first == index) {
    it->second += by;
  } else {
    sparse_.insert(it, {index, by});
    maybe_densify();
  }
}

void CellStore::densify() {
  dense_.assign(cells_, 0);
  for (const auto& [i, v] : sparse_) dense_[i] = v;
  sparse_.clear();
  sparse_.shrink_to_fit();
}

void CellStore::maybe_densify() {
  // Sparse entries cost twice a dense cell; switch at a quarter fill.
  if (sparse_.size() * 4 > cells_) densify();
}

void CellStore::add(const CellStore& other) {
  if (other.cells_ != cells_) throw std::invalid_argument("cell store size mismatch");
  if (other.is_dense() && !is_dense()) densify();
  if (is_dense()) {
    other.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) { dense_[i] += v; });
    return;
  }
  std::vector<std::pair<std::uint32_t, std::uint64_t>> merged;
  merged.reserve(sparse_.size() + other.sparse_.size());
  auto a = sparse_.begin();
  auto b = other.sparse_.begin();
  while (a != sparse_.end() || b != other.sparse_.end()) {
    if (b == other.sparse_.end() || (a != sparse_.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == sparse_.end() || b->first < a->first) {
      merged.push_back(*b++);
    } else {
      merged.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  sparse_ = std::move(merged);
  maybe_densify();
}

void CellStore::subtract(const CellStore& other) {
  if (other.cells_ != cells_) throw std::invalid_argument("cell store size mismatch");
  bool underflow = false;
  other.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) {
    if (get(i) < v) underflow = true;
  });
  if (underflow) throw std::logic_error("sketch subtraction produced a negative cell");
  if (is_dense()) {
    other.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) { dense_[i] -= v; });
    return;
  }
  other.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) {
    auto it = std::lower_bound(sparse_.begin(), sparse_.end(), i,
                               [](const auto& e, std::uint32_t k) { return e.first < k; });
    it->second -= v;
  });
  std::erase_if(sparse_, [](const auto& e) { return e.second == 0; });
}

std::size_t CellStore::allocated_bytes() const {
  return dense_.capacity() * sizeof(std::uint64_t) + sparse_.capacity() * sizeof(sparse_[0]);
}

bool operator==(const CellStore& a, const CellStore& b) {
  if (a.cells_ != b.cells_) return false;
  if (a.is_dense() && b.is_dense()) return a.dense_ == b.dense_;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> va, vb;
  a.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) { va.emplace_back(i, v); });
  b.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) { vb.emplace_back(i, v); });
  return va == vb;
}

// --- CountMinSketch ------------------------------------------------------------

CountMinSketch::CountMinSketch(std::shared_ptr<const RowHashFamily> family)
    : family_(std::move(family)), cells_(family_->width() * family_->depth()) {}

void CountMinSketch::store(std::uint64_t key, std::uint64_t count) {
  for (std::size_t j = 0; j < depth(); ++j) {
    cells_.increment(static_cast<std::uint32_t>(j * width() + family_->column(j, key)), count);
  }
  total_ += count;
}

void CountMinSketch::store_columns(std::span<const std::uint32_t> columns, std::uint64_t count) {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    cells_.increment(static_cast<std::uint32_t>(j * width() + columns[j]), count);
  }
  total_ += count;
}

std::uint64_t CountMinSketch::retrieve(std::uint64_t key) const {
  std::uint64_t best = UINT64_MAX;
  for (std::size_t j = 0; j < depth(); ++j) {
    best = std::min(best, cells_.get(static_cast<std::uint32_t>(j * width() + family_->column(j, key))));
  }
  return best;
}

std::uint64_t CountMinSketch::retrieve_columns(std::span<const std::uint32_t> columns) const {
  std::uint64_t best = UINT64_MAX;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    best = std::min(best, cells_.get(static_cast<std::uint32_t>(j * width() + columns[j])));
    if (best == 0) break;
  }
  return best;
}

std::uint64_t CountMinSketch::cell(std::size_t row, std::size_t col) const {
  return cells_.get(static_cast<std::uint32_t>(row * width() + col));
}

std::uint64_t CountMinSketch::row_sum(std::size_t row) const {
  std::uint64_t sum = 0;
  cells_.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) {
    if (i / width() == row) sum += v;
  });
  return sum;
}

void CountMinSketch::check_compatible(const CountMinSketch& other) const {
  if (family_ != other.family_ && !(*family_ == *other.family_)) {
    throw std::invalid_argument("count-min sketches differ in dimensions or seeds");
  }
}

CountMinSketch& CountMinSketch::operator+=(const CountMinSketch& other) {
  check_compatible(other);
  cells_.add(other.cells_);
  final_count_ += other.final_count_;
  total_ += other.total_;
  return *this;
}

CountMinSketch& CountMinSketch::operator-=(const CountMinSketch& other) {
  check_compatible(other);
  if (other.final_count_ > final_count_ || other.total_ > total_) {
    throw std::logic_error("sketch subtraction produced a negative count");
  }
  cells_.subtract(other.cells_);
  final_count_ -= other.final_count_;
  total_ -= other.total_;
  return *this;
}

bool operator==(const CountMinSketch& a, const CountMinSketch& b) {
  return *a.family_ == *b.family_ && a.final_count_ == b.final_count_ && a.total_ == b.total_ &&
         a.cells_ == b.cells_;
}

std::uint64_t CountMinSketch::hash_into(std::uint64_t h) const {
  h = mix64(h, final_count_);
  h = mix64(h, total_);
  cells_.for_each_nonzero([&](std::uint32_t i, std::uint64_t v) {
    h = mix64(h, i);
    h = mix64(h, v);
  });
  return mix64(h, 0xC0FFEE);
}

std::string CountMinSketch::dump_json() const {
  nlohmann::json j;
  j["width"] = width();
  j["depth"] = depth();
  j["seed"] = family_->seed();
  j["final_count"] = final_count_;
  j["total_inserted"] = total_;
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < depth(); ++r) {
    auto row = nlohmann::json::array();
    for (std::size_t c = 0; c < width(); ++c) row.push_back(cell(r, c));
    rows.push_back(std::move(row));
  }
  j["cells"] = std::move(rows);
  return j.dump();
}

CountMinSketch CountMinSketch::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  SketchDimensions dims{j.at("width").get<std::size_t>(), j.at("depth").get<std::size_t>()};
  CountMinSketch s(std::make_shared<RowHashFamily>(dims, j.at("seed").get<std::uint64_t>()));
  const auto& rows = j.at("cells");
  if (rows.size() != dims.depth) throw std::invalid_argument("sketch json: row count mismatch");
  for (std::size_t r = 0; r < dims.depth; ++r) {
    if (rows[r].size() != dims.width) throw std::invalid_argument("sketch json: column count mismatch");
    for (std::size_t c = 0; c < dims.width; ++c) {
      const auto v = rows[r][c].get<std::uint64_t>();
      if (v != 0) s.cells_.increment(static_cast<std::uint32_t>(r * dims.width + c), v);
    }
  }
  s.final_count_ = j.at("final_count").get<std::uint64_t>();
  s.total_ = j.at("total_inserted").get<std::uint64_t>();
  return s;
}

// --- MinHash -------------------------------------------------------------------

MinHasher::MinHasher(std::size_t num_hashes, std::size_t universe, std::uint64_t seed) : universe_(universe) {
  if (num_hashes == 0) throw std::invalid_argument("MinHash needs at least one hash function");
  std::mt19937_64 rng(seed);
  ranks_.reserve(num_hashes);
  for (std::size_t i = 0; i < num_hashes; ++i) {
    std::vector<std::uint32_t> perm(universe);
    std::iota(perm.begin(), perm.end(), 0U);
    std::shuffle(perm.begin(), perm.end(), rng);
    ranks_.push_back(std::move(perm));
  }
}

MinHashSignature MinHasher::signature(std::span<const Symbol> symbols) const {
  MinHashSignature sig;
  sig.values.reserve(ranks_.size());
  for (const auto& rank : ranks_) {
    Symbol best = 0;
    std::uint32_t best_rank = UINT32_MAX;
    for (Symbol s : symbols) {
      if (rank.at(s) < best_rank) {
        best_rank = rank[s];
        best = s;
      }
    }
    sig.values.push_back(best);
  }
  return sig;
}

MinHashSignature minhash_reduce(std::span<const Symbol> suffix, const MinHasher& hasher) {
  return hasher.signature(suffix);
}

std::uint64_t SuffixKeyCodec::raw(std::span<const Symbol> symbols) const {
  constexpr std::uint64_t kLimit = 1ULL << 63;
  unsigned __int128 key = 0;
  unsigned __int128 scale = 1;
  bool fits = true;
  for (Symbol s : symbols) {
    if (scale >= kLimit) {
      fits = false;
      break;
    }
    key += (static_cast<unsigned __int128>(s) + 1) * scale;
    scale *= base_;
  }
  if (fits && key < kLimit) return static_cast<std::uint64_t>(key);
  std::uint64_t h = 0x51ED270B27ULL;
  for (Symbol s : symbols) h = mix64(h, s);
  return h & (kLimit - 1);
}

std::uint64_t SuffixKeyCodec::reduced(const MinHashSignature& sig) const {
  return raw(sig.values) | (1ULL << 63);
}

void SketchLayout::validate() const {
  if (future_length == 0) throw std::invalid_argument("future length F_s must be at least 1");
  if (reduced() && minhash_length >= future_length) {
    throw std::invalid_argument("MinHash length l_m must be smaller than F_s");
  }
}

// --- registries and stacks -----------------------------------------------------

std::span<const std::uint32_t> KeyRegistry::insert(std::uint64_t key, const RowHashFamily& family) {
  auto [it, fresh] = index_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
  if (fresh) {
    keys_.push_back(key);
    columns_.resize(columns_.size() + depth_);
    family.columns(key, std::span<std::uint32_t>(columns_).last(depth_));
  }
  return columns(it->second);
}

SketchStack::SketchStack(std::size_t layers, const std::shared_ptr<const RowHashFamily>& family) {
  layers_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) layers_.emplace_back(family);
}

SketchStack& SketchStack::operator+=(const SketchStack& other) {
  if (other.layers_.size() != layers_.size()) throw std::invalid_argument("sketch stack layer mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i] += other.layers_[i];
  return *this;
}

SketchStack& SketchStack::operator-=(const SketchStack& other) {
  if (other.layers_.size() != layers_.size()) throw std::invalid_argument("sketch stack layer mismatch");
  // Validate every layer before mutating any so a failure leaves the stack intact.
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    bool bad = other.layers_[i].final_count() > layers_[i].final_count() ||
               other.layers_[i].total_inserted() > layers_[i].total_inserted();
    other.layers_[i].cells().for_each_nonzero([&](std::uint32_t c, std::uint64_t v) {
      if (layers_[i].cells().get(c) < v) bad = true;
    });
    if (bad) throw std::logic_error("sketch stack subtraction produced a negative cell");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i] -= other.layers_[i];
  return *this;
}

std::uint64_t SketchStack::hash_into(std::uint64_t h) const {
  for (const auto& l : layers_) h = l.hash_into(h);
  return h;
}

std::size_t SketchStack::allocated_bytes() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.allocated_bytes();
  return total;
}

SketchContext::SketchContext(Alphabet alphabet, SketchLayout layout, SketchDimensions dims, std::uint64_t seed)
    : alphabet_(alphabet),
      layout_(layout),
      family_(std::make_shared<RowHashFamily>(dims, seed)),
      codec_(alphabet.extended_size()) {
  layout_.validate();
  if (layout_.reduced()) {
    minhasher_.emplace(layout_.minhash_length, alphabet.extended_size(), seed ^ 0x6d696e68617368ULL);
  }
  registries_.assign(layout_.layer_count(), KeyRegistry(dims.depth));
}

void SketchContext::record(SketchStack& stack, std::span<const Symbol> remaining) {
  const bool ends_here = remaining.size() == 1;
  const std::size_t raw_layers = layout_.reduced() ? layout_.minhash_length : layout_.future_length;
  for (std::size_t layer = 0; layer < raw_layers; ++layer) {
    const auto part = remaining.first(std::min(layer + 1, remaining.size()));
    const auto cols = registries_[layer].insert(codec_.raw(part), *family_);
    stack.layer(layer).store_columns(cols);
  }
  if (layout_.reduced()) {
    const std::size_t layer = layout_.minhash_length;
    for (std::size_t len = layout_.minhash_length + 1; len <= layout_.future_length; ++len) {
      const auto part = remaining.first(std::min(len, remaining.size()));
      const std::uint64_t key =
          part.size() > layout_.minhash_length ? codec_.reduced(minhasher_->signature(part)) : codec_.raw(part);
      stack.layer(layer).store_columns(registries_[layer].insert(key, *family_));
    }
  }
  if (ends_here) {
    for (std::size_t layer = 0; layer < stack.layer_count(); ++layer) stack.layer(layer).add_final();
  }
}

std::size_t SketchContext::dense_stack_bytes() const {
  return layout_.layer_count() * family_->width() * family_->depth() * sizeof(std::uint64_t);
}

}  // namespace pdfa
