#pragma once

// Count-Min-Sketch with a final-count attribute and +/- operations, the
// per-length sketch stack kept in every prefix-tree node, and the MinHash
// reduction used by the CSS-MinHash heuristic.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pdfa/core.hpp"

namespace pdfa {

struct SketchDimensions {
  std::size_t width = 0;
  std::size_t depth = 0;
  friend bool operator==(const SketchDimensions&, const SketchDimensions&) = default;
};

/// w = ceil(e / beta), d = ceil(ln(1 / gamma)). Throws std::invalid_argument
/// unless beta > 0 and 0 < gamma < 1. beta may exceed 1 (degenerate w = 1).
SketchDimensions sketch_dimensions(double beta, double gamma);

inline constexpr SketchDimensions kDefaultSketchDimensions{128, 4};

/// One pairwise-independent hash per row: multiply-add-shift over 64-bit
/// keys (top 64 bits of a*x+b mod 2^128), reduced to [0, w) by a
/// multiply-high.
class RowHashFamily {
 public:
  RowHashFamily(SketchDimensions dims, std::uint64_t seed);

  std::size_t width() const { return dims_.width; }
  std::size_t depth() const { return dims_.depth; }
  SketchDimensions dimensions() const { return dims_; }
  std::uint64_t seed() const { return seed_; }

  std::uint32_t column(std::size_t row, std::uint64_t key) const;
  /// Writes one column per row into `out` (size == depth()).
  void columns(std::uint64_t key, std::span<std::uint32_t> out) const;

  friend bool operator==(const RowHashFamily& a, const RowHashFamily& b) {
    return a.dims_ == b.dims_ && a.seed_ == b.seed_;
  }

 private:
  struct Coefficients {
    unsigned __int128 multiplier;
    unsigned __int128 offset;
  };
  SketchDimensions dims_;
  std::uint64_t seed_;
  std::vector<Coefficients> rows_;
};

/// d x w counters. Small sketches keep a sorted sparse cell list and switch
/// to a dense matrix once they fill up; both representations compare equal
/// when their logical cell values are equal.
class CellStore {
 public:
  explicit CellStore(std::size_t cells = 0) : cells_(cells) {}

  std::uint64_t get(std::uint32_t index) const;
  void increment(std::uint32_t index, std::uint64_t by);
  void add(const CellStore& other);
  /// Throws std::logic_error (leaving *this untouched) if a cell would go negative.
  void subtract(const CellStore& other);

  template <typename F>
  void for_each_nonzero(F&& f) const {
    if (!dense_.empty()) {
      for (std::uint32_t i = 0; i < dense_.size(); ++i)
        if (dense_[i] != 0) f(i, dense_[i]);
    } else {
      for (const auto& [i, v] : sparse_)
        if (v != 0) f(i, v);
    }
  }

  std::size_t cell_count() const { return cells_; }
  bool is_dense() const { return !dense_.empty(); }
  std::size_t allocated_bytes() const;

  friend bool operator==(const CellStore& a, const CellStore& b);

 private:
  void densify();
  void maybe_densify();

  std::size_t cells_;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> sparse_;
  std::vector<std::uint64_t> dense_;
};

class CountMinSketch {
 public:
  explicit CountMinSketch(std::shared_ptr<const RowHashFamily> family);

  void store(std::uint64_t key, std::uint64_t count = 1);
  /// Same as store() with the per-row columns already computed.
  void store_columns(std::span<const std::uint32_t> columns, std::uint64_t count = 1);
  std::uint64_t retrieve(std::uint64_t key) const;
  std::uint64_t retrieve_columns(std::span<const std::uint32_t> columns) const;

  void add_final(std::uint64_t count = 1) { final_count_ += count; }
  std::uint64_t final_count() const { return final_count_; }
  /// Number of store() operations (each row sums to this).
  std::uint64_t total_inserted() const { return total_; }

  std::uint64_t cell(std::size_t row, std::size_t col) const;
  std::uint64_t row_sum(std::size_t row) const;
  const CellStore& cells() const { return cells_; }

  std::size_t width() const { return family_->width(); }
  std::size_t depth() const { return family_->depth(); }
  const RowHashFamily& family() const { return *family_; }
  const std::shared_ptr<const RowHashFamily>& family_ptr() const { return family_; }

  /// Element-wise sum, final counts and totals included. Dimension or seed
  /// mismatch throws std::invalid_argument.
  CountMinSketch& operator+=(const CountMinSketch& other);
  /// Inverse of +=. Throws std::logic_error if any counter would go negative.
  CountMinSketch& operator-=(const CountMinSketch& other);
  friend CountMinSketch operator+(CountMinSketch a, const CountMinSketch& b) { return a += b; }
  friend CountMinSketch operator-(CountMinSketch a, const CountMinSketch& b) { return a -= b; }

  friend bool operator==(const CountMinSketch& a, const CountMinSketch& b);

  /// Folds the logical content into a running 64-bit hash.
  std::uint64_t hash_into(std::uint64_t h) const;
  std::size_t allocated_bytes() const { return sizeof(*this) + cells_.allocated_bytes(); }
  std::size_t dense_bytes() const { return width() * depth() * sizeof(std::uint64_t); }

  /// Debug dump: {"width","depth","seed","final_count","total_inserted","cells":[[...]]}.
  std::string dump_json() const;
  static CountMinSketch from_json(std::string_view text);

 private:
  void check_compatible(const CountMinSketch& other) const;

  std::shared_ptr<const RowHashFamily> family_;
  CellStore cells_;
  std::uint64_t final_count_ = 0;
  std::uint64_t total_ = 0;
};

struct MinHashSignature {
  std::vector<Symbol> values;
  friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

/// l_m min-wise hashes over the extended alphabet, each a seeded random
/// permutation; a signature entry is the arg-min symbol of the input's
/// symbol set under that permutation.
class MinHasher {
 public:
  MinHasher(std::size_t num_hashes, std::size_t universe, std::uint64_t seed);

  MinHashSignature signature(std::span<const Symbol> symbols) const;
  std::size_t num_hashes() const { return ranks_.size(); }
  std::size_t universe() const { return universe_; }

 private:
  std::size_t universe_;
  std::vector<std::vector<std::uint32_t>> ranks_;
};

MinHashSignature minhash_reduce(std::span<const Symbol> suffix, const MinHasher& hasher);

/// Injective 63-bit encoding of short symbol strings; signatures are tagged
/// with the top bit so raw and reduced keys never coincide.
class SuffixKeyCodec {
 public:
  explicit SuffixKeyCodec(std::size_t universe) : base_(universe + 1) {}
  std::uint64_t raw(std::span<const Symbol> symbols) const;
  std::uint64_t reduced(const MinHashSignature& sig) const;

 private:
  std::uint64_t base_;
};

/// Which suffix lengths land in which layer.
struct SketchLayout {
  std::size_t future_length = 1;  // F_s
  std::size_t minhash_length = 0;  // l_m, 0 disables the reduced layer

  bool reduced() const { return minhash_length > 0; }
  std::size_t layer_count() const { return reduced() ? minhash_length + 1 : future_length; }
  /// Number of suffix lengths folded into `layer` (1 for raw layers).
  std::size_t lengths_in_layer(std::size_t layer) const {
    return reduced() && layer == minhash_length ? future_length - minhash_length : 1;
  }
  void validate() const;
};

/// Keys observed anywhere in the tree for one layer, with their hashed
/// columns cached.
class KeyRegistry {
 public:
  explicit KeyRegistry(std::size_t depth) : depth_(depth) {}

  /// Returns the columns of `key`, registering it on first sight.
  std::span<const std::uint32_t> insert(std::uint64_t key, const RowHashFamily& family);
  std::size_t size() const { return keys_.size(); }
  std::uint64_t key(std::size_t i) const { return keys_[i]; }
  std::span<const std::uint32_t> columns(std::size_t i) const {
    return std::span<const std::uint32_t>(columns_).subspan(i * depth_, depth_);
  }
  bool contains(std::uint64_t key) const { return index_.contains(key); }

 private:
  std::size_t depth_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> columns_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

/// Layered sketches C_1..C_Fs of one state (plus the reduced layer when
/// MinHash is on).
class SketchStack {
 public:
  SketchStack() = default;
  SketchStack(std::size_t layers, const std::shared_ptr<const RowHashFamily>& family);

  std::size_t layer_count() const { return layers_.size(); }
  CountMinSketch& layer(std::size_t i) { return layers_[i]; }
  const CountMinSketch& layer(std::size_t i) const { return layers_[i]; }

  SketchStack& operator+=(const SketchStack& other);
  SketchStack& operator-=(const SketchStack& other);
  friend bool operator==(const SketchStack& a, const SketchStack& b) { return a.layers_ == b.layers_; }

  std::uint64_t hash_into(std::uint64_t h) const;
  std::size_t allocated_bytes() const;

 private:
  std::vector<CountMinSketch> layers_;
};

/// Shared per-run sketch state: layout, hashing and the global key registries.
class SketchContext {
 public:
  SketchContext(Alphabet alphabet, SketchLayout layout, SketchDimensions dims, std::uint64_t seed);

  SketchStack make_stack() const { return SketchStack(layout_.layer_count(), family_); }

  /// Records the outgoing suffixes of one visit. `remaining` is the rest of
  /// the trace from the visited state, final symbol included.
  void record(SketchStack& stack, std::span<const Symbol> remaining);

  const SketchLayout& layout() const { return layout_; }
  const RowHashFamily& family() const { return *family_; }
  const KeyRegistry& registry(std::size_t layer) const { return registries_[layer]; }
  std::span<const KeyRegistry> registries() const { return registries_; }
  const MinHasher* minhasher() const { return minhasher_ ? &*minhasher_ : nullptr; }
  Alphabet alphabet() const { return alphabet_; }
  /// Bytes of one fully dense stack.
  std::size_t dense_stack_bytes() const;

 private:
  Alphabet alphabet_;
  SketchLayout layout_;
  std::shared_ptr<const RowHashFamily> family_;
  std::optional<MinHasher> minhasher_;
  SuffixKeyCodec codec_;
  std::vector<KeyRegistry> registries_;
};

}  // namespace pdfa
