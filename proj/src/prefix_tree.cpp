#include "pdfa/prefix_tree.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pdfa {
namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

}  // namespace

const char* to_string(Color c) {
  switch (c) {
    case Color::White: return "white";
    case Color::Blue: return "blue";
    case Color::Red: return "red";
  }
  return "?";
}

std::string to_string(const Refinement& r) {
  if (r.kind == Refinement::Kind::Merge) {
    return "merge(" + std::to_string(r.red) + "," + std::to_string(r.blue) + ")";
  }
  return "promote(" + std::to_string(r.blue) + ")";
}

std::optional<StateId> ChildMap::get(Symbol a) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), a,
                             [](const auto& e, Symbol s) { return e.first < s; });
  if (it == entries_.end() || it->first != a) return std::nullopt;
  return it->second;
}

std::optional<StateId> ChildMap::set(Symbol a, std::optional<StateId> target) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), a,
                             [](const auto& e, Symbol s) { return e.first < s; });
  const bool present = it != entries_.end() && it->first == a;
  std::optional<StateId> previous = present ? std::optional<StateId>(it->second) : std::nullopt;
  if (target) {
    if (present) {
      it->second = *target;
    } else {
      entries_.insert(it, {a, *target});
    }
  } else if (present) {
    entries_.erase(it);
  }
  return previous;
}

PrefixTree::PrefixTree(TreeConfig config) : config_(std::move(config)) {
  if (config_.blue_threshold == 0) throw std::invalid_argument("blue threshold t_S must be at least 1");
  if (config_.layout.future_length > 0) {
    sketches_.emplace(config_.alphabet, config_.layout, config_.dims, config_.seed);
  }
  Node root;
  root.id = 0;
  root.color = Color::Red;
  root.symbol_counts.assign(config_.alphabet.size, 0);
  if (sketches_) root.sketches = sketches_->make_stack();
  nodes_.push_back(std::move(root));
  versions_.push_back(0);
  reds_.insert(0);
}

StateId PrefixTree::find(StateId q) const {
  while (nodes_[q].representative != q) q = nodes_[q].representative;
  return q;
}

std::optional<StateId> PrefixTree::child(StateId q, Symbol a) const {
  auto c = nodes_[q].children.get(a);
  if (!c) return std::nullopt;
  return find(*c);
}

Color PrefixTree::effective_color(StateId q) const {
  return std::max(nodes_[q].color, nodes_[q].mark);
}

std::size_t PrefixTree::white_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes_)
    if (node.representative == node.id && node.color == Color::White) ++n;
  return n;
}

StateId PrefixTree::create_child(StateId parent, Symbol a) {
  const auto id = static_cast<StateId>(nodes_.size());
  Node n;
  n.id = id;
  n.representative = id;
  n.parent = parent;
  n.in_symbol = a;
  n.symbol_counts.assign(config_.alphabet.size, 0);
  if (sketches_) n.sketches = sketches_->make_stack();
  nodes_.push_back(std::move(n));
  versions_.push_back(0);
  nodes_[parent].children.set(a, id);
  bump(parent);
  return id;
}

void PrefixTree::visit(StateId q, std::span<const Symbol> remaining) {
  Node& n = nodes_[q];
  ++n.size;
  if (remaining.size() == 1) {
    ++n.final_count;
  } else {
    ++n.symbol_counts[remaining.front()];
  }
  if (sketches_) sketches_->record(n.sketches, remaining);
  bump(q);
}

IngestResult PrefixTree::ingest(const Trace& trace, GrowthPolicy policy) {
  if (!journal_.empty()) throw std::logic_error("cannot ingest while refinements are applied");
  IngestResult result;
  const auto symbols = trace.symbols();
  StateId q = find(root());
  visit(q, symbols);
  ++result.visited;
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
    const Symbol a = symbols[i];
    auto next = child(q, a);
    if (!next) {
      const bool expandable = effective_color(q) != Color::White;
      if (policy == GrowthPolicy::Gated && !expandable) break;
      if (!expandable) ++result.created_under_white;
      next = create_child(q, a);
      ++result.created;
    }
    const StateId c = *next;
    visit(c, symbols.subspan(i + 1));
    ++result.visited;
    Node& cn = nodes_[c];
    if (effective_color(c) == Color::White && cn.size >= config_.blue_threshold) {
      if (nodes_[q].color == Color::Red) {
        cn.color = Color::Blue;
        if (alive(c)) blues_.insert(c);
      } else if (nodes_[q].mark == Color::Red) {
        cn.mark = Color::Blue;
      }
    }
    q = c;
  }
  return result;
}

void PrefixTree::track(StateId q, Color c, bool insert) {
  auto* set = c == Color::Red ? &reds_ : c == Color::Blue ? &blues_ : nullptr;
  if (!set) return;
  if (insert) {
    set->insert(q);
  } else {
    set->erase(q);
  }
}

void PrefixTree::set_color(StateId q, Color c) {
  Node& n = nodes_[q];
  if (n.color == c) return;
  journal_.push_back({JournalEntry::Op::SetColor, q, 0, 0, n.color, c, std::nullopt});
  if (alive(q)) {
    track(q, n.color, false);
    track(q, c, true);
  }
  n.color = c;
}

void PrefixTree::absorb(StateId into, StateId from) {
  Node& x = nodes_[into];
  Node& y = nodes_[from];
  journal_.push_back({JournalEntry::Op::Absorb, into, from, 0, y.color, y.color, std::nullopt});
  x.size += y.size;
  x.final_count += y.final_count;
  for (std::size_t a = 0; a < x.symbol_counts.size(); ++a) x.symbol_counts[a] += y.symbol_counts[a];
  if (sketches_) x.sketches += y.sketches;
  track(from, y.color, false);
  y.representative = into;
  bump(into);
  bump(from);
}

void PrefixTree::relink(StateId q, Symbol a, StateId target) {
  auto previous = nodes_[q].children.set(a, target);
  journal_.push_back({JournalEntry::Op::Relink, q, target, a, Color::White, Color::White, previous});
  bump(q);
}

void PrefixTree::colour_ready_children(StateId red) {
  for (const auto& [a, c] : nodes_[red].children) {
    const StateId t = find(c);
    if (nodes_[t].color == Color::White && nodes_[t].size >= config_.blue_threshold) set_color(t, Color::Blue);
  }
}

void PrefixTree::fold(StateId red, StateId blue) {
  std::vector<std::pair<StateId, StateId>> work{{red, blue}};
  std::vector<StateId> touched_reds;
  while (!work.empty()) {
    auto [x, y] = work.back();
    work.pop_back();
    x = find(x);
    y = find(y);
    if (x == y) continue;
    // The higher colour survives so red states are never absorbed away.
    if (nodes_[y].color > nodes_[x].color) std::swap(x, y);
    absorb(x, y);
    if (nodes_[x].color == Color::Red) touched_reds.push_back(x);
    std::vector<std::pair<StateId, StateId>> next;
    for (const auto& [a, yc] : nodes_[y].children) {
      const StateId target = find(yc);
      auto xc = child(x, a);
      if (!xc) {
        relink(x, a, target);
      } else if (*xc != target) {
        next.emplace_back(*xc, target);
      }
    }
    // Reverse so pairs pop in ascending symbol order.
    work.insert(work.end(), next.rbegin(), next.rend());
  }
  for (StateId r : touched_reds)
    if (alive(r)) colour_ready_children(r);
}

bool PrefixTree::structurally_possible(const Refinement& r) const {
  const auto n = nodes_.size();
  if (r.blue >= n || !alive(r.blue) || nodes_[r.blue].color != Color::Blue) return false;
  if (r.kind == Refinement::Kind::Promote) return true;
  return r.red < n && alive(r.red) && nodes_[r.red].color == Color::Red && r.red != r.blue;
}

AppliedRefinement PrefixTree::merge(StateId red, StateId blue) {
  const auto op = Refinement::merge(red, blue);
  if (!structurally_possible(op)) throw StructuralError("structural failure: cannot " + to_string(op));
  AppliedRefinement applied{op, journal_.size(), 0, ++sequence_};
  fold(red, blue);
  applied.journal_end = journal_.size();
  applied_.push_back(applied);
  return applied;
}

AppliedRefinement PrefixTree::promote(StateId blue) {
  const auto op = Refinement::promote(blue);
  if (!structurally_possible(op)) throw StructuralError("structural failure: cannot " + to_string(op));
  AppliedRefinement applied{op, journal_.size(), 0, ++sequence_};
  set_color(blue, Color::Red);
  colour_ready_children(blue);
  applied.journal_end = journal_.size();
  applied_.push_back(applied);
  return applied;
}

AppliedRefinement PrefixTree::apply(const Refinement& r) {
  return r.kind == Refinement::Kind::Merge ? merge(r.red, r.blue) : promote(r.blue);
}

void PrefixTree::revert(const JournalEntry& e) {
  switch (e.op) {
    case JournalEntry::Op::SetColor: {
      Node& n = nodes_[e.a];
      if (alive(e.a)) {
        track(e.a, n.color, false);
        track(e.a, e.old_color, true);
      }
      n.color = e.old_color;
      break;
    }
    case JournalEntry::Op::Absorb: {
      Node& x = nodes_[e.a];
      Node& y = nodes_[e.b];
      x.size -= y.size;
      x.final_count -= y.final_count;
      for (std::size_t a = 0; a < x.symbol_counts.size(); ++a) x.symbol_counts[a] -= y.symbol_counts[a];
      if (sketches_) x.sketches -= y.sketches;
      y.representative = e.b;
      track(e.b, y.color, true);
      bump(e.a);
      bump(e.b);
      break;
    }
    case JournalEntry::Op::Relink:
      nodes_[e.a].children.set(e.symbol, e.old_target);
      bump(e.a);
      break;
  }
}

void PrefixTree::undo(const AppliedRefinement& applied) {
  if (applied_.empty() || applied_.back().sequence != applied.sequence ||
      applied.journal_end != journal_.size()) {
    throw std::logic_error("refinements must be undone in LIFO order");
  }
  for (std::size_t i = applied.journal_end; i > applied.journal_begin; --i) revert(journal_[i - 1]);
  journal_.resize(applied.journal_begin);
  applied_.pop_back();
}

void PrefixTree::undo_all() {
  while (!applied_.empty()) undo(applied_.back());
}

void PrefixTree::commit() {
  journal_.clear();
  applied_.clear();
}

std::vector<std::pair<StateId, Color>> PrefixTree::coloured_nodes() const {
  // A node folded into a red or blue state carries that state's colour.
  std::vector<std::pair<StateId, Color>> out;
  for (const auto& n : nodes_) {
    const Color c = nodes_[find(n.id)].color;
    if (c != Color::White) out.emplace_back(n.id, c);
  }
  return out;
}

void PrefixTree::apply_marks(std::span<const std::pair<StateId, Color>> marks) {
  for (const auto& [q, c] : marks) {
    Node& n = nodes_.at(q);
    n.mark = std::max(n.mark, c);
  }
}

std::uint64_t PrefixTree::state_hash() const {
  std::uint64_t h = mix(0x7072656669780aULL, nodes_.size());
  for (const auto& n : nodes_) {
    h = mix(h, n.id);
    h = mix(h, static_cast<std::uint64_t>(n.color) | (static_cast<std::uint64_t>(n.mark) << 8));
    h = mix(h, n.representative);
    h = mix(h, n.parent ? *n.parent + 1ULL : 0ULL);
    h = mix(h, n.in_symbol ? *n.in_symbol + 1ULL : 0ULL);
    for (const auto& [a, c] : n.children) h = mix(mix(h, a), c);
    h = mix(h, n.size);
    h = mix(h, n.final_count);
    for (auto c : n.symbol_counts) h = mix(h, c);
    h = n.sketches.hash_into(h);
  }
  return h;
}

CountModel PrefixTree::hypothesis_counts() const {
  std::vector<StateId> order;
  std::vector<StateId> index(nodes_.size(), UINT32_MAX);
  std::deque<StateId> queue{find(root())};
  index[queue.front()] = 0;
  order.push_back(queue.front());
  while (!queue.empty()) {
    const StateId q = queue.front();
    queue.pop_front();
    for (const auto& [a, c] : nodes_[q].children) {
      const StateId t = find(c);
      if (nodes_[t].color != Color::Red || index[t] != UINT32_MAX) continue;
      index[t] = static_cast<StateId>(order.size());
      order.push_back(t);
      queue.push_back(t);
    }
  }
  for (StateId r : reds_) {
    if (index[r] == UINT32_MAX) {
      index[r] = static_cast<StateId>(order.size());
      order.push_back(r);
    }
  }
  CountModel model;
  model.alphabet = config_.alphabet;
  model.root = 0;
  model.states.reserve(order.size());
  for (StateId q : order) {
    const Node& n = nodes_[q];
    CountState s;
    s.size = n.size;
    s.final_count = n.final_count;
    for (Symbol a = 0; a < n.symbol_counts.size(); ++a) {
      if (n.symbol_counts[a] == 0) continue;
      CountState::Out out{a, std::nullopt, n.symbol_counts[a]};
      if (auto t = child(q, a); t && nodes_[*t].color == Color::Red) out.target = index[*t];
      s.transitions.push_back(out);
    }
    model.states.push_back(std::move(s));
  }
  return model;
}

std::size_t PrefixTree::node_overhead_bytes() const {
  return sizeof(Node) + config_.alphabet.size * sizeof(std::uint64_t) + 2 * sizeof(std::pair<Symbol, StateId>);
}

PdfaView PrefixTree::hypothesis() const {
  if (nodes_[find(root())].size == 0) {
    PdfaView empty;
    empty.alphabet = config_.alphabet;
    empty.states.resize(1);
    empty.states[0].final_prob = 1.0;
    return empty;
  }
  return normalize_counts(hypothesis_counts());
}

std::size_t PrefixTree::memory_estimate_bytes() const {
  const std::size_t per_node = node_overhead_bytes() + (sketches_ ? sketches_->dense_stack_bytes() : 0);
  return nodes_.size() * per_node;
}

std::string PrefixTree::to_json() const {
  nlohmann::json j;
  j["alphabet_size"] = config_.alphabet.size;
  auto nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json node;
    node["id"] = n.id;
    node["color"] = to_string(n.color);
    node["representative"] = n.representative;
    node["size"] = n.size;
    node["final_count"] = n.final_count;
    auto trans = nlohmann::json::array();
    for (const auto& [a, c] : n.children) {
      trans.push_back({{"symbol", a}, {"target", c}, {"count", n.symbol_counts[a]}});
    }
    node["transitions"] = std::move(trans);
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  return j.dump(2);
}

std::string PrefixTree::to_dot() const {
  std::ostringstream out;
  out << "digraph prefix_tree {\n  node [style=filled];\n";
  for (const auto& n : nodes_) {
    if (!alive(n.id)) continue;
    const char* fill = n.color == Color::Red ? "tomato" : n.color == Color::Blue ? "lightblue" : "white";
    out << "  q" << n.id << " [label=\"" << n.id << "\\nn=" << n.size << " f=" << n.final_count
        << "\", fillcolor=" << fill << "];\n";
  }
  for (const auto& n : nodes_) {
    if (!alive(n.id)) continue;
    for (const auto& [a, c] : n.children) {
      out << "  q" << n.id << " -> q" << find(c) << " [label=\"" << a << ":" << n.symbol_counts[a] << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace pdfa
