#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cuebuddy/error.hpp"
#include "cuebuddy/fuzzy.hpp"

namespace cuebuddy {

using TermId = std::uint32_t;

/// One surface form of a glossary term, as a sequence of normalized tokens.
struct TermPattern {
  TermId term_id = 0;
  std::string canonical;
  std::vector<std::string> token_seq;
  std::vector<bool> fuzzy_eligible;  // token has >= kFuzzyMinLength code points

  static TermPattern make(TermId id, std::string canonical,
                          std::vector<std::string> tokens) {
    TermPattern p{id, std::move(canonical), std::move(tokens), {}};
    for (const auto& t : p.token_seq)
      p.fuzzy_eligible.push_back(unicode::length(t) >= kFuzzyMinLength);
    return p;
  }

  bool operator==(const TermPattern&) const = default;
};

/// A pattern occurrence before overlap resolution. Token indices inclusive.
struct Candidate {
  TermId term_id = 0;
  std::size_t pattern_index = 0;
  std::size_t first = 0;
  std::size_t last = 0;
  bool exact = true;

  std::size_t length() const { return last - first + 1; }
  bool operator==(const Candidate&) const = default;
};

/// Aho-Corasick automaton over a token alphabet, extended with a one-token
/// fuzzy budget: a pattern may match with at most one token replaced by an
/// observed token within one edit, provided the pattern token is at least
/// kFuzzyMinLength code points long.
///
/// Immutable after construction; any number of Cursors may scan with it
/// concurrently.
class TokenAutomaton {
 public:
  using Symbol = std::uint32_t;
  using NodeId = std::uint32_t;
  static constexpr Symbol kNoSymbol = std::numeric_limits<Symbol>::max();
  static constexpr NodeId kRoot = 0;
  static constexpr NodeId kNone = std::numeric_limits<NodeId>::max();

  explicit TokenAutomaton(std::vector<TermPattern> patterns)
      : patterns_(std::move(patterns)) {
    if (patterns_.empty())
      throw EmptyPatternSet("automaton requires at least one pattern");
    nodes_.push_back(Node{});
    build_trie();
    build_links();
    build_fuzzy_index();
  }

  const std::vector<TermPattern>& patterns() const { return patterns_; }
  std::size_t node_count() const { return nodes_.size(); }

  Symbol symbol_of(std::string_view token) const {
    auto it = vocabulary_.find(std::string(token));
    return it == vocabulary_.end() ? kNoSymbol : it->second;
  }

  /// Vocabulary symbols, other than the token's own, that fuzzily match it.
  std::vector<Symbol> fuzzy_symbols(std::string_view observed) const {
    std::vector<Symbol> out;
    if (fuzzy_keys_.empty()) return out;
    const auto cps = detail::to_code_points(observed);
    auto probe = [&](const std::u32string& key) {
      auto it = fuzzy_keys_.find(key);
      if (it == fuzzy_keys_.end()) return;
      for (Symbol s : it->second) {
        if (symbol_text_[s] == cps) continue;
        if (within_one_edit(symbol_text_[s], cps)) out.push_back(s);
      }
    };
    probe(cps);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (i > 0 && cps[i] == cps[i - 1]) continue;  // same deletion result
      std::u32string key = cps;
      key.erase(i, 1);
      probe(key);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Incremental scanning state. Feed normalized tokens one at a time;
  /// candidates ending at each token are appended to `out`.
  class Cursor {
   public:
    explicit Cursor(const TokenAutomaton& automaton) : automaton_(&automaton) {}

    void step(std::string_view token, std::vector<Candidate>& out) {
      const auto& a = *automaton_;
      const std::size_t here = position_++;
      const Symbol exact = a.symbol_of(token);
      const auto fuzzy = a.fuzzy_symbols(token);

      // Existing fuzzy paths continue on exact tokens only.
      std::vector<FuzzyPath> next;
      for (const auto& path : paths_) {
        if (exact == kNoSymbol) continue;
        NodeId child = a.child(path.node, exact);
        if (child == kNone) continue;
        a.emit_terminal(child, path.first, here, false, out);
        if (a.nodes_[child].has_children) next.push_back({child, path.first});
      }

      // Spend the fuzzy budget here from every pattern prefix that ends
      // exactly at the previous token: the current state and its failure chain.
      if (!fuzzy.empty()) {
        for (NodeId v = state_;; v = a.nodes_[v].fail) {
          const std::size_t first = here - a.nodes_[v].depth;
          for (Symbol s : fuzzy) {
            NodeId child = a.child(v, s);
            if (child == kNone) continue;
            a.emit_terminal(child, first, here, false, out);
            if (a.nodes_[child].has_children) next.push_back({child, first});
          }
          if (v == kRoot) break;
        }
      }
      paths_ = std::move(next);

      state_ = a.advance(state_, exact);
      for (NodeId v = a.nodes_[state_].pattern >= 0 ? state_ : a.nodes_[state_].output;
           v != kNone; v = a.nodes_[v].output) {
        const auto& p = a.patterns_[static_cast<std::size_t>(a.nodes_[v].pattern)];
        a.emit_terminal(v, here + 1 - p.token_seq.size(), here, true, out);
      }
    }

    std::size_t position() const { return position_; }

   private:
    struct FuzzyPath {
      NodeId node;
      std::size_t first;
    };
    const TokenAutomaton* automaton_;
    NodeId state_ = kRoot;
    std::size_t position_ = 0;
    std::vector<FuzzyPath> paths_;
  };

  Cursor cursor() const { return Cursor(*this); }

  /// Every candidate occurrence in `tokens`, in discovery order.
  std::vector<Candidate> scan(std::span<const std::string> tokens) const {
    std::vector<Candidate> out;
    Cursor c(*this);
    for (const auto& t : tokens) c.step(t, out);
    return out;
  }

 private:
  struct Node {
    NodeId fail = kRoot;
    NodeId output = kNone;  // nearest terminal strictly down the failure chain
    std::int32_t pattern = -1;
    std::uint32_t depth = 0;
    bool has_children = false;
  };

  static std::uint64_t edge_key(NodeId node, Symbol s) {
    return (static_cast<std::uint64_t>(node) << 32) | s;
  }

  NodeId child(NodeId node, Symbol s) const {
    auto it = edges_.find(edge_key(node, s));
    return it == edges_.end() ? kNone : it->second;
  }

  NodeId advance(NodeId state, Symbol s) const {
    if (s == kNoSymbol) return kRoot;
    for (;;) {
      NodeId next = child(state, s);
      if (next != kNone) return next;
      if (state == kRoot) return kRoot;
      state = nodes_[state].fail;
    }
  }

  void emit_terminal(NodeId node, std::size_t first, std::size_t last, bool exact,
                     std::vector<Candidate>& out) const {
    const auto index = nodes_[node].pattern;
    if (index < 0) return;
    const auto& p = patterns_[static_cast<std::size_t>(index)];
    out.push_back({p.term_id, static_cast<std::size_t>(index), first, last, exact});
  }

  Symbol intern(const std::string& token) {
    auto [it, inserted] =
        vocabulary_.try_emplace(token, static_cast<Symbol>(symbol_text_.size()));
    if (inserted) symbol_text_.push_back(detail::to_code_points(token));
    return it->second;
  }

  void build_trie() {
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      const auto& p = patterns_[i];
      if (p.token_seq.empty())
        throw InvalidPattern("pattern for term " + std::to_string(p.term_id) +
                             " has no tokens");
      NodeId node = kRoot;
      for (const auto& token : p.token_seq) {
        if (token.empty())
          throw InvalidPattern("empty token in pattern '" + p.canonical + "'");
        Symbol s = intern(token);
        NodeId next = child(node, s);
        if (next == kNone) {
          next = static_cast<NodeId>(nodes_.size());
          Node n;
          n.depth = nodes_[node].depth + 1;
          nodes_.push_back(n);
          edges_.emplace(edge_key(node, s), next);
          nodes_[node].has_children = true;
          children_.emplace_back(node, s, next);
        }
        node = next;
      }
      auto& terminal = nodes_[node];
      if (terminal.pattern >= 0) {
        const auto& other = patterns_[static_cast<std::size_t>(terminal.pattern)];
        if (other.term_id != p.term_id)
          throw DuplicatePattern("'" + p.canonical + "' (term " +
                                 std::to_string(p.term_id) + ") duplicates '" +
                                 other.canonical + "' (term " +
                                 std::to_string(other.term_id) + ")");
        continue;
      }
      terminal.pattern = static_cast<std::int32_t>(i);
    }
  }

  void build_links() {
    // children_ lists edges in creation order; regroup by parent for BFS.
    std::vector<std::vector<std::pair<Symbol, NodeId>>> kids(nodes_.size());
    for (auto [parent, s, c] : children_) kids[parent].emplace_back(s, c);
    std::queue<NodeId> queue;
    for (auto [s, c] : kids[kRoot]) {
      nodes_[c].fail = kRoot;
      queue.push(c);
    }
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop();
      for (auto [s, v] : kids[u]) {
        NodeId f = nodes_[u].fail;
        NodeId target = kNone;
        for (;;) {
          target = child(f, s);
          if (target != kNone || f == kRoot) break;
          f = nodes_[f].fail;
        }
        nodes_[v].fail = (target == kNone || target == v) ? kRoot : target;
        NodeId fv = nodes_[v].fail;
        nodes_[v].output = nodes_[fv].pattern >= 0 ? fv : nodes_[fv].output;
        queue.push(v);
      }
    }
    children_.clear();
    children_.shrink_to_fit();
  }

  void build_fuzzy_index() {
    for (Symbol s = 0; s < symbol_text_.size(); ++s) {
      const auto& cps = symbol_text_[s];
      if (cps.size() < kFuzzyMinLength) continue;
      fuzzy_keys_[cps].push_back(s);
      for (std::size_t i = 0; i < cps.size(); ++i) {
        std::u32string key = cps;
        key.erase(i, 1);
        auto& bucket = fuzzy_keys_[key];
        if (bucket.empty() || bucket.back() != s) bucket.push_back(s);
      }
    }
  }

  std::vector<TermPattern> patterns_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, NodeId> edges_;
  std::vector<std::tuple<NodeId, Symbol, NodeId>> children_;
  std::unordered_map<std::string, Symbol> vocabulary_;
  std::vector<std::u32string> symbol_text_;
  std::unordered_map<std::u32string, std::vector<Symbol>> fuzzy_keys_;
};

/// Builds the automaton; throws DuplicatePattern, EmptyPatternSet, InvalidPattern.
inline TokenAutomaton build_automaton(std::vector<TermPattern> patterns) {
  return TokenAutomaton(std::move(patterns));
}

/// Resolves overlapping candidates: earliest start first, then longest, then
/// exact over fuzzy, then lowest term id. Survivors never overlap and are
/// returned in token order.
inline std::vector<Candidate> select_leftmost_longest(std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.last != b.last) return a.last > b.last;
    if (a.exact != b.exact) return a.exact;
    if (a.term_id != b.term_id) return a.term_id < b.term_id;
    return a.pattern_index < b.pattern_index;
  });
  std::vector<Candidate> chosen;
  for (const auto& c : candidates) {
    if (!chosen.empty() && c.first <= chosen.back().last) continue;
    chosen.push_back(c);
  }
  return chosen;
}

}  // namespace cuebuddy
