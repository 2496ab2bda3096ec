#include "treeattn/treebank.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "treeattn/error.hpp"

namespace treeattn {

std::string_view to_string(TreeKind kind) {
  return kind == TreeKind::Dependency ? "dependency" : "constituency";
}

TreeKind tree_kind_from_string(std::string_view name) {
  if (name == "dependency") return TreeKind::Dependency;
  if (name == "constituency") return TreeKind::Constituency;
  throw UsageError(fmt::format("unknown tree kind '{}'", name));
}

std::size_t SentencePair::first_size() const {
  return first.empty() ? 0 : first.front().token_count();
}

std::size_t SentencePair::second_size() const {
  return second.empty() ? 0 : second.front().token_count();
}

void check_group(const TreeGroup& group) {
  if (group.empty()) throw StructureError("empty tree group");
  std::set<TreeKind> kinds;
  for (const auto& tree : group) {
    require_valid(tree);
    if (!kinds.insert(tree.kind).second) {
      throw StructureError(fmt::format("tree group has two {} trees", to_string(tree.kind)));
    }
    if (tree.token_count() != group.front().token_count()) {
      throw StructureError(fmt::format("tree group token counts differ: {} vs {}",
                                       group.front().token_count(), tree.token_count()));
    }
  }
}

void check_pair(const SentencePair& pair) {
  check_group(pair.first);
  check_group(pair.second);
  if (pair.first.size() != pair.second.size()) {
    throw StructureError("sentence pair members carry different tree kinds");
  }
  for (std::size_t i = 0; i < pair.first.size(); ++i) {
    if (pair.first[i].kind != pair.second[i].kind) {
      throw StructureError("sentence pair members carry different tree kinds");
    }
  }
}

// ---------------------------------------------------------------------------
// CoNLL-U

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

struct ConlluRow {
  std::size_t line;
  int id;
  std::string form;
  int head;
  std::string deprel;
};

SyntaxTree finish_conllu_sentence(const std::vector<ConlluRow>& rows, std::size_t sentence) {
  const int n = static_cast<int>(rows.size());
  for (int i = 0; i < n; ++i) {
    if (rows[i].id != i + 1) {
      throw StructureError(fmt::format("sentence {}, line {}: token id {} out of sequence (expected {})",
                                       sentence, rows[i].line, rows[i].id, i + 1));
    }
  }
  for (const auto& r : rows) {
    if (r.head < 0 || r.head > n) {
      throw StructureError(fmt::format("sentence {}, line {}: head {} references nonexistent token",
                                       sentence, r.line, r.head));
    }
  }
  // 0 = unvisited, 1 = on current path, 2 = reaches a root
  std::vector<int> state(n + 1, 0);
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (cur != 0 && state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = rows[cur - 1].head;
    }
    if (cur != 0 && state[cur] == 1) {
      auto it = std::find(path.begin(), path.end(), cur);
      std::vector<int> cycle(it, path.end());
      std::sort(cycle.begin(), cycle.end());
      throw StructureError(
          fmt::format("sentence {}: cycle among heads at tokens {}", sentence, fmt::join(cycle, ", ")));
    }
    for (int t : path) state[t] = 2;
  }
  std::vector<int> roots;
  for (const auto& r : rows)
    if (r.head == 0) roots.push_back(r.id);
  if (roots.size() != 1) {
    throw StructureError(
        fmt::format("sentence {}: expected one root, found tokens {}", sentence, fmt::join(roots, ", ")));
  }

  SyntaxTree tree;
  tree.kind = TreeKind::Dependency;
  tree.root_id = roots.front();
  for (const auto& r : rows) {
    tree.tokens.push_back({r.id, r.form});
    Node node{r.id, r.deprel, std::nullopt, r.id};
    if (r.head != 0) node.parent = r.head;
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

}  // namespace

std::vector<SyntaxTree> parse_conllu(std::string_view text) {
  std::vector<SyntaxTree> trees;
  std::vector<ConlluRow> rows;
  bool in_sentence = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    // A block of comments alone is not a sentence.
    if (in_sentence && !rows.empty()) trees.push_back(finish_conllu_sentence(rows, trees.size() + 1));
    rows.clear();
    in_sentence = false;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (is_blank(line)) {
      flush();
      continue;
    }
    in_sentence = true;
    if (line.front() == '#') continue;

    auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw FormatError(
          fmt::format("line {}: expected 10 tab-separated columns, found {}", line_no, cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) {
      continue;
    }
    auto id = parse_int(cols[0]);
    if (!id || *id <= 0) throw FormatError(fmt::format("line {}: invalid token id '{}'", line_no, cols[0]));
    auto head = parse_int(cols[6]);
    if (!head) throw FormatError(fmt::format("line {}: invalid head '{}'", line_no, cols[6]));
    rows.push_back({line_no, *id, std::string(cols[1]), *head, std::string(cols[7])});
  }
  flush();
  return trees;
}

// ---------------------------------------------------------------------------
// Bracketed constituency trees

namespace {

struct Bracketed {
  std::string label;
  bool is_word = false;
  std::vector<Bracketed> children;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Drops "-NONE-" subtrees and any constituent left without children.
bool prune_empty_elements(Bracketed& node) {
  if (node.is_word) return true;
  if (node.label == "-NONE-") return false;
  std::vector<Bracketed> kept;
  for (auto& child : node.children) {
    if (prune_empty_elements(child)) kept.push_back(std::move(child));
  }
  node.children = std::move(kept);
  return !node.children.empty();
}

void number_tree(const Bracketed& node, std::optional<int> parent, SyntaxTree& tree) {
  const int id = static_cast<int>(tree.nodes.size()) + 1;
  Node out{id, node.label, parent, std::nullopt};
  if (node.is_word) {
    const int index = static_cast<int>(tree.tokens.size()) + 1;
    tree.tokens.push_back({index, node.label});
    out.token_index = index;
  }
  tree.nodes.push_back(std::move(out));
  for (const auto& child : node.children) number_tree(child, id, tree);
}

}  // namespace

std::vector<SyntaxTree> parse_ptb(std::string_view text) {
  struct Frame {
    Bracketed node;
    bool has_label = false;
    std::size_t open_offset;
  };
  std::vector<SyntaxTree> trees;
  std::vector<Frame> stack;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '(') {
      stack.push_back({Bracketed{}, false, i});
      ++i;
      // A label, when present, must directly follow the opening bracket.
      std::size_t j = i;
      while (j < text.size() && is_space(text[j])) ++j;
      if (j < text.size() && text[j] != '(' && text[j] != ')') {
        std::size_t k = j;
        while (k < text.size() && !is_space(text[k]) && text[k] != '(' && text[k] != ')') ++k;
        stack.back().node.label = std::string(text.substr(j, k - j));
        stack.back().has_label = true;
        i = k;
      }
      continue;
    }
    if (c == ')') {
      if (stack.empty()) throw FormatError(fmt::format("byte {}: unbalanced parenthesis, unexpected ')'", i));
      Frame frame = std::move(stack.back());
      stack.pop_back();
      if (frame.node.children.empty()) {
        throw FormatError(fmt::format("byte {}: empty expression", frame.open_offset));
      }
      if (!stack.empty()) {
        stack.back().node.children.push_back(std::move(frame.node));
      } else {
        const std::size_t number = trees.size() + 1;
        if (!prune_empty_elements(frame.node)) {
          throw FormatError(fmt::format("byte {}: tree {} has no tokens after removing empty elements",
                                        frame.open_offset, number));
        }
        SyntaxTree tree;
        tree.kind = TreeKind::Constituency;
        tree.root_id = 1;
        number_tree(frame.node, std::nullopt, tree);
        trees.push_back(std::move(tree));
      }
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k < text.size() && !is_space(text[k]) && text[k] != '(' && text[k] != ')') ++k;
    if (stack.empty()) throw FormatError(fmt::format("byte {}: expected '(' at top level", i));
    stack.back().node.children.push_back(Bracketed{std::string(text.substr(i, k - i)), true, {}});
    i = k;
  }
  if (!stack.empty()) {
    throw FormatError(
        fmt::format("byte {}: unbalanced parenthesis, '(' is never closed", stack.back().open_offset));
  }
  return trees;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate(const SyntaxTree& tree) {
  std::vector<std::string> out;
  std::map<int, std::size_t> pos;
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    if (!pos.emplace(tree.nodes[k].id, k).second) {
      out.push_back(fmt::format("duplicate node id {}", tree.nodes[k].id));
    }
  }
  if (tree.nodes.empty()) {
    out.push_back("tree has no nodes");
    return out;
  }

  std::vector<int> roots;
  for (const auto& node : tree.nodes)
    if (!node.parent) roots.push_back(node.id);
  std::sort(roots.begin(), roots.end());
  if (roots.empty()) {
    out.push_back("no root: every node has a parent");
  } else if (roots.size() > 1) {
    out.push_back(fmt::format("multiple roots: ids {}", fmt::join(roots, ", ")));
  }
  auto root_it = pos.find(tree.root_id);
  if (root_it == pos.end()) {
    out.push_back(fmt::format("root id {} does not name a node", tree.root_id));
  } else if (tree.nodes[root_it->second].parent) {
    out.push_back(fmt::format("root id {} has a parent", tree.root_id));
  }

  bool links_ok = true;
  for (const auto& node : tree.nodes) {
    if (node.parent && !pos.count(*node.parent)) {
      out.push_back(fmt::format("unknown parent: node {} references {}", node.id, *node.parent));
      links_ok = false;
    }
  }

  // Walk parent links; 0 unvisited, 1 on path, 2 reaches root_id, 3 does not.
  std::vector<int> state(tree.nodes.size(), 0);
  std::set<int> cyclic, detached;
  for (std::size_t start = 0; start < tree.nodes.size(); ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    int verdict = 0;
    while (true) {
      if (state[cur] == 2 || state[cur] == 3) {
        verdict = state[cur];
        break;
      }
      if (state[cur] == 1) {
        auto it = std::find(path.begin(), path.end(), cur);
        for (auto p = it; p != path.end(); ++p) cyclic.insert(tree.nodes[*p].id);
        verdict = 3;
        break;
      }
      state[cur] = 1;
      path.push_back(cur);
      const auto& node = tree.nodes[cur];
      if (!node.parent) {
        verdict = node.id == tree.root_id ? 2 : 3;
        break;
      }
      auto next = pos.find(*node.parent);
      if (next == pos.end()) {
        verdict = 3;
        break;
      }
      cur = next->second;
    }
    for (std::size_t p : path) {
      state[p] = verdict;
      if (verdict == 3 && !cyclic.count(tree.nodes[p].id)) detached.insert(tree.nodes[p].id);
    }
  }
  if (!cyclic.empty()) {
    out.push_back(fmt::format("cycle among parent links: ids {}", fmt::join(cyclic, ", ")));
    links_ok = false;
  }
  if (!detached.empty() && roots.size() <= 1) {
    out.push_back(fmt::format("not connected to root: ids {}", fmt::join(detached, ", ")));
  }
  if (!detached.empty()) links_ok = false;

  const int n = static_cast<int>(tree.tokens.size());
  for (int t = 0; t < n; ++t) {
    if (tree.tokens[t].index != t + 1) {
      out.push_back(fmt::format("token indices are not 1..{} in order (position {} has {})", n, t + 1,
                                tree.tokens[t].index));
      break;
    }
  }

  std::map<int, int> child_count;
  for (const auto& node : tree.nodes)
    if (node.parent) ++child_count[*node.parent];

  std::vector<int> missing;
  std::map<int, std::vector<int>> bearers;
  for (const auto& node : tree.nodes) {
    const bool leaf = child_count[node.id] == 0;
    const bool needs_token = tree.kind == TreeKind::Dependency || leaf;
    if (tree.kind == TreeKind::Constituency && !leaf && node.token_index) {
      out.push_back(fmt::format("internal node carries token index: node {}", node.id));
    }
    if (needs_token && !node.token_index) missing.push_back(node.id);
    if (node.token_index) {
      if (*node.token_index < 1 || *node.token_index > n) {
        out.push_back(fmt::format("token index out of range: node {} -> {}", node.id, *node.token_index));
      } else {
        bearers[*node.token_index].push_back(node.id);
      }
    }
  }
  if (!missing.empty()) {
    out.push_back(fmt::format("{} without token index: ids {}",
                              tree.kind == TreeKind::Dependency ? "node" : "leaf", fmt::join(missing, ", ")));
  }
  std::vector<int> orphan_tokens;
  for (int t = 1; t <= n; ++t) {
    auto it = bearers.find(t);
    if (it == bearers.end()) {
      orphan_tokens.push_back(t);
    } else if (it->second.size() > 1) {
      out.push_back(fmt::format("token {} borne by multiple nodes: ids {}", t, fmt::join(it->second, ", ")));
    }
  }
  if (!orphan_tokens.empty()) {
    out.push_back(fmt::format("tokens without node: {}", fmt::join(orphan_tokens, ", ")));
  }

  if (tree.kind == TreeKind::Constituency && links_ok && out.empty()) {
    std::map<int, std::vector<int>> children;
    for (const auto& node : tree.nodes)
      if (node.parent) children[*node.parent].push_back(node.id);
    for (auto& [id, list] : children) std::sort(list.begin(), list.end());
    std::vector<int> leaf_tokens;
    std::vector<int> stack{tree.root_id};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const auto& node = tree.nodes[pos[id]];
      if (node.token_index) leaf_tokens.push_back(*node.token_index);
      auto it = children.find(id);
      if (it != children.end()) stack.insert(stack.end(), it->second.rbegin(), it->second.rend());
    }
    if (!std::is_sorted(leaf_tokens.begin(), leaf_tokens.end())) {
      out.push_back(fmt::format("leaf order differs from token order: {}", fmt::join(leaf_tokens, ", ")));
    }
  }
  return out;
}

void require_valid(const SyntaxTree& tree) {
  auto violations = validate(tree);
  if (!violations.empty()) {
    throw StructureError(fmt::format("invalid {} tree: {}", to_string(tree.kind), fmt::join(violations, "; ")));
  }
}

// ---------------------------------------------------------------------------
// JSON

ordered_json to_json(const SyntaxTree& tree) {
  auto tokens = tree.tokens;
  std::sort(tokens.begin(), tokens.end(), [](const Token& a, const Token& b) { return a.index < b.index; });
  auto nodes = tree.nodes;
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });

  ordered_json j;
  j["kind"] = to_string(tree.kind);
  j["tokens"] = ordered_json::array();
  for (const auto& t : tokens) {
    ordered_json tj;
    tj["index"] = t.index;
    tj["form"] = t.form;
    j["tokens"].push_back(std::move(tj));
  }
  j["nodes"] = ordered_json::array();
  for (const auto& node : nodes) {
    ordered_json nj;
    nj["id"] = node.id;
    nj["label"] = node.label;
    nj["parent"] = node.parent ? ordered_json(*node.parent) : ordered_json(nullptr);
    nj["token"] = node.token_index ? ordered_json(*node.token_index) : ordered_json(nullptr);
    j["nodes"].push_back(std::move(nj));
  }
  j["root"] = tree.root_id;
  return j;
}

SyntaxTree tree_from_json(const nlohmann::json& j) {
  try {
    SyntaxTree tree;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "dependency") {
      tree.kind = TreeKind::Dependency;
    } else if (kind == "constituency") {
      tree.kind = TreeKind::Constituency;
    } else {
      throw FormatError(fmt::format("tree JSON: unknown kind '{}'", kind));
    }
    for (const auto& t : j.at("tokens")) {
      tree.tokens.push_back({t.at("index").get<int>(), t.at("form").get<std::string>()});
    }
    for (const auto& nj : j.at("nodes")) {
      Node node;
      node.id = nj.at("id").get<int>();
      node.label = nj.at("label").get<std::string>();
      if (!nj.at("parent").is_null()) node.parent = nj.at("parent").get<int>();
      if (!nj.at("token").is_null()) node.token_index = nj.at("token").get<int>();
      tree.nodes.push_back(std::move(node));
    }
    tree.root_id = j.at("root").get<int>();
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("tree JSON: {}", e.what()));
  }
}

}  // namespace treeattn
