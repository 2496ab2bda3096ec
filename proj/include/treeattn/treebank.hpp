#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace treeattn {

enum class TreeKind { Dependency, Constituency };

std::string_view to_string(TreeKind kind);
/// Accepts "dependency" / "constituency"; throws UsageError otherwise.
TreeKind tree_kind_from_string(std::string_view name);

struct Token {
  int index = 0;  // 1-based
  std::string form;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Node {
  int id = 0;
  std::string label;
  std::optional<int> parent;
  std::optional<int> token_index;  // 1-based

  friend bool operator==(const Node&, const Node&) = default;
};

/// Rooted ordered tree. Children are ordered by node id, which parsers assign densely
/// in document order starting at 1.
struct SyntaxTree {
  TreeKind kind = TreeKind::Dependency;
  std::vector<Node> nodes;
  int root_id = 0;
  std::vector<Token> tokens;

  std::size_t token_count() const { return tokens.size(); }

  friend bool operator==(const SyntaxTree&, const SyntaxTree&) = default;
};

/// One sentence analysed under several tree kinds (at most one tree per kind).
using TreeGroup = std::vector<SyntaxTree>;

/// Two sentences for pairwise tasks. Token i of `second` occupies combined position
/// n1 + i, where n1 is the token count of `first`.
struct SentencePair {
  TreeGroup first;
  TreeGroup second;

  std::size_t first_size() const;
  std::size_t second_size() const;
  std::size_t combined_size() const { return first_size() + second_size(); }
};

/// Checks the pair invariants (same kinds in both members, consistent token counts).
void check_pair(const SentencePair& pair);
/// Checks that every tree of a group is valid, kinds are distinct and token counts agree.
void check_group(const TreeGroup& group);

std::vector<SyntaxTree> parse_conllu(std::string_view text);
std::vector<SyntaxTree> parse_ptb(std::string_view text);

/// Empty iff every SyntaxTree invariant holds.
std::vector<std::string> validate(const SyntaxTree& tree);
/// Throws StructureError listing all violations.
void require_valid(const SyntaxTree& tree);

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const SyntaxTree& tree);
SyntaxTree tree_from_json(const nlohmann::json& j);

}  // namespace treeattn
