#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace bmrf {

enum class Boundary { Torus, Free };

std::string to_string(Boundary b);
Boundary parse_boundary(const std::string& s);

struct Node {
  int i = 0;
  int j = 0;
  auto operator<=>(const Node&) const = default;
};

// Duplicate-free set of nodes kept in row-major order, so two sets compare
// equal iff they hold the same nodes.
class NodeSet {
 public:
  NodeSet() = default;
  NodeSet(std::initializer_list<Node> nodes);
  explicit NodeSet(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool contains(Node v) const;
  bool is_subset_of(const NodeSet& other) const;

  int min_row() const;
  int min_col() const;
  int max_row() const;
  int max_col() const;

  // Shift so that the bounding box starts at (0,0). The empty set is its own
  // anchored form.
  NodeSet anchored() const;

  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }

  auto operator<=>(const NodeSet&) const = default;

 private:
  std::vector<Node> nodes_;
};

struct LatticeSpec {
  int n = 1;
  int m = 1;
  Boundary boundary = Boundary::Torus;
  // Free lattices only: active[i * m + j] == 0 marks a node outside the
  // observed region. Empty means every node is active.
  std::vector<std::uint8_t> active;

  LatticeSpec() = default;
  LatticeSpec(int rows, int cols, Boundary b);

  int sites() const { return n * m; }
  int index(Node v) const { return v.i * m + v.j; }
  bool inside(Node v) const { return v.i >= 0 && v.i < n && v.j >= 0 && v.j < m; }
  bool is_active(Node v) const;
  bool has_mask() const { return !active.empty(); }
  void validate() const;
};

class TemplateClique {
 public:
  // k x l block of nodes anchored at (0,0).
  static TemplateClique block(int k, int l);
  explicit TemplateClique(NodeSet shape);

  const NodeSet& shape() const { return shape_; }
  int height() const { return k_; }
  int width() const { return l_; }
  std::size_t size() const { return shape_.size(); }
  // Template-local bit position of an offset, or -1 when it is not part of
  // the template. Bits follow the row-major order of the shape.
  int bit_of(Node offset) const;
  bool is_block() const { return shape_.size() == static_cast<std::size_t>(k_ * l_); }
  std::string label() const;

  bool operator==(const TemplateClique& o) const { return shape_ == o.shape_; }

 private:
  NodeSet shape_;
  int k_ = 0;
  int l_ = 0;
};

// "2x2" -> block(2,2).
TemplateClique parse_template(const std::string& s);

NodeSet translate(const NodeSet& s, int t, int u, const LatticeSpec& spec);

// Torus: the n*m translates of the template. Free: the translates lying
// completely inside the (active part of the) lattice.
std::vector<NodeSet> maximal_cliques(const LatticeSpec& spec, const TemplateClique& tpl);

struct BorderClique {
  Node anchor;              // lattice position of template offset (0,0)
  NodeSet inside;           // lattice nodes of the translate inside the lattice
  std::uint32_t inside_mask = 0;  // template-local bits of `inside`
  int outside_count = 0;    // |lambda*|, nodes averaged over
};

// Free boundary only: translates that intersect the lattice without being
// contained in it. Offsets beyond (k-1, l-1) outside the lattice never
// intersect, so the enumeration is exhaustive.
std::vector<BorderClique> border_cliques(const LatticeSpec& spec, const TemplateClique& tpl);

void check_template_fits(const LatticeSpec& spec, const TemplateClique& tpl);

}  // namespace bmrf
