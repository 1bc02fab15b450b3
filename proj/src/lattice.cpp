#include "bmrf/lattice.hpp"

#include <algorithm>
#include <regex>

#include "bmrf/error.hpp"

namespace bmrf {

std::string to_string(Boundary b) { return b == Boundary::Torus ? "torus" : "free"; }

Boundary parse_boundary(const std::string& s) {
  if (s == "torus") return Boundary::Torus;
  if (s == "free") return Boundary::Free;
  throw ValidationError("boundary must be 'torus' or 'free', got '" + s + "'");
}

NodeSet::NodeSet(std::initializer_list<Node> nodes) : NodeSet(std::vector<Node>(nodes)) {}

NodeSet::NodeSet(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
}

bool NodeSet::contains(Node v) const { return std::binary_search(nodes_.begin(), nodes_.end(), v); }

bool NodeSet::is_subset_of(const NodeSet& other) const {
  return std::includes(other.nodes_.begin(), other.nodes_.end(), nodes_.begin(), nodes_.end());
}

int NodeSet::min_row() const { return nodes_.empty() ? 0 : nodes_.front().i; }
int NodeSet::max_row() const { return nodes_.empty() ? 0 : nodes_.back().i; }

int NodeSet::min_col() const {
  int c = nodes_.empty() ? 0 : nodes_.front().j;
  for (const auto& v : nodes_) c = std::min(c, v.j);
  return c;
}

int NodeSet::max_col() const {
  int c = nodes_.empty() ? 0 : nodes_.front().j;
  for (const auto& v : nodes_) c = std::max(c, v.j);
  return c;
}

NodeSet NodeSet::anchored() const {
  if (nodes_.empty()) return {};
  const int di = min_row();
  const int dj = min_col();
  std::vector<Node> out;
  out.reserve(nodes_.size());
  for (const auto& v : nodes_) out.push_back({v.i - di, v.j - dj});
  return NodeSet(std::move(out));
}

LatticeSpec::LatticeSpec(int rows, int cols, Boundary b) : n(rows), m(cols), boundary(b) { validate(); }

bool LatticeSpec::is_active(Node v) const {
  if (!inside(v)) return false;
  return active.empty() || active[index(v)] != 0;
}

void LatticeSpec::validate() const {
  if (n < 1 || m < 1) throw ValidationError("lattice dimensions must be positive");
  if (!active.empty()) {
    if (boundary == Boundary::Torus) throw ValidationError("a node mask is only supported on free lattices");
    if (active.size() != static_cast<std::size_t>(n * m)) throw ValidationError("node mask size does not match lattice");
  }
}

TemplateClique TemplateClique::block(int k, int l) {
  if (k < 1 || l < 1) throw ValidationError("template block dimensions must be positive");
  std::vector<Node> v;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < l; ++j) v.push_back({i, j});
  return TemplateClique(NodeSet(std::move(v)));
}

TemplateClique::TemplateClique(NodeSet shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ValidationError("template clique must be non-empty");
  if (shape_.min_row() != 0 || shape_.min_col() != 0) throw ValidationError("template clique must be anchored at (0,0)");
  k_ = shape_.max_row() + 1;
  l_ = shape_.max_col() + 1;
}

int TemplateClique::bit_of(Node offset) const {
  const auto& v = shape_.nodes();
  auto it = std::lower_bound(v.begin(), v.end(), offset);
  if (it == v.end() || *it != offset) return -1;
  return static_cast<int>(it - v.begin());
}

std::string TemplateClique::label() const {
  if (is_block()) return std::to_string(k_) + "x" + std::to_string(l_);
  std::string s;
  for (int i = 0; i < k_; ++i) {
    if (i) s += '/';
    for (int j = 0; j < l_; ++j) s += shape_.contains({i, j}) ? '1' : '0';
  }
  return s;
}

TemplateClique parse_template(const std::string& s) {
  static const std::regex block_re(R"(^\s*(\d+)\s*[xX]\s*(\d+)\s*$)");
  std::smatch mt;
  if (std::regex_match(s, mt, block_re)) return TemplateClique::block(std::stoi(mt[1]), std::stoi(mt[2]));
  // Bitmap form: rows of 0/1 separated by '/', e.g. "11/10".
  std::vector<Node> nodes;
  int i = 0, j = 0;
  for (char c : s) {
    if (c == '/') {
      ++i;
      j = 0;
    } else if (c == '1') {
      nodes.push_back({i, j++});
    } else if (c == '0' || c == '.') {
      ++j;
    } else {
      throw ValidationError("cannot parse template '" + s + "' (use KxL or a 0/1 bitmap like 11/10)");
    }
  }
  return TemplateClique(NodeSet(std::move(nodes)).anchored());
}

NodeSet translate(const NodeSet& s, int t, int u, const LatticeSpec& spec) {
  std::vector<Node> out;
  out.reserve(s.size());
  for (const auto& v : s) {
    if (spec.boundary == Boundary::Torus) {
      int i = (v.i + t) % spec.n;
      int j = (v.j + u) % spec.m;
      if (i < 0) i += spec.n;
      if (j < 0) j += spec.m;
      out.push_back({i, j});
    } else {
      out.push_back({v.i + t, v.j + u});
    }
  }
  return NodeSet(std::move(out));
}

void check_template_fits(const LatticeSpec& spec, const TemplateClique& tpl) {
  if (tpl.height() > spec.n || tpl.width() > spec.m)
    throw ValidationError("template " + tpl.label() + " is larger than the " + std::to_string(spec.n) + "x" +
                          std::to_string(spec.m) + " lattice");
}

std::vector<NodeSet> maximal_cliques(const LatticeSpec& spec, const TemplateClique& tpl) {
  spec.validate();
  check_template_fits(spec, tpl);
  std::vector<NodeSet> out;
  if (spec.boundary == Boundary::Torus) {
    out.reserve(static_cast<std::size_t>(spec.sites()));
    for (int t = 0; t < spec.n; ++t)
      for (int u = 0; u < spec.m; ++u) out.push_back(translate(tpl.shape(), t, u, spec));
    return out;
  }
  for (int t = 0; t + tpl.height() <= spec.n; ++t)
    for (int u = 0; u + tpl.width() <= spec.m; ++u) {
      NodeSet c = translate(tpl.shape(), t, u, spec);
      if (std::all_of(c.begin(), c.end(), [&](Node v) { return spec.is_active(v); })) out.push_back(std::move(c));
    }
  return out;
}

std::vector<BorderClique> border_cliques(const LatticeSpec& spec, const TemplateClique& tpl) {
  if (spec.boundary != Boundary::Free) throw ValidationError("border cliques exist only for free boundary lattices");
  spec.validate();
  check_template_fits(spec, tpl);
  std::vector<BorderClique> out;
  for (int t = -(tpl.height() - 1); t < spec.n; ++t)
    for (int u = -(tpl.width() - 1); u < spec.m; ++u) {
      BorderClique b;
      b.anchor = {t, u};
      std::vector<Node> inside;
      int bit = 0;
      for (const auto& off : tpl.shape()) {
        Node v{off.i + t, off.j + u};
        if (spec.is_active(v)) {
          inside.push_back(v);
          b.inside_mask |= (1u << bit);
        } else {
          ++b.outside_count;
        }
        ++bit;
      }
      if (inside.empty() || b.outside_count == 0) continue;
      b.inside = NodeSet(std::move(inside));
      out.push_back(std::move(b));
    }
  return out;
}

}  // namespace bmrf
