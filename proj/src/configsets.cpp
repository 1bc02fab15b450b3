#include "bmrf/configsets.hpp"

#include <algorithm>

#include "bmrf/error.hpp"

namespace bmrf {

namespace {

NodeSet subset_from_mask(const TemplateClique& tpl, std::uint32_t mask) {
  std::vector<Node> v;
  int bit = 0;
  for (const auto& node : tpl.shape()) {
    if (mask & (1u << bit)) v.push_back(node);
    ++bit;
  }
  return NodeSet(std::move(v));
}

}  // namespace

ConfigCatalog build_catalog(const TemplateClique& tpl, std::size_t cap) {
  if (tpl.size() > cap)
    throw CapError("template " + tpl.label() + " has " + std::to_string(tpl.size()) +
                   " nodes; catalog enumeration is capped at " + std::to_string(cap));
  ConfigCatalog cat(tpl);
  const std::uint32_t subsets = 1u << tpl.size();

  std::map<NodeSet, std::vector<std::uint32_t>> groups;
  for (std::uint32_t mask = 0; mask < subsets; ++mask) groups[subset_from_mask(tpl, mask).anchored()].push_back(mask);

  std::vector<NodeSet> order;
  order.reserve(groups.size());
  for (const auto& [canon, _] : groups) order.push_back(canon);
  std::stable_sort(order.begin(), order.end(),
                   [](const NodeSet& a, const NodeSet& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });

  cat.mask_class_.assign(subsets, -1);
  for (std::size_t id = 0; id < order.size(); ++id) {
    ConfigClass c;
    c.id = static_cast<int>(id);
    c.canonical = order[id];
    c.member_masks = groups[order[id]];
    for (std::uint32_t mask : c.member_masks) {
      c.members.push_back(subset_from_mask(tpl, mask));
      cat.mask_class_[mask] = c.id;
    }
    cat.index_.emplace(c.canonical, c.id);
    cat.classes_.push_back(std::move(c));
  }
  return cat;
}

int ConfigCatalog::classify(const NodeSet& on_set) const {
  auto it = index_.find(on_set.anchored());
  if (it == index_.end()) throw ValidationError("set is not a sub-shape of template " + tpl_.label());
  return it->second;
}

std::uint32_t ConfigCatalog::mask_of(const NodeSet& local) const {
  std::uint32_t mask = 0;
  for (const auto& v : local) {
    const int b = tpl_.bit_of(v);
    if (b < 0) throw ValidationError("node is not part of template " + tpl_.label());
    mask |= 1u << b;
  }
  return mask;
}

std::string ConfigCatalog::bitmap(int id) const {
  const NodeSet& c = at(id).canonical;
  std::string s;
  for (int i = 0; i < tpl_.height(); ++i) {
    if (i) s += '/';
    for (int j = 0; j < tpl_.width(); ++j) {
      if (c.contains({i, j}))
        s += '1';
      else
        s += tpl_.shape().contains({i, j}) ? '0' : '.';
    }
  }
  return s;
}

}  // namespace bmrf
