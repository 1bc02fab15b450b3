#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bmrf/lattice.hpp"

namespace bmrf {

// One translational-equivalence class of on-subsets of the template clique.
// All members share a single potential under stationarity.
struct ConfigClass {
  int id = 0;
  NodeSet canonical;                   // anchored at (0,0); empty for class 0
  std::vector<NodeSet> members;        // template-local subsets in this class
  std::vector<std::uint32_t> member_masks;
  int multiplicity() const { return static_cast<int>(members.size()); }
  int order() const { return static_cast<int>(canonical.size()); }
};

inline constexpr std::size_t kDefaultCatalogCap = 12;

class ConfigCatalog {
 public:
  const TemplateClique& tpl() const { return tpl_; }
  const std::vector<ConfigClass>& classes() const { return classes_; }
  const ConfigClass& at(int id) const { return classes_.at(static_cast<std::size_t>(id)); }
  int class_count() const { return static_cast<int>(classes_.size()); }

  // Hot-path lookup: template-local on-mask -> class id.
  int class_of_mask(std::uint32_t mask) const { return mask_class_[mask]; }
  const std::vector<int>& mask_table() const { return mask_class_; }

  // Class of a set given in template-local coordinates (any translate of a
  // member is accepted; it is re-anchored before lookup).
  int classify(const NodeSet& on_set) const;

  std::uint32_t mask_of(const NodeSet& local) const;

  // Rows of the template bounding box with '1' for on nodes of the canonical
  // shape, '0' for template nodes that are off, '.' for non-template cells.
  std::string bitmap(int id) const;

 private:
  friend ConfigCatalog build_catalog(const TemplateClique& tpl, std::size_t cap);
  explicit ConfigCatalog(TemplateClique tpl) : tpl_(std::move(tpl)) {}

  TemplateClique tpl_;
  std::vector<ConfigClass> classes_;
  std::map<NodeSet, int> index_;
  std::vector<int> mask_class_;
};

ConfigCatalog build_catalog(const TemplateClique& tpl, std::size_t cap = kDefaultCatalogCap);

}  // namespace bmrf
