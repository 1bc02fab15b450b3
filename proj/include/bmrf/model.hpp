#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bmrf/configsets.hpp"
#include "bmrf/lattice.hpp"
#include "bmrf/param.hpp"

namespace bmrf {

struct BinaryImage {
  int n = 0;
  int m = 0;
  Boundary boundary = Boundary::Torus;
  std::vector<std::uint8_t> data;  // row-major, values in {0,1}

  BinaryImage() = default;
  BinaryImage(int rows, int cols, Boundary b, std::uint8_t fill = 0)
      : n(rows), m(cols), boundary(b), data(static_cast<std::size_t>(rows) * cols, fill) {}

  std::uint8_t at(int i, int j) const { return data[static_cast<std::size_t>(i) * m + j]; }
  std::uint8_t& at(int i, int j) { return data[static_cast<std::size_t>(i) * m + j]; }
  int sites() const { return n * m; }
  void validate() const;
  bool operator==(const BinaryImage&) const = default;
};

// Per-node covariate vectors y_{i,j,1..K}.
struct CovariateField {
  int n = 0;
  int m = 0;
  int K = 0;
  std::vector<double> y;  // (i*m + j)*K + k

  double at(int site, int k) const { return y[static_cast<std::size_t>(site) * K + k]; }
};

// z = {(C_i, phi_i)}: a partition of the configuration classes into groups
// sharing one value, plus the covariate coefficients theta.
//
// Groups are kept canonical: members sorted, groups ordered by their smallest
// class id. The group values sum to zero.
class PartitionState {
 public:
  PartitionState() = default;
  PartitionState(int class_count, std::vector<std::vector<int>> groups, std::vector<double> values,
                 std::vector<double> theta = {});

  static PartitionState single_group(int class_count, int theta_dim = 0);
  // Every class in its own group, all values zero.
  static PartitionState full_split(int class_count, int theta_dim = 0);
  // Groups classes with identical phi; the group values must sum to zero.
  static PartitionState from_phi(const PhiVector& phi, int theta_dim = 0);

  int class_count() const { return class_count_; }
  int r() const { return static_cast<int>(groups_.size()); }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<int>& class_to_group() const { return class_to_group_; }
  int group_of(int cls) const { return class_to_group_[cls]; }

  void set_theta(std::vector<double> theta) { theta_ = std::move(theta); }

  bool operator==(const PartitionState& o) const {
    return class_count_ == o.class_count_ && groups_ == o.groups_ && values_ == o.values_ && theta_ == o.theta_;
  }

 private:
  void canonicalize_and_validate();

  int class_count_ = 0;
  std::vector<std::vector<int>> groups_;
  std::vector<double> values_;
  std::vector<double> theta_;
  std::vector<int> class_to_group_;
};

inline constexpr double kSumToZeroTolerance = 1e-9;

PhiVector phi_of(const PartitionState& z);

// Precomputed clique structure of a lattice + template. Every clique (a
// maximal clique, or on a free lattice a border clique) maps its template-local
// on-mask to a "slot": slots [0, K) are the configuration classes, the rest
// are (border type, inside on-mask) pairs whose potential is the average over
// outside completions.
class Geometry {
 public:
  Geometry(LatticeSpec spec, std::shared_ptr<const ConfigCatalog> catalog);

  const LatticeSpec& spec() const { return spec_; }
  const ConfigCatalog& catalog() const { return *catalog_; }
  std::shared_ptr<const ConfigCatalog> catalog_ptr() const { return catalog_; }
  const TemplateClique& tpl() const { return catalog_->tpl(); }
  int sites() const { return spec_.sites(); }
  int tpl_size() const { return static_cast<int>(tpl().size()); }
  int class_count() const { return catalog_->class_count(); }
  const std::vector<int>& active_sites() const { return active_sites_; }
  bool is_active(int site) const { return active_[site] != 0; }

  int clique_count() const { return static_cast<int>(clique_table_.size()); }
  int maximal_clique_count() const { return maximal_count_; }
  // Site per template bit; -1 for nodes outside the lattice (border cliques).
  std::span<const int> clique_nodes(int c) const {
    return {clique_nodes_.data() + static_cast<std::size_t>(c) * tpl_size(), static_cast<std::size_t>(tpl_size())};
  }
  int clique_table(int c) const { return clique_table_[c]; }
  bool is_border(int c) const { return c >= maximal_count_; }

  // Table 0 maps masks to classes; table t > 0 belongs to border type t-1.
  int table_count() const { return static_cast<int>(slot_tables_.size()); }
  std::span<const int> slot_table(int t) const { return slot_tables_[t]; }
  int slot_count() const { return slot_count_; }
  // Class weights of each slot: slot s contributes sum_c w * phi_c.
  const std::vector<std::pair<int, double>>& slot_weights(int slot) const { return slot_weights_[slot]; }

  std::uint32_t clique_mask(const BinaryImage& x, int c) const;
  int clique_slot(const BinaryImage& x, int c) const { return slot_tables_[clique_table_[c]][clique_mask(x, c)]; }

  struct SiteRef {
    int clique;
    int bit;
  };
  std::span<const SiteRef> site_refs(int site) const {
    return {site_refs_.data() + site_ref_begin_[site], static_cast<std::size_t>(site_ref_begin_[site + 1] - site_ref_begin_[site])};
  }

  // Neighbourhood coding for table-driven conditionals. A site is regular when
  // all |tpl| maximal cliques containing it are present (no border terms).
  const std::vector<Node>& neighbour_offsets() const { return nbr_offsets_; }
  bool is_regular(int site) const { return regular_[site] != 0; }
  std::span<const int> neighbours(int site) const {
    return {nbr_sites_.data() + static_cast<std::size_t>(site) * nbr_offsets_.size(), nbr_offsets_.size()};
  }
  // For each template bit b the site can occupy, and each other bit b', the
  // index into neighbour_offsets() of that node (or -1 for b' == b).
  int neighbour_code_index(int b, int other) const { return nbr_code_index_[b * tpl_size() + other]; }

  // Slot counts of an image (integer sufficient statistics).
  std::vector<int> slot_histogram(const BinaryImage& x) const;
  // Class histogram h with U(x) = h . phi (+ covariates); fractional entries
  // come from border averaging.
  std::vector<double> class_histogram(const BinaryImage& x) const;
  std::vector<double> class_histogram_from_slots(std::span<const int> slots) const;

  void check_image(const BinaryImage& x) const;
  void check_covariates(const CovariateField& cov) const;

 private:
  LatticeSpec spec_;
  std::shared_ptr<const ConfigCatalog> catalog_;
  std::vector<std::uint8_t> active_;
  std::vector<int> active_sites_;
  int maximal_count_ = 0;
  std::vector<int> clique_nodes_;
  std::vector<int> clique_table_;
  std::vector<std::vector<int>> slot_tables_;
  int slot_count_ = 0;
  std::vector<std::vector<std::pair<int, double>>> slot_weights_;
  std::vector<SiteRef> site_refs_;
  std::vector<int> site_ref_begin_;
  std::vector<Node> nbr_offsets_;
  std::vector<int> nbr_sites_;
  std::vector<int> nbr_code_index_;
  std::vector<std::uint8_t> regular_;
};

// A geometry bound to one parameter value (phi, theta, covariates): caches
// the potential of every clique mask and the conditional table for regular
// sites. Cheap to build; build one per candidate state.
class EnergyModel {
 public:
  EnergyModel(const Geometry& geom, const PhiVector& phi, const CovariateField* cov = nullptr,
              std::span<const double> theta = {});
  EnergyModel(const Geometry& geom, const PartitionState& z, const CovariateField* cov = nullptr);

  const Geometry& geometry() const { return *geom_; }
  const PhiVector& phi() const { return phi_; }

  double energy(const BinaryImage& x) const;
  // Energy from integer slot counts (no covariate term).
  double energy_from_slots(std::span<const int> slots) const;
  double slot_potential(int slot) const { return slot_phi_[slot]; }
  double clique_potential(int table, std::uint32_t mask) const { return table_phi_[table][mask]; }

  // U(x with site set to 1) - U(x with site set to 0).
  double log_odds(const BinaryImage& x, int site) const;
  double log_odds_generic(const BinaryImage& x, int site) const;
  // U(x with site flipped) - U(x).
  double delta_flip(const BinaryImage& x, int site) const;

  bool has_field() const { return !field_.empty(); }
  double field(int site) const { return field_.empty() ? 0.0 : field_[site]; }
  // Log-odds of x_site = 1 for a regular site's neighbourhood code, without
  // the covariate term.
  double table_log_odds(std::uint32_t code) const { return cond_log_odds_[code]; }
  bool has_table() const { return !cond_log_odds_.empty(); }
  std::uint32_t neighbour_code(const BinaryImage& x, int site) const;

 private:
  void build();

  const Geometry* geom_;
  PhiVector phi_;
  std::vector<double> slot_phi_;
  std::vector<std::vector<double>> table_phi_;
  std::vector<double> field_;
  std::vector<double> cond_log_odds_;
};

// Largest neighbourhood for which the conditional table is built.
inline constexpr std::size_t kMaxTableNeighbours = 16;

double energy(const BinaryImage& x, const PartitionState& z, const Geometry& geom,
              const CovariateField* cov = nullptr);
double energy_delta_flip(const BinaryImage& x, const PartitionState& z, const Geometry& geom,
                         const CovariateField* cov, int site);

}  // namespace bmrf
