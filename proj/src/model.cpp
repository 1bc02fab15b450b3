#include "bmrf/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bmrf/error.hpp"

namespace bmrf {

void BinaryImage::validate() const {
  if (n < 1 || m < 1) throw ValidationError("image dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(n) * m) throw ValidationError("image buffer does not match its dimensions");
  for (auto v : data)
    if (v > 1) throw ValidationError("image values must be 0 or 1");
}

// ---------------------------------------------------------------------------
// PartitionState

PartitionState::PartitionState(int class_count, std::vector<std::vector<int>> groups, std::vector<double> values,
                               std::vector<double> theta)
    : class_count_(class_count), groups_(std::move(groups)), values_(std::move(values)), theta_(std::move(theta)) {
  canonicalize_and_validate();
}

PartitionState PartitionState::single_group(int class_count, int theta_dim) {
  std::vector<int> all(class_count);
  std::iota(all.begin(), all.end(), 0);
  return PartitionState(class_count, {all}, {0.0}, std::vector<double>(theta_dim, 0.0));
}

PartitionState PartitionState::full_split(int class_count, int theta_dim) {
  std::vector<std::vector<int>> g(class_count);
  for (int c = 0; c < class_count; ++c) g[c] = {c};
  return PartitionState(class_count, std::move(g), std::vector<double>(class_count, 0.0),
                        std::vector<double>(theta_dim, 0.0));
}

PartitionState PartitionState::from_phi(const PhiVector& phi, int theta_dim) {
  std::map<double, std::vector<int>> by_value;
  for (std::size_t c = 0; c < phi.size(); ++c) by_value[phi[c]].push_back(static_cast<int>(c));
  std::vector<std::vector<int>> groups;
  std::vector<double> values;
  for (auto& [v, g] : by_value) {
    groups.push_back(std::move(g));
    values.push_back(v);
  }
  return PartitionState(static_cast<int>(phi.size()), std::move(groups), std::move(values),
                        std::vector<double>(theta_dim, 0.0));
}

void PartitionState::canonicalize_and_validate() {
  if (class_count_ < 1) throw ValidationError("partition must cover at least one class");
  if (groups_.empty()) throw ValidationError("partition has no groups");
  if (groups_.size() != values_.size()) throw ValidationError("partition needs one value per group");
  class_to_group_.assign(class_count_, -1);
  for (auto& g : groups_) {
    if (g.empty()) throw ValidationError("partition contains an empty group");
    std::sort(g.begin(), g.end());
    for (int c : g) {
      if (c < 0 || c >= class_count_) throw ValidationError("class id out of range in partition");
      if (class_to_group_[c] != -1) throw ValidationError("class appears in two groups");
      class_to_group_[c] = 0;
    }
  }
  if (std::find(class_to_group_.begin(), class_to_group_.end(), -1) != class_to_group_.end())
    throw ValidationError("partition does not cover every class");

  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("partition value is not finite");
    sum += v;
  }
  if (std::abs(sum) > kSumToZeroTolerance)
    throw ValidationError("group values must sum to zero (sum = " + std::to_string(sum) + ")");
  // A single group's value is pinned by the constraint; drop merge round-off.
  if (values_.size() == 1) values_[0] = 0.0;

  std::vector<std::size_t> perm(groups_.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return groups_[a].front() < groups_[b].front(); });
  std::vector<std::vector<int>> g2;
  std::vector<double> v2;
  g2.reserve(perm.size());
  v2.reserve(perm.size());
  for (auto p : perm) {
    g2.push_back(std::move(groups_[p]));
    v2.push_back(values_[p]);
  }
  groups_ = std::move(g2);
  values_ = std::move(v2);
  for (std::size_t gi = 0; gi < groups_.size(); ++gi)
    for (int c : groups_[gi]) class_to_group_[c] = static_cast<int>(gi);
}

PhiVector phi_of(const PartitionState& z) {
  PhiVector phi{std::vector<double>(z.class_count())};
  for (int c = 0; c < z.class_count(); ++c) phi[c] = z.values()[z.group_of(c)];
  return phi;
}

// ---------------------------------------------------------------------------
// Geometry

Geometry::Geometry(LatticeSpec spec, std::shared_ptr<const ConfigCatalog> catalog)
    : spec_(std::move(spec)), catalog_(std::move(catalog)) {
  spec_.validate();
  const auto& shape = tpl().shape();
  check_template_fits(spec_, tpl());
  const int T = tpl_size();
  const int S = spec_.sites();

  active_.assign(S, 1);
  if (spec_.has_mask()) active_ = spec_.active;
  for (int s = 0; s < S; ++s)
    if (active_[s]) active_sites_.push_back(s);

  auto add_clique = [&](int t, int u, int table) {
    for (const auto& off : shape) {
      Node v{off.i + t, off.j + u};
      if (spec_.boundary == Boundary::Torus) {
        v.i = ((v.i % spec_.n) + spec_.n) % spec_.n;
        v.j = ((v.j % spec_.m) + spec_.m) % spec_.m;
      }
      clique_nodes_.push_back(spec_.is_active(v) ? spec_.index(v) : -1);
    }
    clique_table_.push_back(table);
  };

  slot_tables_.push_back(catalog_->mask_table());
  slot_count_ = class_count();
  slot_weights_.resize(slot_count_);
  for (int c = 0; c < slot_count_; ++c) slot_weights_[c] = {{c, 1.0}};

  if (spec_.boundary == Boundary::Torus) {
    for (int t = 0; t < spec_.n; ++t)
      for (int u = 0; u < spec_.m; ++u) add_clique(t, u, 0);
    maximal_count_ = clique_count();
  } else {
    for (int t = 0; t + tpl().height() <= spec_.n; ++t)
      for (int u = 0; u + tpl().width() <= spec_.m; ++u) {
        bool inside = true;
        for (const auto& off : shape) inside = inside && spec_.is_active({off.i + t, off.j + u});
        if (inside) add_clique(t, u, 0);
      }
    maximal_count_ = clique_count();

    const std::uint32_t full = (1u << T) - 1u;
    std::map<std::uint32_t, int> type_of_mask;
    for (const auto& b : border_cliques(spec_, tpl())) {
      auto [it, fresh] = type_of_mask.try_emplace(b.inside_mask, table_count());
      if (fresh) {
        const std::uint32_t inside = b.inside_mask;
        const std::uint32_t outside = full & ~inside;
        const double w = std::ldexp(1.0, -std::popcount(outside));
        std::vector<int> table(std::size_t{1} << T);
        for (std::uint32_t mask = 0; mask <= full; ++mask) table[mask] = slot_count_ + static_cast<int>(mask);
        slot_weights_.resize(slot_count_ + (std::size_t{1} << T));
        for (std::uint32_t s = 0; s <= full; ++s) {
          if (s & outside) continue;
          std::map<int, double> acc;
          // Average over all completions of the outside nodes.
          for (std::uint32_t o = outside;; o = (o - 1) & outside) {
            acc[catalog_->class_of_mask(s | o)] += w;
            if (o == 0) break;
          }
          slot_weights_[slot_count_ + s].assign(acc.begin(), acc.end());
        }
        slot_tables_.push_back(std::move(table));
        slot_count_ += 1 << T;
      }
      add_clique(b.anchor.i, b.anchor.j, it->second);
    }
  }

  // Site -> (clique, bit) references.
  std::vector<std::vector<SiteRef>> refs(S);
  for (int c = 0; c < clique_count(); ++c) {
    auto nodes = clique_nodes(c);
    for (int b = 0; b < T; ++b)
      if (nodes[b] >= 0) refs[nodes[b]].push_back({c, b});
  }
  site_ref_begin_.assign(S + 1, 0);
  for (int s = 0; s < S; ++s) {
    site_ref_begin_[s + 1] = site_ref_begin_[s] + static_cast<int>(refs[s].size());
    site_refs_.insert(site_refs_.end(), refs[s].begin(), refs[s].end());
  }

  // Neighbourhood offsets: every other template node relative to the site,
  // over all positions the site can take inside a clique.
  const auto& nodes = shape.nodes();
  std::vector<Node> offs;
  for (int b = 0; b < T; ++b)
    for (int o = 0; o < T; ++o)
      if (o != b) offs.push_back({nodes[o].i - nodes[b].i, nodes[o].j - nodes[b].j});
  std::sort(offs.begin(), offs.end());
  offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
  nbr_offsets_ = offs;
  nbr_code_index_.assign(static_cast<std::size_t>(T) * T, -1);
  for (int b = 0; b < T; ++b)
    for (int o = 0; o < T; ++o)
      if (o != b) {
        const Node d{nodes[o].i - nodes[b].i, nodes[o].j - nodes[b].j};
        nbr_code_index_[b * T + o] = static_cast<int>(std::lower_bound(offs.begin(), offs.end(), d) - offs.begin());
      }
  nbr_sites_.assign(static_cast<std::size_t>(S) * offs.size(), -1);
  for (int i = 0; i < spec_.n; ++i)
    for (int j = 0; j < spec_.m; ++j)
      for (std::size_t d = 0; d < offs.size(); ++d) {
        Node v{i + offs[d].i, j + offs[d].j};
        if (spec_.boundary == Boundary::Torus) {
          v.i = ((v.i % spec_.n) + spec_.n) % spec_.n;
          v.j = ((v.j % spec_.m) + spec_.m) % spec_.m;
        }
        nbr_sites_[static_cast<std::size_t>(spec_.index({i, j})) * offs.size() + d] =
            spec_.is_active(v) ? spec_.index(v) : -1;
      }

  regular_.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    if (!active_[s]) continue;
    auto r = site_refs(s);
    const bool all_maximal = std::none_of(r.begin(), r.end(), [&](const SiteRef& ref) { return is_border(ref.clique); });
    regular_[s] = all_maximal && static_cast<int>(r.size()) == T;
  }
}

std::uint32_t Geometry::clique_mask(const BinaryImage& x, int c) const {
  std::uint32_t mask = 0;
  auto nodes = clique_nodes(c);
  for (std::size_t b = 0; b < nodes.size(); ++b)
    if (nodes[b] >= 0 && x.data[nodes[b]]) mask |= 1u << b;
  return mask;
}

std::vector<int> Geometry::slot_histogram(const BinaryImage& x) const {
  check_image(x);
  std::vector<int> h(slot_count_, 0);
  for (int c = 0; c < clique_count(); ++c) ++h[clique_slot(x, c)];
  return h;
}

std::vector<double> Geometry::class_histogram_from_slots(std::span<const int> slots) const {
  std::vector<double> h(class_count(), 0.0);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (!slots[s]) continue;
    for (auto [c, w] : slot_weights_[s]) h[c] += slots[s] * w;
  }
  return h;
}

std::vector<double> Geometry::class_histogram(const BinaryImage& x) const {
  auto slots = slot_histogram(x);
  return class_histogram_from_slots(slots);
}

void Geometry::check_image(const BinaryImage& x) const {
  if (x.n != spec_.n || x.m != spec_.m)
    throw ValidationError("image is " + std::to_string(x.n) + "x" + std::to_string(x.m) + " but the lattice is " +
                          std::to_string(spec_.n) + "x" + std::to_string(spec_.m));
  if (x.data.size() != static_cast<std::size_t>(x.n) * x.m) throw ValidationError("image buffer does not match its dimensions");
}

void Geometry::check_covariates(const CovariateField& cov) const {
  if (cov.n != spec_.n || cov.m != spec_.m) throw ValidationError("covariate field does not match the lattice");
  if (cov.y.size() != static_cast<std::size_t>(cov.n) * cov.m * cov.K) throw ValidationError("covariate buffer size mismatch");
}

// ---------------------------------------------------------------------------
// EnergyModel

EnergyModel::EnergyModel(const Geometry& geom, const PhiVector& phi, const CovariateField* cov,
                         std::span<const double> theta)
    : geom_(&geom), phi_(phi) {
  if (phi_.size() != static_cast<std::size_t>(geom.class_count())) throw ValidationError("phi length does not match catalog");
  if (cov && !theta.empty()) {
    geom.check_covariates(*cov);
    if (theta.size() != static_cast<std::size_t>(cov->K)) throw ValidationError("theta length does not match covariates");
    field_.assign(geom.sites(), 0.0);
    for (int s = 0; s < geom.sites(); ++s) {
      double f = 0.0;
      for (int k = 0; k < cov->K; ++k) f += theta[k] * cov->at(s, k);
      field_[s] = f;
    }
  }
  build();
}

EnergyModel::EnergyModel(const Geometry& geom, const PartitionState& z, const CovariateField* cov)
    : EnergyModel(geom, phi_of(z), cov, z.theta()) {
  if (cov && z.theta().empty() && cov->K > 0) throw ValidationError("state carries no theta for the covariates");
}

void EnergyModel::build() {
  const auto& g = *geom_;
  slot_phi_.assign(g.slot_count(), 0.0);
  for (int s = 0; s < g.slot_count(); ++s)
    for (auto [c, w] : g.slot_weights(s)) slot_phi_[s] += w * phi_[c];
  table_phi_.resize(g.table_count());
  for (int t = 0; t < g.table_count(); ++t) {
    auto tab = g.slot_table(t);
    table_phi_[t].resize(tab.size());
    for (std::size_t mask = 0; mask < tab.size(); ++mask) table_phi_[t][mask] = slot_phi_[tab[mask]];
  }

  const std::size_t D = g.neighbour_offsets().size();
  if (D > kMaxTableNeighbours) return;
  const int T = g.tpl_size();
  const auto& phi0 = table_phi_[0];
  cond_log_odds_.assign(std::size_t{1} << D, 0.0);
  for (std::uint32_t code = 0; code < cond_log_odds_.size(); ++code) {
    double delta = 0.0;
    for (int b = 0; b < T; ++b) {
      std::uint32_t mask0 = 0;
      for (int o = 0; o < T; ++o)
        if (o != b && ((code >> g.neighbour_code_index(b, o)) & 1u)) mask0 |= 1u << o;
      delta += phi0[mask0 | (1u << b)] - phi0[mask0];
    }
    cond_log_odds_[code] = delta;
  }
}

double EnergyModel::energy(const BinaryImage& x) const {
  const auto& g = *geom_;
  g.check_image(x);
  double u = 0.0;
  for (int c = 0; c < g.clique_count(); ++c) u += table_phi_[g.clique_table(c)][g.clique_mask(x, c)];
  if (!field_.empty())
    for (int s : g.active_sites())
      if (x.data[s]) u += field_[s];
  return u;
}

double EnergyModel::energy_from_slots(std::span<const int> slots) const {
  double u = 0.0;
  for (std::size_t s = 0; s < slots.size(); ++s)
    if (slots[s]) u += slots[s] * slot_phi_[s];
  return u;
}

std::uint32_t EnergyModel::neighbour_code(const BinaryImage& x, int site) const {
  auto nb = geom_->neighbours(site);
  std::uint32_t code = 0;
  for (std::size_t d = 0; d < nb.size(); ++d)
    if (x.data[nb[d]]) code |= 1u << d;
  return code;
}

double EnergyModel::log_odds_generic(const BinaryImage& x, int site) const {
  const auto& g = *geom_;
  double delta = 0.0;
  for (const auto& ref : g.site_refs(site)) {
    const std::uint32_t bit = 1u << ref.bit;
    const std::uint32_t mask0 = g.clique_mask(x, ref.clique) & ~bit;
    const auto& tab = table_phi_[g.clique_table(ref.clique)];
    delta += tab[mask0 | bit] - tab[mask0];
  }
  return delta + field(site);
}

double EnergyModel::log_odds(const BinaryImage& x, int site) const {
  if (!cond_log_odds_.empty() && geom_->is_regular(site)) return cond_log_odds_[neighbour_code(x, site)] + field(site);
  return log_odds_generic(x, site);
}

double EnergyModel::delta_flip(const BinaryImage& x, int site) const {
  const double d = log_odds(x, site);
  return x.data[site] ? -d : d;
}

double energy(const BinaryImage& x, const PartitionState& z, const Geometry& geom, const CovariateField* cov) {
  return EnergyModel(geom, z, cov).energy(x);
}

double energy_delta_flip(const BinaryImage& x, const PartitionState& z, const Geometry& geom,
                         const CovariateField* cov, int site) {
  geom.check_image(x);
  if (site < 0 || site >= geom.sites()) throw ValidationError("site index out of range");
  return EnergyModel(geom, z, cov).delta_flip(x, site);
}

}  // namespace bmrf
