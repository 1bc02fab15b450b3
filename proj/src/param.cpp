#include "bmrf/param.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bmrf/error.hpp"

namespace bmrf {

namespace {

std::vector<std::pair<int, long>> to_sparse(const std::map<int, long>& counts) {
  return {counts.begin(), counts.end()};
}

long lookup(const std::vector<std::pair<int, long>>& row, int b) {
  auto it = std::lower_bound(row.begin(), row.end(), std::pair<int, long>{b, 0},
                             [](const auto& x, const auto& y) { return x.first < y.first; });
  return (it != row.end() && it->first == b) ? it->second : 0;
}

void require_2x2(const ConfigCatalog& cat, const char* what) {
  if (!(cat.tpl() == TemplateClique::block(2, 2)))
    throw ValidationError(std::string(what) + " is defined for the 2x2 block template only");
}

}  // namespace

long ConversionTable::intersect_count(int a, int b) const { return lookup(intersect_.at(a), b); }
long ConversionTable::subset_count(int a, int b) const { return lookup(subsets_.at(a), b); }

ConversionTable build_conversion_table(const LatticeSpec& spec, const ConfigCatalog& cat) {
  if (spec.boundary != Boundary::Torus) throw ValidationError("conversion tables are defined on the torus");
  check_template_fits(spec, cat.tpl());
  const auto& tpl = cat.tpl();
  const int K = cat.class_count();

  ConversionTable t;
  t.n_ = spec.n;
  t.m_ = spec.m;
  t.intersect_.resize(K);
  t.subsets_.resize(K);

  for (int a = 0; a < K; ++a) {
    // members[0] is a subset of the template at the origin, so its subsets
    // are classifiable through the mask table.
    const std::uint32_t rep_mask = cat.at(a).member_masks.front();
    const NodeSet placed = translate(cat.at(a).members.front(), 0, 0, spec);

    std::map<int, long> inter;
    for (int ti = 0; ti < spec.n; ++ti)
      for (int tu = 0; tu < spec.m; ++tu) {
        std::uint32_t mask = 0;
        int bit = 0;
        for (const auto& off : tpl.shape()) {
          const Node v{(off.i + ti) % spec.n, (off.j + tu) % spec.m};
          if (placed.contains(v)) mask |= 1u << bit;
          ++bit;
        }
        ++inter[cat.class_of_mask(mask)];
      }
    t.intersect_[a] = to_sparse(inter);

    std::map<int, long> subs;
    // Enumerate sub-masks of rep_mask.
    for (std::uint32_t s = rep_mask;; s = (s - 1) & rep_mask) {
      ++subs[cat.class_of_mask(s)];
      if (s == 0) break;
    }
    t.subsets_[a] = to_sparse(subs);
  }

  t.order_.resize(K);
  std::iota(t.order_.begin(), t.order_.end(), 0);
  std::stable_sort(t.order_.begin(), t.order_.end(),
                   [&](int x, int y) { return cat.at(x).order() < cat.at(y).order(); });
  return t;
}

PhiVector beta_to_phi(const BetaVector& beta, const ConversionTable& table) {
  const int K = table.class_count();
  if (beta.size() != static_cast<std::size_t>(K)) throw ValidationError("beta vector length does not match catalog");
  PhiVector phi{std::vector<double>(K, 0.0)};
  for (int a : table.order()) {
    double acc = 0.0;
    for (auto [b, cnt] : table.subsets(a)) acc += static_cast<double>(cnt) * beta[b];
    long self = 0;
    for (auto [b, cnt] : table.intersect(a)) {
      if (b == a)
        self = cnt;
      else
        acc -= static_cast<double>(cnt) * phi[b];
    }
    phi[a] = acc / static_cast<double>(self);
  }
  return phi;
}

BetaVector phi_to_beta(const PhiVector& phi, const ConversionTable& table) {
  const int K = table.class_count();
  if (phi.size() != static_cast<std::size_t>(K)) throw ValidationError("phi vector length does not match catalog");
  BetaVector beta{std::vector<double>(K, 0.0)};
  for (int a : table.order()) {
    double acc = 0.0;
    for (auto [b, cnt] : table.intersect(a)) acc += static_cast<double>(cnt) * phi[b];
    for (auto [b, cnt] : table.subsets(a))
      if (b != a) acc -= static_cast<double>(cnt) * beta[b];
    beta[a] = acc;
  }
  return beta;
}

PhiVector ising_phi(double omega, const ConfigCatalog& cat) {
  require_2x2(cat, "ising_phi");
  // Bits of the 2x2 block: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1). A clique
  // configuration carries -omega/2 per disagreeing edge, since every
  // lattice edge lies in two cliques; eta = omega centres the values.
  static constexpr std::pair<int, int> edges[] = {{0, 1}, {2, 3}, {0, 2}, {1, 3}};
  PhiVector phi{std::vector<double>(cat.class_count())};
  for (const auto& c : cat.classes()) {
    const std::uint32_t mask = c.member_masks.front();
    int disagree = 0;
    for (auto [a, b] : edges) disagree += ((mask >> a) & 1u) != ((mask >> b) & 1u);
    phi[c.id] = -omega * disagree / 2.0 + omega;
  }
  return phi;
}

PhiVector independence_phi(double p, const ConfigCatalog& cat) {
  require_2x2(cat, "independence_phi");
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("independence probability must lie in (0,1)");
  const double alpha = std::log(p / (1.0 - p));
  PhiVector phi{std::vector<double>(cat.class_count())};
  for (const auto& c : cat.classes()) phi[c.id] = alpha * c.order() / 4.0 - alpha / 2.0;
  return phi;
}

std::vector<std::vector<int>> ising_grouping(const ConfigCatalog& cat) {
  const PhiVector phi = ising_phi(1.0, cat);
  std::map<double, std::vector<int>> by_value;
  for (int c = 0; c < cat.class_count(); ++c) by_value[phi[c]].push_back(c);
  std::vector<std::vector<int>> out;
  for (auto& [_, g] : by_value) out.push_back(std::move(g));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bmrf
