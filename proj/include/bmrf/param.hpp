#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bmrf/configsets.hpp"
#include "bmrf/lattice.hpp"

namespace bmrf {

// Potential per configuration class (phi^lambda), indexed by class id.
struct PhiVector {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// Interaction per canonical clique shape (beta^lambda), indexed by the same
// class ids; entry 0 is the constant beta^{empty}.
struct BetaVector {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// Counts linking the two parametrisations on an n x m torus.
//
// intersect[a] lists (b, N(a->b)): for a representative placement of class a,
// the number of maximal cliques whose intersection with it falls in class b.
// subsets[a] lists (b, M(a->b)): the number of subsets of the representative
// in class b.
class ConversionTable {
 public:
  int n() const { return n_; }
  int m() const { return m_; }
  int class_count() const { return static_cast<int>(intersect_.size()); }
  const std::vector<std::pair<int, long>>& intersect(int a) const { return intersect_[a]; }
  const std::vector<std::pair<int, long>>& subsets(int a) const { return subsets_[a]; }
  long intersect_count(int a, int b) const;
  long subset_count(int a, int b) const;
  // Classes in an order where every class follows all classes of lower order.
  const std::vector<int>& order() const { return order_; }

 private:
  friend ConversionTable build_conversion_table(const LatticeSpec& spec, const ConfigCatalog& cat);
  int n_ = 0;
  int m_ = 0;
  std::vector<std::vector<std::pair<int, long>>> intersect_;
  std::vector<std::vector<std::pair<int, long>>> subsets_;
  std::vector<int> order_;
};

ConversionTable build_conversion_table(const LatticeSpec& spec, const ConfigCatalog& cat);

PhiVector beta_to_phi(const BetaVector& beta, const ConversionTable& table);
BetaVector phi_to_beta(const PhiVector& phi, const ConversionTable& table);

// Ising model with interaction omega written with 2x2 maximal cliques; the
// free constant is chosen so the three distinct values sum to zero.
PhiVector ising_phi(double omega, const ConfigCatalog& cat);

// Independent Bernoulli(p) sites written with 2x2 maximal cliques; five
// distinct values, summing to zero.
PhiVector independence_phi(double p, const ConfigCatalog& cat);

// Class ids of the grouping an embedding induces (classes with equal value).
std::vector<std::vector<int>> ising_grouping(const ConfigCatalog& cat);

}  // namespace bmrf
