#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "bmrf/configsets.hpp"
#include "bmrf/model.hpp"
#include "bmrf/rng.hpp"

namespace fixture {

inline std::shared_ptr<const bmrf::ConfigCatalog> catalog(const std::string& tpl) {
  return std::make_shared<const bmrf::ConfigCatalog>(bmrf::build_catalog(bmrf::parse_template(tpl)));
}

inline std::shared_ptr<const bmrf::Geometry> geometry(int n, int m, const std::string& tpl,
                                                      bmrf::Boundary b = bmrf::Boundary::Torus) {
  return std::make_shared<const bmrf::Geometry>(bmrf::LatticeSpec(n, m, b), catalog(tpl));
}

inline bmrf::BinaryImage random_image(int n, int m, bmrf::Rng& rng, bmrf::Boundary b = bmrf::Boundary::Torus) {
  bmrf::BinaryImage x(n, m, b);
  for (auto& v : x.data) v = static_cast<std::uint8_t>(rng() & 1u);
  return x;
}

// Random partition of the classes into at most max_groups groups with
// centred N(0, sd^2) values.
inline bmrf::PartitionState random_state(int class_count, bmrf::Rng& rng, int max_groups, double sd = 1.0,
                                         int theta_dim = 0) {
  const int r = 1 + static_cast<int>(bmrf::uniform_index(rng, static_cast<std::size_t>(std::min(max_groups, class_count))));
  std::vector<std::vector<int>> groups(r);
  // First r classes seed the groups so none is empty.
  std::vector<int> perm(class_count);
  for (int c = 0; c < class_count; ++c) perm[c] = c;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int c = 0; c < class_count; ++c)
    groups[c < r ? c : bmrf::uniform_index(rng, static_cast<std::size_t>(r))].push_back(perm[c]);
  std::vector<double> values(r);
  double mean = 0.0;
  for (double& v : values) mean += (v = bmrf::normal(rng, sd));
  mean /= r;
  for (double& v : values) v -= mean;
  std::vector<double> theta(theta_dim);
  for (double& t : theta) t = bmrf::normal(rng, 0.5);
  return bmrf::PartitionState(class_count, groups, values, theta);
}

inline bmrf::PhiVector random_phi(int class_count, bmrf::Rng& rng, double sd = 1.0) {
  bmrf::PhiVector phi;
  phi.values.resize(class_count);
  for (double& v : phi.values) v = bmrf::normal(rng, sd);
  return phi;
}

}  // namespace fixture
