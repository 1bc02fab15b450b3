#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "bmrf/error.hpp"
#include "bmrf/likelihood.hpp"
#include "bmrf/param.hpp"

using namespace bmrf;

namespace {

BetaVector random_beta(int K, Rng& rng) {
  BetaVector b;
  b.values.resize(K);
  for (double& v : b.values) v = normal(rng, 1.0);
  return b;
}

}  // namespace

TEST(ConversionTable, Examples) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  const auto table = build_conversion_table(LatticeSpec(5, 6, Boundary::Torus), cat);
  EXPECT_EQ(table.intersect_count(0, 0), 30);
  EXPECT_EQ(table.intersect_count(1, 1), 4);
  EXPECT_EQ(table.intersect_count(1, 0), 26);
  EXPECT_EQ(table.intersect_count(10, 10), 1);
  for (int mu = 0; mu < cat.class_count(); ++mu) EXPECT_EQ(table.subset_count(10, mu), cat.at(mu).multiplicity());
}

TEST(ConversionTable, RowInvariants) {
  for (const char* t : {"1x2", "2x2", "2x3"}) {
    const auto cat = build_catalog(parse_template(t));
    const auto table = build_conversion_table(LatticeSpec(4, 5, Boundary::Torus), cat);
    for (int a = 0; a < cat.class_count(); ++a) {
      long total = 0;
      for (auto [b, c] : table.intersect(a)) total += c;
      EXPECT_EQ(total, 20);
      EXPECT_GT(table.intersect_count(a, a), 0);
    }
  }
}

TEST(ConversionTable, FreeBoundaryRejected) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  EXPECT_THROW(build_conversion_table(LatticeSpec(4, 4, Boundary::Free), cat), ValidationError);
}

TEST(Conversion, ZerosMapToZeros) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  const auto table = build_conversion_table(LatticeSpec(4, 4, Boundary::Torus), cat);
  for (double v : beta_to_phi(BetaVector{std::vector<double>(11, 0.0)}, table).values) EXPECT_EQ(v, 0.0);
  for (double v : phi_to_beta(PhiVector{std::vector<double>(11, 0.0)}, table).values) EXPECT_EQ(v, 0.0);
}

TEST(Conversion, ConstantPhiOnlyMovesEmptyBeta) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  const auto table = build_conversion_table(LatticeSpec(4, 6, Boundary::Torus), cat);
  const auto beta = phi_to_beta(PhiVector{std::vector<double>(11, 1.75)}, table);
  EXPECT_NEAR(beta[0], 24 * 1.75, 1e-12);
  for (int c = 1; c < 11; ++c) EXPECT_NEAR(beta[c], 0.0, 1e-12);
}

TEST(Conversion, RoundTrip) {
  Rng rng = stream(11, {2});
  for (const char* t : {"1x2", "2x2"}) {
    const auto cat = build_catalog(parse_template(t));
    for (int n = 4; n <= 8; ++n) {
      const auto table = build_conversion_table(LatticeSpec(n, n, Boundary::Torus), cat);
      for (int trial = 0; trial < 40; ++trial) {
        const auto beta = random_beta(cat.class_count(), rng);
        const auto back = phi_to_beta(beta_to_phi(beta, table), table);
        const auto phi = fixture::random_phi(cat.class_count(), rng);
        const auto phi_back = beta_to_phi(phi_to_beta(phi, table), table);
        for (int c = 0; c < cat.class_count(); ++c) {
          EXPECT_NEAR(back[c], beta[c], 1e-10);
          EXPECT_NEAR(phi_back[c], phi[c], 1e-10);
        }
      }
    }
  }
}

// Both energy forms are expanded over the lattice independently of the
// library's geometry.
TEST(Conversion, EnergyFormsAgree) {
  Rng rng = stream(11, {3});
  for (const char* t : {"1x2", "2x2", "2x3"}) {
    const auto cat = build_catalog(parse_template(t));
    for (auto [n, m] : {std::pair{3, 4}, std::pair{4, 4}, std::pair{5, 3}}) {
      const auto table = build_conversion_table(LatticeSpec(n, m, Boundary::Torus), cat);
      for (int trial = 0; trial < 5; ++trial) {
        const auto phi = fixture::random_phi(cat.class_count(), rng);
        const auto beta = phi_to_beta(phi, table);
        const auto x = fixture::random_image(n, m, rng);
        EXPECT_NEAR(oracle::energy_phi(x, cat, phi.values), oracle::energy_beta(x, cat, beta.values), 1e-9)
            << t << " " << n << "x" << m;
      }
    }
  }
}

TEST(Embedding, IsingValuesAndBeta) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  const auto zero = ising_phi(0.0, cat);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);

  const auto phi = ising_phi(0.4, cat);
  EXPECT_NEAR(phi[0], 0.4, 1e-15);
  EXPECT_NEAR(phi[10], 0.4, 1e-15);
  EXPECT_NEAR(phi[4], -0.4, 1e-15);
  EXPECT_NEAR(phi[5], -0.4, 1e-15);
  for (int c : {1, 2, 3, 6, 7, 8, 9}) EXPECT_NEAR(phi[c], 0.0, 1e-15);

  const auto table = build_conversion_table(LatticeSpec(6, 6, Boundary::Torus), cat);
  const auto beta = phi_to_beta(phi, table);
  EXPECT_NEAR(beta[1], -4 * 0.4, 1e-12);
  EXPECT_NEAR(beta[2], 2 * 0.4, 1e-12);
  EXPECT_NEAR(beta[3], 2 * 0.4, 1e-12);
  for (int c = 4; c < 11; ++c) EXPECT_NEAR(beta[c], 0.0, 1e-12);

  EXPECT_EQ(ising_grouping(cat), (std::vector<std::vector<int>>{{0, 10}, {1, 2, 3, 6, 7, 8, 9}, {4, 5}}));
  EXPECT_THROW(ising_phi(0.4, build_catalog(TemplateClique::block(1, 2))), ValidationError);
}

TEST(Embedding, IsingDistribution) {
  const auto geom = fixture::geometry(3, 4, "2x2");
  const EnergyModel em(*geom, ising_phi(0.4, geom->catalog()));
  const auto p = oracle::exact_distribution(3, 4, [&](const BinaryImage& x) { return em.energy(x); });
  const auto q = oracle::exact_distribution(3, 4, [](const BinaryImage& x) { return oracle::ising_energy(x, 0.4); });
  EXPECT_LT(oracle::total_variation(p, q), 1e-12);
}

TEST(Embedding, IndependenceValues) {
  const auto cat = build_catalog(TemplateClique::block(2, 2));
  for (double v : independence_phi(0.5, cat).values) EXPECT_NEAR(v, 0.0, 1e-15);
  const double a = std::log(0.3 / 0.7);
  const auto phi = independence_phi(0.3, cat);
  for (int c = 0; c < 11; ++c) EXPECT_NEAR(phi[c], a * cat.at(c).order() / 4.0 - a / 2.0, 1e-14);
  EXPECT_THROW(independence_phi(0.0, cat), ValidationError);
  EXPECT_THROW(independence_phi(1.0, cat), ValidationError);
}

TEST(Embedding, IndependenceMarginals) {
  const auto geom = fixture::geometry(3, 3, "2x2");
  const EnergyModel em(*geom, independence_phi(0.3, geom->catalog()));
  const auto p = oracle::exact_distribution(3, 3, [&](const BinaryImage& x) { return em.energy(x); });
  double worst = 0.0;
  for (std::uint64_t s = 0; s < p.size(); ++s) {
    const int ones = std::popcount(s);
    worst = std::max(worst, std::abs(p[s] - std::pow(0.3, ones) * std::pow(0.7, 9 - ones)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Stationarity, TranslatedSetsAreEquiprobable) {
  Rng rng = stream(11, {4});
  const auto geom = fixture::geometry(4, 4, "2x2");
  const EnergyModel em(*geom, fixture::random_phi(11, rng, 0.5));
  const auto p = oracle::exact_distribution(4, 4, [&](const BinaryImage& x) { return em.energy(x); });
  double worst = 0.0;
  for (std::uint64_t s = 0; s < p.size(); ++s)
    for (int t = 0; t < 4; ++t)
      for (int u = 0; u < 4; ++u) {
        std::uint64_t moved = 0;
        for (int q = 0; q < 16; ++q)
          if (s >> q & 1u) moved |= std::uint64_t{1} << (((q / 4 + t) % 4) * 4 + (q % 4 + u) % 4);
        worst = std::max(worst, std::abs(p[s] - p[moved]));
      }
  EXPECT_LT(worst, 1e-12);
}

TEST(Stationarity, ConstantShiftLeavesDistribution) {
  Rng rng = stream(11, {5});
  const auto geom = fixture::geometry(3, 3, "2x2");
  auto phi = fixture::random_phi(11, rng);
  const EnergyModel a(*geom, phi);
  for (double& v : phi.values) v += 2.5;
  const EnergyModel b(*geom, phi);
  const auto pa = oracle::exact_distribution(3, 3, [&](const BinaryImage& x) { return a.energy(x); });
  const auto pb = oracle::exact_distribution(3, 3, [&](const BinaryImage& x) { return b.energy(x); });
  EXPECT_LT(oracle::total_variation(pa, pb), 1e-12);
  const auto table = build_conversion_table(LatticeSpec(4, 4, Boundary::Torus), geom->catalog());
  phi.values.assign(11, 0.0);
  auto shifted = phi;
  for (double& v : shifted.values) v += 2.5;
  const auto b0 = phi_to_beta(phi, table);
  const auto b1 = phi_to_beta(shifted, table);
  EXPECT_NEAR(b1[0] - b0[0], 16 * 2.5, 1e-12);
  for (int c = 1; c < 11; ++c) EXPECT_NEAR(b1[c], b0[c], 1e-12);
}
