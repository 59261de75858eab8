#include <doctest.h>

#include "helpers.hpp"
#include "rdme/errors.hpp"

using namespace rdme;
using namespace testing_helpers;

TEST_SUITE("model") {
  TEST_CASE("species set validation") {
    CHECK_THROWS_AS(SpeciesSet({}, {}), InvalidArgument);
    CHECK_THROWS_AS(SpeciesSet({"A", "A"}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(SpeciesSet({"A"}, {-1.0}), InvalidArgument);
    const SpeciesSet sp({"A", "B"}, {1.0, 0.0});
    CHECK(sp.index_of("B") == 1);
    CHECK_FALSE(sp.index_of("C").has_value());
  }

  TEST_CASE("single voxel Cartesian mesh has no edges") {
    const SpeciesSet sp({"A"}, {3.0});
    const int dims[] = {1};
    const auto mesh = build_cartesian_mesh(dims, 1.0, sp);
    CHECK(mesh.voxel_count() == 1);
    CHECK(mesh.edges().empty());
  }

  TEST_CASE("1D mesh rates are gamma / h^2") {
    const SpeciesSet sp({"A"}, {2.0});
    const int dims[] = {3};
    const auto mesh = build_cartesian_mesh(dims, 0.5, sp);
    CHECK(mesh.out_edges(0, 0).size() == 1);
    CHECK(mesh.out_edges(1, 0).size() == 2);
    for (const auto& e : mesh.edges()) CHECK(e.rate == 8.0);
    CHECK(mesh.volume(1) == doctest::Approx(0.5));
    CHECK(mesh.hop_diameter() == 2);
  }

  TEST_CASE("2x2 grid has four connections") {
    const SpeciesSet sp({"A"}, {1.0});
    const int dims[] = {2, 2};
    const auto mesh = build_cartesian_mesh(dims, 1.0, sp);
    CHECK(mesh.voxel_count() == 4);
    CHECK(mesh.connection_count() == 4);
    for (const auto& e : mesh.edges()) CHECK(e.rate == 1.0);
  }

  TEST_CASE("immobile species get no edges") {
    const SpeciesSet sp({"A", "B"}, {1.0, 0.0});
    const int dims[] = {4};
    const auto mesh = build_cartesian_mesh(dims, 1.0, sp);
    CHECK(mesh.species_mobile(0));
    CHECK_FALSE(mesh.species_mobile(1));
    CHECK(mesh.out_rate(2, 1) == 0.0);
  }

  TEST_CASE("boundary voxels of a 3D box") {
    const int dims[] = {4, 3, 3};
    const auto b = cartesian_boundary_voxels(dims);
    CHECK(b.size() == 36 - 2);
  }

  TEST_CASE("mesh validation") {
    CHECK_THROWS_AS(MeshGraph({1.0}, {{0, 0, 0, 1.0}}, 1), InvalidArgument);
    CHECK_THROWS_AS(MeshGraph({1.0, 1.0}, {{0, 2, 0, 1.0}}, 1), InvalidArgument);
    CHECK_THROWS_AS(MeshGraph({1.0, -1.0}, {}, 1), InvalidArgument);
    CHECK_THROWS_AS(MeshGraph({1.0, 1.0}, {{0, 1, 0, 1.0}, {0, 1, 0, 2.0}}, 1), InvalidArgument);
  }

  TEST_CASE("in and out adjacency agree") {
    const auto mesh = chain(4, 2, 1.5);
    for (int i = 0; i < 4; ++i)
      for (int s = 0; s < 2; ++s)
        for (int k : mesh.in_edges(i, s)) {
          CHECK(mesh.edges()[k].to == i);
          CHECK(mesh.edges()[k].species == s);
        }
    CHECK(mesh.out_rate(1, 0) == 3.0);
  }

  TEST_CASE("restricted removes edges leaving the subdomain") {
    const auto mesh = chain(4, 2, 1.0).restricted(1, {0, 1});
    CHECK(mesh.out_edges(1, 1).size() == 1);
    CHECK(mesh.out_edges(2, 1).empty());
    CHECK(mesh.out_edges(2, 0).size() == 2);
  }

  TEST_CASE("apply_reaction") {
    const auto ab = mass_action("AtoB", 1.0, {{0, 1}}, {-1, 1});
    StateMatrix x(1, 2, {2, 0});
    apply_reaction(x, 0, ab);
    CHECK(x == StateMatrix(1, 2, {1, 1}));

    StateMatrix y(1, 2, {0, 5});
    CHECK_THROWS_AS(apply_reaction(y, 0, ab), NegativePopulation);
    CHECK(y == StateMatrix(1, 2, {0, 5}));  // unchanged

    const auto birth = mass_action("birth", 1.0, {}, {1});
    StateMatrix z(2, 1, {3, 1});
    apply_reaction(z, 1, birth);
    CHECK(z == StateMatrix(2, 1, {3, 2}));
  }

  TEST_CASE("apply_diffusion_jump") {
    StateMatrix x(2, 1, {4, 0});
    apply_diffusion_jump(x, {0, 1, 0, 1.0});
    CHECK(x == StateMatrix(2, 1, {3, 1}));
    CHECK(x.species_total(0) == 4);

    StateMatrix y(2, 1, {0, 2});
    CHECK_THROWS_AS(apply_diffusion_jump(y, {0, 1, 0, 1.0}), NegativePopulation);
    CHECK(y == StateMatrix(2, 1, {0, 2}));
  }

  TEST_CASE("model system validation and rate resolution") {
    const auto mesh = chain(2, 2, 1.0, {2.0, 0.5});
    const auto bi = mass_action("AB", 3.0, {{0, 1}, {1, 1}}, {-1, -1});
    const auto m = make_model({"A", "B"}, {bi, mass_action("b", 2.0, {}, {1, 0}, {1})}, mesh, {1, 1, 1, 1});
    CHECK(m.rate(0, 0) == doctest::Approx(1.5));
    CHECK(m.rate(1, 0) == doctest::Approx(6.0));
    // Order-0 rates are not volume scaled; inactive voxels are zero.
    CHECK(m.rate(0, 1) == 0.0);
    CHECK(m.rate(1, 1) == 2.0);

    CHECK_THROWS_AS(make_model({"A"}, {mass_action("x", -1.0, {{0, 1}}, {-1})}, chain(1, 1, 1.0), {0}),
                    InvalidArgument);
    CHECK_THROWS_AS(make_model({"A"}, {mass_action("x", 1.0, {{0, 1}}, {-2})}, chain(1, 1, 1.0), {0}),
                    InvalidArgument);
    CHECK_THROWS_AS(make_model({"A"}, {mass_action("x", 1.0, {{0, 3}}, {-1})}, chain(1, 1, 1.0), {0}),
                    InvalidArgument);
    CHECK_THROWS_AS(make_model({"A"}, {}, chain(1, 1, 1.0), {-1}), InvalidArgument);
  }

  TEST_CASE("sample times cover [0, end]") {
    const auto m = make_model({"A"}, {}, chain(1, 1, 1.0), {0}, 1.0, 0.25);
    const auto t = m.sample_times();
    REQUIRE(t.size() == 5);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 1.0);
  }
}
