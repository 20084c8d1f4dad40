#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "crackfield/mesh.hpp"

using namespace crackfield;

namespace {

DomainSpec spec2(double K, int n0) {
  DomainSpec s;
  s.dimension = 2;
  s.half_width = K;
  s.initial_cells_per_side = n0;
  return s;
}

DomainSpec spec3(double K, int n0) {
  DomainSpec s = spec2(K, n0);
  s.dimension = 3;
  return s;
}

// Exhaustive 2:1 balance check: every pair of face-adjacent active cells
// differs by at most one level.
void check_balance(const Mesh& mesh) {
  for (const FaceEntry& f : active_faces(mesh)) {
    if (f.boundary()) continue;
    const int dl = mesh.cell(f.cell).level - mesh.cell(f.neighbor).level;
    CHECK(std::abs(dl) <= 1);
    CHECK(f.rel == -dl);
  }
}

// Brute-force face matching: two active cells are face neighbors iff their
// closed boxes overlap on a (d-1)-dimensional set along exactly one axis.
std::set<std::pair<int, int>> brute_force_neighbor_pairs(const Mesh& mesh) {
  std::set<std::pair<int, int>> pairs;
  const auto& act = mesh.active_cells();
  const int d = mesh.dim();
  for (std::size_t a = 0; a < act.size(); ++a) {
    for (std::size_t b = a + 1; b < act.size(); ++b) {
      const Cell& ca = mesh.cell(act[a]);
      const Cell& cb = mesh.cell(act[b]);
      int touching_axis = -1;
      bool overlap = true;
      for (int ax = 0; ax < d; ++ax) {
        const std::int64_t alo = ca.anchor[ax], ahi = alo + ca.isize();
        const std::int64_t blo = cb.anchor[ax], bhi = blo + cb.isize();
        if (ahi < blo || bhi < alo) {
          overlap = false;
          break;
        }
        if (ahi == blo || bhi == alo) {
          if (touching_axis >= 0) {
            overlap = false;  // touch along two axes = corner contact only
            break;
          }
          touching_axis = ax;
        }
      }
      if (overlap && touching_axis >= 0)
        pairs.insert({std::min(act[a], act[b]), std::max(act[a], act[b])});
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("create_mesh produces the level-0 tiling") {
  {
    Mesh m = create_mesh(spec2(1.0, 1));
    CHECK(m.active_cells().size() == 1);
    CHECK(m.cell_edge(m.active_cells()[0]) == doctest::Approx(2.0));
  }
  {
    Mesh m = create_mesh(spec2(20.0, 8));
    CHECK(m.active_cells().size() == 64);
    for (int id : m.active_cells()) CHECK(m.cell_edge(id) == doctest::Approx(5.0));
  }
  {
    Mesh m = create_mesh(spec3(5.0, 2));
    CHECK(m.active_cells().size() == 8);
    for (int id : m.active_cells()) CHECK(m.cell_edge(id) == doctest::Approx(5.0));
  }
}

TEST_CASE("create_mesh rejects invalid specs") {
  DomainSpec s = spec2(0.0, 4);
  CHECK_THROWS(create_mesh(s));
  s = spec2(1.0, 0);
  CHECK_THROWS(create_mesh(s));
  s = spec2(1.0, 4);
  s.dimension = 1;
  CHECK_THROWS(create_mesh(s));
  s.dimension = 4;
  CHECK_THROWS(create_mesh(s));
}

TEST_CASE("refine basics: single subdivision, identity, unknown id") {
  Mesh m = create_mesh(spec2(1.0, 1));
  const std::uint64_t rev0 = m.revision();
  refine(m, {});
  CHECK(m.active_cells().size() == 1);

  refine(m, {m.active_cells()[0]});
  CHECK(m.active_cells().size() == 4);
  CHECK(m.revision() > rev0);
  for (int id : m.active_cells()) CHECK(m.cell_edge(id) == doctest::Approx(1.0));

  CHECK_THROWS(refine(m, {9999}));
}

TEST_CASE("closure refinement restores 2:1 balance") {
  Mesh m = create_mesh(spec2(1.0, 2));
  // Refine the lower-left cell twice in a row; its original neighbors must be
  // forced to level >= 1 by closure.
  ICoord ll{kUnit / 2, kUnit / 2, 0};
  refine(m, {m.find_active_cell(ll)});
  refine(m, {m.find_active_cell(ll)});
  check_balance(m);
  bool saw_closure = false;
  for (int id : m.active_cells())
    if (m.cell(id).level == 1) saw_closure = true;
  CHECK(saw_closure);
  CHECK(m.max_active_level() == 2);
}

TEST_CASE("uniform_refine multiplies active counts by 2^d per sweep") {
  {
    Mesh m = create_mesh(spec2(20.0, 8));
    uniform_refine(m, 0);
    CHECK(m.active_cells().size() == 64);
    uniform_refine(m, 5);
    CHECK(m.active_cells().size() == 65536);
    CHECK(m.min_active_edge() == doctest::Approx(40.0 / 256.0));
  }
  {
    Mesh m = create_mesh(spec3(5.0, 2));
    uniform_refine(m, 1);
    CHECK(m.active_cells().size() == 64);
  }
}

TEST_CASE("active_faces counts on tiny meshes") {
  {
    Mesh m = create_mesh(spec2(1.0, 1));
    int interior = 0, boundary = 0;
    for (const FaceEntry& f : active_faces(m)) (f.boundary() ? boundary : interior)++;
    CHECK(interior == 0);
    CHECK(boundary == 4);
  }
  {
    // 2x1 strip: a 2x2 grid restricted is not available, so build 2 cells per
    // side and check a single shared face between two specific neighbors via
    // the brute-force matcher on the n0=2 mesh instead.
    Mesh m = create_mesh(spec3(1.0, 1));
    int interior = 0, boundary = 0;
    for (const FaceEntry& f : active_faces(m)) (f.boundary() ? boundary : interior)++;
    CHECK(interior == 0);
    CHECK(boundary == 6);
  }
}

TEST_CASE("active_faces matches brute-force geometric neighbor pairs") {
  std::mt19937 rng(2024);
  for (int d = 2; d <= 3; ++d) {
    Mesh m = d == 2 ? create_mesh(spec2(1.0, 2)) : create_mesh(spec3(1.0, 2));
    for (int round = 0; round < (d == 2 ? 4 : 2); ++round) {
      auto act = m.active_cells();
      std::vector<int> marked;
      for (int id : act)
        if (rng() % 3 == 0) marked.push_back(id);
      if (marked.empty()) marked.push_back(act[0]);
      refine(m, marked);
      check_balance(m);

      std::set<std::pair<int, int>> reported;
      std::map<std::pair<int, int>, int> multiplicity;
      for (const FaceEntry& f : active_faces(m)) {
        if (f.boundary()) continue;
        auto key = std::make_pair(std::min(f.cell, f.neighbor), std::max(f.cell, f.neighbor));
        reported.insert(key);
        multiplicity[key]++;
        // Fine side reports coarse-fine faces.
        if (f.rel == -1) CHECK(m.cell(f.cell).level == m.cell(f.neighbor).level + 1);
      }
      // Each neighboring pair shares exactly one geometric face, reported once.
      for (const auto& [key, count] : multiplicity) CHECK(count == 1);
      CHECK(reported == brute_force_neighbor_pairs(m));
    }
  }
}

TEST_CASE("tiling is preserved by arbitrary refine sequences") {
  std::mt19937 rng(99);
  for (int d = 2; d <= 3; ++d) {
    Mesh m = d == 2 ? create_mesh(spec2(7.5, 3)) : create_mesh(spec3(2.5, 2));
    const double measure = std::pow(2.0 * m.spec().half_width, d);
    for (int round = 0; round < (d == 2 ? 5 : 3); ++round) {
      auto act = m.active_cells();
      std::vector<int> marked;
      for (int id : act)
        if (rng() % 4 == 0) marked.push_back(id);
      refine(m, marked);
      CHECK(total_active_measure(m) == doctest::Approx(measure).epsilon(1e-12));
      check_balance(m);
    }
    // Monotone resolution across the sequence.
    CHECK(m.min_active_edge() <= m.level_edge(0));
  }
}

TEST_CASE("refinement is deterministic for identical mark sequences") {
  auto run = [] {
    Mesh m = create_mesh(spec2(1.0, 2));
    refine(m, {m.active_cells()[0], m.active_cells()[3]});
    refine(m, {m.active_cells()[2]});
    return m.active_cells();
  };
  CHECK(run() == run());
}

TEST_CASE("integer/physical coordinate round trip is exact on vertices") {
  Mesh m = create_mesh(spec2(20.0, 8));
  uniform_refine(m, 3);
  for (int id : m.active_cells()) {
    for (int k = 0; k < 4; ++k) {
      const ICoord c = m.corner(id, k);
      for (int ax = 0; ax < 2; ++ax) CHECK(m.to_integer(m.to_physical(c[ax])) == c[ax]);
    }
  }
  CHECK(m.to_physical(0) == doctest::Approx(-20.0));
  CHECK(m.to_physical(m.extent()) == doctest::Approx(20.0));
}

TEST_CASE("point location finds containing cells and handles exterior points") {
  Mesh m = create_mesh(spec2(1.0, 2));
  refine(m, {m.find_active_cell(ICoord{kUnit / 2, kUnit / 2, 0})});

  // Interior point of a cell: exactly one containing cell.
  Eigen::Vector3d x(0.6, 0.6, 0.0);
  const int id = m.find_active_cell(x);
  REQUIRE(id >= 0);
  CHECK(m.cell(id).active);

  // A level-0/level-1 corner point touches several cells; find_active_cell
  // returns the smallest id among them.
  ICoord center{kUnit, kUnit, 0};
  auto at = m.active_cells_at(center);
  CHECK(at.size() >= 3);
  CHECK(m.find_active_cell(center) == *std::min_element(at.begin(), at.end()));

  ICoord outside{-1, 0, 0};
  CHECK_FALSE(m.contains(outside));
  CHECK(m.active_cells_at(outside).empty());
  CHECK(m.find_active_cell(outside) == -1);
}
