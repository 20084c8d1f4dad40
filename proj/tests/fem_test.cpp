#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crackfield/fem.hpp"
#include "crackfield/mesh.hpp"

using namespace crackfield;

namespace {

DomainSpec make_spec(int d, double K, int n0) {
  DomainSpec s;
  s.dimension = d;
  s.half_width = K;
  s.initial_cells_per_side = n0;
  return s;
}

// Mesh with one hanging vertex per coarse-fine face: refine one corner cell.
Mesh hanging_mesh(int d) {
  Mesh m = create_mesh(make_spec(d, 1.0, 2));
  refine(m, {m.find_active_cell(Eigen::Vector3d(-0.5, -0.5, d == 3 ? -0.5 : 0.0))});
  return m;
}

}  // namespace

TEST_CASE("quadrature weights sum to 1 and integrate degree-3 monomials exactly") {
  for (int d = 1; d <= 3; ++d) {
    Quadrature q = Quadrature::cell_rule(d);
    CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Exact integral of x^a y^b z^c over [0,1]^d is prod 1/(e+1).
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= (d >= 2 ? 3 : 0); ++b)
        for (int c = 0; c <= (d >= 3 ? 3 : 0); ++c) {
          double num = 0.0;
          for (int k = 0; k < q.points.rows(); ++k) {
            double v = std::pow(q.points(k, 0), a);
            if (d >= 2) v *= std::pow(q.points(k, 1), b);
            if (d >= 3) v *= std::pow(q.points(k, 2), c);
            num += q.weights[k] * v;
          }
          const double exact = 1.0 / ((a + 1.0) * (d >= 2 ? b + 1.0 : 1.0) * (d >= 3 ? c + 1.0 : 1.0));
          CHECK(num == doctest::Approx(exact).epsilon(1e-13));
        }
  }
  Quadrature line = Quadrature::line_rule();
  CHECK(line.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  double x3 = 0.0;
  for (int k = 0; k < line.points.rows(); ++k) x3 += line.weights[k] * std::pow(line.points(k, 0), 3);
  CHECK(x3 == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("q1 shapes form a partition of unity with vanishing gradient sum") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vector vals;
  Matrix grads;
  for (int d = 2; d <= 3; ++d) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::Vector3d xi(U(rng), U(rng), d == 3 ? U(rng) : 0.0);
      q1_shape(d, xi, vals, grads);
      REQUIRE(vals.size() == (1 << d));
      CHECK(vals.sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(vals.minCoeff() >= -1e-15);
      for (int ax = 0; ax < d; ++ax) CHECK(grads.col(ax).sum() == doctest::Approx(0.0).epsilon(1e-13));
    }
    // Kronecker property at the corners.
    for (int k = 0; k < (1 << d); ++k) {
      Eigen::Vector3d xi(double((k >> 0) & 1), double((k >> 1) & 1), d == 3 ? double((k >> 2) & 1) : 0.0);
      q1_shape(d, xi, vals, grads);
      for (int j = 0; j < (1 << d); ++j)
        CHECK(vals[j] == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("dof counts match the global-refinement table") {
  {
    Mesh m = create_mesh(make_spec(2, 1.0, 1));
    DofMap map = build_dof_map(m);
    CHECK(map.n_vertices() == 4);
    CHECK(map.n_total() == 12);
  }
  {
    Mesh m = create_mesh(make_spec(2, 20.0, 8));
    uniform_refine(m, 5);
    DofMap map = build_dof_map(m);
    CHECK(map.n_vertices() == 257 * 257);
    CHECK(map.n_total() == 198147);
  }
  {
    Mesh m = create_mesh(make_spec(2, 20.0, 8));
    uniform_refine(m, 6);
    CHECK(build_dof_map(m).n_total() == 789507);
  }
}

TEST_CASE("dof layout is blocked u-then-phi with consistent inverse maps") {
  Mesh m = hanging_mesh(2);
  DofMap map = build_dof_map(m);
  CHECK(map.n_u() == 2 * map.n_vertices());
  CHECK(map.n_phi() == map.n_vertices());
  for (int v = 0; v < map.n_vertices(); ++v) {
    for (int c = 0; c < 2; ++c) {
      const int dof = map.u_dof(v, c);
      CHECK(dof < map.n_u());
      CHECK(map.dof_vertex(dof) == v);
      CHECK(map.dof_component(dof) == c);
    }
    const int pdof = map.phi_dof(v);
    CHECK(pdof >= map.n_u());
    CHECK(map.dof_vertex(pdof) == v);
    CHECK(map.dof_component(pdof) == 2);
    CHECK(map.vertex_index(map.vertex_coord(v)) == v);
  }
}

TEST_CASE("boundary constraints fix exactly the boundary displacement dofs") {
  Mesh m = create_mesh(make_spec(2, 1.0, 4));  // uniform: no hanging vertices
  DofMap map = build_dof_map(m);
  ConstraintSet cs = build_constraints(m, map, DirichletSpec{});
  int boundary_vertices = 0;
  for (int v = 0; v < map.n_vertices(); ++v)
    if (map.on_boundary(m, v)) ++boundary_vertices;
  CHECK(boundary_vertices == 16);  // 5x5 vertex grid perimeter
  CHECK(cs.n_constraints() == 2 * boundary_vertices);
  for (int v = 0; v < map.n_vertices(); ++v) {
    const bool b = map.on_boundary(m, v);
    CHECK(cs.is_constrained(map.u_dof(v, 0)) == b);
    CHECK(cs.is_constrained(map.u_dof(v, 1)) == b);
    CHECK_FALSE(cs.is_constrained(map.phi_dof(v)));
    if (b) {
      CHECK(cs.line(map.u_dof(v, 0)).entries.empty());
      CHECK(cs.line(map.u_dof(v, 0)).inhomogeneity == 0.0);
    }
  }
}

TEST_CASE("hanging vertices get midpoint constraints and conform across faces") {
  for (int d = 2; d <= 3; ++d) {
    Mesh m = hanging_mesh(d);
    DofMap map = build_dof_map(m);
    // Pure hanging constraints (no boundary clamp): every line is the convex
    // combination of its parent-face vertices. With the clamp on, boundary
    // masters would be substituted out and the weight sums would drop below 1.
    ConstraintSet cs = build_constraints(m, map, DirichletSpec{false});

    // Interpolate a global linear field into all components and distribute:
    // hanging vertices must reproduce it exactly; the field stays continuous.
    auto lin = [](const Eigen::Vector3d& x, int comp) {
      return (comp + 1.0) * x[0] + 2.0 * x[1] - 0.75 * x[2] + 0.25 * comp;
    };
    FieldVector f = interpolate(m, map, lin);
    Vector before = f.values;
    cs.distribute(f.values);

    std::size_t interior_hanging = 0;
    for (const auto& [dof, line] : cs.lines()) {
      if (line.entries.empty()) continue;  // Dirichlet
      ++interior_hanging;
      // Edge midpoints carry (1/2, 1/2); 3d face centers carry four 1/4s.
      double wsum = 0.0;
      for (const auto& [master, w] : line.entries) {
        CHECK((w == doctest::Approx(0.5) || w == doctest::Approx(0.25)));
        CHECK_FALSE(cs.is_constrained(master));  // closed form
        wsum += w;
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
      const int v = map.dof_vertex(dof);
      const Eigen::Vector3d x = map.vertex_physical(m, v);
      CHECK(f.values[dof] == doctest::Approx(lin(x, map.dof_component(dof))).epsilon(1e-13));
      CHECK(f.values[dof] == doctest::Approx(before[dof]).epsilon(1e-13));  // linear field already conforming
    }
    CHECK(interior_hanging > 0);

    // Constraint idempotence.
    Vector once = f.values;
    cs.distribute(f.values);
    CHECK((f.values - once).lpNorm<Eigen::Infinity>() <= 1e-15);

    // Conformity for a *random* constrained field: evaluate from both sides of
    // each coarse-fine face at sampled points.
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    FieldVector r(map);
    for (int i = 0; i < r.values.size(); ++i) r.values[i] = U(rng);
    cs.distribute(r.values);
    for (const FaceEntry& face : active_faces(m)) {
      if (face.boundary() || face.rel != -1) continue;
      const Cell& fine = m.cell(face.cell);
      for (int s = 0; s < 10; ++s) {
        Eigen::Vector3d x;
        for (int ax = 0; ax < d; ++ax) {
          double t = (s + 0.5) / 10.0;
          x[ax] = m.to_physical(fine.anchor[ax]) + t * m.cell_edge(face.cell);
        }
        if (d == 2) x[2] = 0.0;
        x[face.axis] = m.to_physical(fine.anchor[face.axis] + (face.side ? fine.isize() : 0));
        PointValue a = evaluate_on_cell(m, map, r, face.cell, x);
        PointValue b = evaluate_on_cell(m, map, r, face.neighbor, x);
        CHECK((a.u - b.u).norm() <= 1e-12);
        CHECK(std::abs(a.phi - b.phi) <= 1e-12);
      }
    }
  }
}

TEST_CASE("active-set constraints pin phi dofs to their targets") {
  Mesh m = create_mesh(make_spec(2, 1.0, 2));
  DofMap map = build_dof_map(m);
  std::unordered_map<int, double> active{{map.phi_dof(0), 0.25}, {map.phi_dof(3), 1.0}};
  ConstraintSet cs = build_constraints(m, map, DirichletSpec{}, active);
  FieldVector f(map);
  cs.distribute(f.values);
  CHECK(f.values[map.phi_dof(0)] == doctest::Approx(0.25));
  CHECK(f.values[map.phi_dof(3)] == doctest::Approx(1.0));
  Vector inc = Vector::Ones(map.n_total());
  cs.distribute_homogeneous(inc);
  CHECK(inc[map.phi_dof(0)] == doctest::Approx(0.0));  // increments vanish on pinned dofs
}

TEST_CASE("interpolate fills nodal values componentwise") {
  Mesh m = hanging_mesh(2);
  DofMap map = build_dof_map(m);
  FieldVector ones = interpolate(m, map, [](const Eigen::Vector3d&, int c) { return c == 2 ? 1.0 : 0.0; });
  for (int v = 0; v < map.n_vertices(); ++v) {
    CHECK(ones.values[map.phi_dof(v)] == 1.0);
    CHECK(ones.values[map.u_dof(v, 0)] == 0.0);
  }
  auto bump = [](const Eigen::Vector3d& x, int c) {
    if (c != 0) return 0.0;
    const double r = x.head<2>().norm();
    return r < 1.0 ? std::sqrt(1.0 - r * r) : 0.0;
  };
  FieldVector f = interpolate(m, map, bump);
  for (int v = 0; v < map.n_vertices(); ++v)
    CHECK(f.values[map.u_dof(v, 0)] == doctest::Approx(bump(map.vertex_physical(m, v), 0)).epsilon(1e-14));
}

TEST_CASE("evaluate reproduces Q1 fields, gradients, and brute-force sums") {
  // Bilinear exactness on a unit cell: f = x*y has gradient (y, x).
  {
    Mesh m = create_mesh(make_spec(2, 0.5, 1));  // (-0.5, 0.5)^2
    DofMap map = build_dof_map(m);
    FieldVector f = interpolate(m, map, [](const Eigen::Vector3d& x, int c) {
      return c == 2 ? x[0] * x[1] : 0.0;
    });
    PointValue pv = evaluate(m, map, f, Eigen::Vector3d(0.2, -0.3, 0.0));
    CHECK(pv.phi == doctest::Approx(0.2 * -0.3).epsilon(1e-14));
    CHECK(pv.grad_phi[0] == doctest::Approx(-0.3).epsilon(1e-13));
    CHECK(pv.grad_phi[1] == doctest::Approx(0.2).epsilon(1e-13));
  }
  // Constant field: same constant anywhere, zero gradients.
  {
    Mesh m = hanging_mesh(3);
    DofMap map = build_dof_map(m);
    FieldVector f = interpolate(m, map, [](const Eigen::Vector3d&, int) { return 3.5; });
    PointValue pv = evaluate(m, map, f, Eigen::Vector3d(0.31, -0.62, 0.12));
    CHECK(pv.u[0] == doctest::Approx(3.5));
    CHECK(pv.phi == doctest::Approx(3.5));
    CHECK(pv.grad_phi.norm() <= 1e-12);
    CHECK(pv.grad_u.norm() <= 1e-12);
    CHECK_THROWS(evaluate(m, map, f, Eigen::Vector3d(2.0, 0.0, 0.0)));
  }
  // Random field vs independent shape-function sum at random points.
  {
    Mesh m = hanging_mesh(2);
    DofMap map = build_dof_map(m);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    FieldVector f(map);
    for (int i = 0; i < f.values.size(); ++i) f.values[i] = U(rng);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::Vector3d x(0.999 * U(rng), 0.999 * U(rng), 0.0);
      const int cell = m.find_active_cell(x);
      REQUIRE(cell >= 0);
      const Cell& c = m.cell(cell);
      Eigen::Vector3d xi = Eigen::Vector3d::Zero();
      for (int ax = 0; ax < 2; ++ax)
        xi[ax] = (x[ax] - m.to_physical(c.anchor[ax])) / m.cell_edge(cell);
      Vector vals;
      Matrix grads;
      q1_shape(2, xi, vals, grads);
      auto verts = map.cell_vertices(m, cell);
      double phi = 0.0, ux = 0.0;
      for (int k = 0; k < 4; ++k) {
        phi += vals[k] * f.values[map.phi_dof(verts[k])];
        ux += vals[k] * f.values[map.u_dof(verts[k], 0)];
      }
      PointValue pv = evaluate(m, map, f, x);
      CHECK(pv.phi == doctest::Approx(phi).epsilon(1e-13));
      CHECK(pv.u[0] == doctest::Approx(ux).epsilon(1e-13));
    }
  }
}

TEST_CASE("transfer is exact on nested spaces") {
  for (int d = 2; d <= 3; ++d) {
    Mesh old_mesh = hanging_mesh(d);
    DofMap old_map = build_dof_map(old_mesh);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    FieldVector old_vec(old_map);
    for (int i = 0; i < old_vec.values.size(); ++i) old_vec.values[i] = U(rng);
    // Conforming old field (distribute hanging constraints) so it lies in the
    // continuous Q1 space; nested interpolation is then exact.
    build_constraints(old_mesh, old_map, DirichletSpec{false}).distribute(old_vec.values);

    Mesh new_mesh = old_mesh;
    auto act = new_mesh.active_cells();
    std::vector<int> marked;
    for (std::size_t i = 0; i < act.size(); i += 2) marked.push_back(act[i]);
    refine(new_mesh, marked);
    DofMap new_map = build_dof_map(new_mesh);
    FieldVector moved = transfer(old_mesh, old_map, old_vec, new_mesh, new_map);
    CHECK(moved.revision == new_mesh.revision());

    for (int trial = 0; trial < 50; ++trial) {
      Eigen::Vector3d x(0.99 * U(rng), 0.99 * U(rng), d == 3 ? 0.99 * U(rng) : 0.0);
      PointValue a = evaluate(old_mesh, old_map, old_vec, x);
      PointValue b = evaluate(new_mesh, new_map, moved, x);
      CHECK((a.u - b.u).norm() <= 1e-13);
      CHECK(std::abs(a.phi - b.phi) <= 1e-13);
    }

    // transfer of f == 1 stays identically 1; integral of phi is preserved.
    FieldVector one = interpolate(old_mesh, old_map, [](const Eigen::Vector3d&, int) { return 1.0; });
    FieldVector one_new = transfer(old_mesh, old_map, one, new_mesh, new_map);
    CHECK((one_new.values.array() - 1.0).abs().maxCoeff() <= 1e-14);

    auto integral_phi = [](const Mesh& mesh, const DofMap& map, const FieldVector& v) {
      Quadrature q = Quadrature::cell_rule(mesh.dim());
      double sum = 0.0;
      for (int id : mesh.active_cells()) {
        const double measure = std::pow(mesh.cell_edge(id), mesh.dim());
        auto verts = map.cell_vertices(mesh, id);
        for (int k = 0; k < q.points.rows(); ++k) {
          Vector vals;
          Matrix grads;
          q1_shape(mesh.dim(), Eigen::Vector3d(q.points(k, 0), q.points(k, 1),
                                               mesh.dim() == 3 ? q.points(k, 2) : 0.0),
                   vals, grads);
          double phi = 0.0;
          for (std::size_t j = 0; j < verts.size(); ++j)
            phi += vals[int(j)] * v.values[map.phi_dof(verts[j])];
          sum += q.weights[k] * measure * phi;
        }
      }
      return sum;
    };
    CHECK(integral_phi(new_mesh, new_map, moved) ==
          doctest::Approx(integral_phi(old_mesh, old_map, old_vec)).epsilon(1e-12));
  }
}
