#include "crackfield/model.hpp"

#include <cmath>
#include <stdexcept>

namespace crackfield {

void Material::validate() const {
  if (!(E > 0.0)) throw std::invalid_argument("Material: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Material: nu must be in [0, 0.5)");
  if (!(G_c > 0.0)) throw std::invalid_argument("Material: G_c must be positive");
  if (!(l0 > 0.0)) throw std::invalid_argument("Material: l0 must be positive");
  if (!(kappa_factor > 0.0)) throw std::invalid_argument("Material: kappa_factor must be positive");
  if (!(c_eps > 0.0)) throw std::invalid_argument("Material: c_eps must be positive");
  if (eps_mode == EpsMode::fixed && !(eps_fixed > 0.0))
    throw std::invalid_argument("Material: fixed eps must be positive");
}

Eigen::Matrix3d sigma(const Eigen::Matrix3d& grad_u, const Material& mat, int d) {
  Eigen::Matrix3d e = 0.5 * (grad_u + grad_u.transpose());
  double tr = 0.0;
  for (int a = 0; a < d; ++a) tr += e(a, a);
  Eigen::Matrix3d s = 2.0 * mat.mu() * e;
  for (int a = 0; a < d; ++a) s(a, a) += mat.lambda() * tr;
  return s;
}

double slit_band_edge(const Mesh& mesh, const Material& mat) {
  const int d = mesh.dim();
  double edge = -1.0;
  for (int id : mesh.active_cells()) {
    Eigen::Vector3d lo = mesh.corner_physical(id, 0);
    Eigen::Vector3d hi = mesh.corner_physical(id, (1 << d) - 1);
    bool meets;
    if (d == 2) {
      meets = lo[1] <= 0.0 && hi[1] >= 0.0 && lo[0] <= mat.l0 && hi[0] >= -mat.l0;
    } else {
      if (!(lo[2] <= 0.0 && hi[2] >= 0.0)) continue;
      double dx = std::max({lo[0], 0.0, -hi[0]});
      double dy = std::max({lo[1], 0.0, -hi[1]});
      meets = std::hypot(dx, dy) <= mat.l0;
    }
    if (meets) {
      double h = mesh.cell_edge(id);
      if (edge < 0.0 || h < edge) edge = h;
    }
  }
  if (edge < 0.0) throw std::runtime_error("slit_band_edge: no active cell meets the slit");
  return edge;
}

Regularization resolve_regularization(const Mesh& mesh, const Material& mat, double band_edge) {
  Regularization reg;
  const double diam = band_edge * std::sqrt(double(mesh.dim()));
  reg.eps = (mat.eps_mode == EpsMode::tied) ? mat.c_eps * diam : mat.eps_fixed;
  reg.kappa = mat.kappa_factor * mesh.min_active_edge();
  return reg;
}

Vector extrapolate_phi(const FractureState& state) {
  if (state.step <= 2) return state.phi_old;
  Vector tilde = 2.0 * state.phi_old - state.phi_prev2;
  return tilde.cwiseMax(0.0).cwiseMin(1.0);
}

namespace {

// Element contributions condensed through the constraint set: constrained
// rows/columns flow to their masters, constrained diagonals keep the
// pre-elimination value.
struct Scatter {
  const ConstraintSet& cs;

  void vector_add(Vector& R, int dof, double val) const {
    if (cs.is_constrained(dof)) {
      for (const auto& [m, w] : cs.line(dof).entries) R[m] += w * val;
    } else {
      R[dof] += val;
    }
  }

  void matrix_add(std::vector<Triplet>& trip, int row, int col, double val,
                  int row_off, int col_off) const {
    const bool rc = cs.is_constrained(row), cc = cs.is_constrained(col);
    if (!rc && !cc) {
      trip.emplace_back(row - row_off, col - col_off, val);
      return;
    }
    if (rc) {
      for (const auto& [rm, rw] : cs.line(row).entries) {
        if (cc) {
          for (const auto& [cm, cw] : cs.line(col).entries)
            trip.emplace_back(rm - row_off, cm - col_off, rw * cw * val);
        } else {
          trip.emplace_back(rm - row_off, col - col_off, rw * val);
        }
      }
    } else {
      for (const auto& [cm, cw] : cs.line(col).entries)
        trip.emplace_back(row - row_off, cm - col_off, cw * val);
    }
  }
};

struct QpData {
  Quadrature quad;
  std::vector<Vector> shape;   // per qp: n_v values
  std::vector<Matrix> grads;   // per qp: n_v x d reference gradients
};

QpData make_qp_data(int d) {
  QpData qp;
  qp.quad = Quadrature::cell_rule(d, 2);
  const int nq = int(qp.quad.weights.size());
  qp.shape.resize(nq);
  qp.grads.resize(nq);
  for (int q = 0; q < nq; ++q) {
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    for (int a = 0; a < d; ++a) xi[a] = qp.quad.points(q, a);
    q1_shape(d, xi, qp.shape[q], qp.grads[q]);
  }
  return qp;
}

} // namespace

Vector assemble_residual(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints,
                         const Material& mat, const Regularization& reg,
                         const Vector& solution, const Vector& phi_tilde) {
  const int d = mesh.dim();
  const int nv = 1 << d;
  const double kap = reg.kappa, eps = reg.eps, p = mat.pressure, Gc = mat.G_c;
  const double mu = mat.mu(), lam = mat.lambda();
  static thread_local QpData qp2, qp3;
  QpData& qp = (d == 2) ? qp2 : qp3;
  if (qp.shape.empty()) qp = make_qp_data(d);

  Vector R = Vector::Zero(map.n_total());
  Scatter sc{constraints};

  Matrix uloc(nv, d);
  Vector philoc(nv), ptloc(nv);
  Vector ru(nv * d), rphi(nv);

  for (int id : mesh.active_cells()) {
    std::vector<int> verts = map.cell_vertices(mesh, id);
    const double h = mesh.cell_edge(id);
    const double detJ = std::pow(h, d);
    for (int k = 0; k < nv; ++k) {
      for (int a = 0; a < d; ++a) uloc(k, a) = solution[map.u_dof(verts[k], a)];
      philoc[k] = solution[map.phi_dof(verts[k])];
      ptloc[k] = phi_tilde[verts[k]];
    }
    ru.setZero();
    rphi.setZero();

    for (int q = 0; q < int(qp.quad.weights.size()); ++q) {
      const Vector& s = qp.shape[q];
      const Matrix& G = qp.grads[q];
      Eigen::Matrix3d gu = Eigen::Matrix3d::Zero();
      Eigen::Vector3d gphi = Eigen::Vector3d::Zero();
      double phi = 0.0, pt = 0.0;
      for (int k = 0; k < nv; ++k) {
        phi += s[k] * philoc[k];
        pt += s[k] * ptloc[k];
        for (int b = 0; b < d; ++b) {
          gphi[b] += philoc[k] * G(k, b) / h;
          for (int a = 0; a < d; ++a) gu(a, b) += uloc(k, a) * G(k, b) / h;
        }
      }
      Eigen::Matrix3d e = 0.5 * (gu + gu.transpose());
      double tre = 0.0;
      for (int a = 0; a < d; ++a) tre += e(a, a);
      Eigen::Matrix3d sig = 2.0 * mu * e;
      for (int a = 0; a < d; ++a) sig(a, a) += lam * tre;
      double sig_ee = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) sig_ee += sig(a, b) * e(a, b);
      const double gcoef = (1.0 - kap) * pt * pt + kap;
      const double pphi = (mat.pressure_coupling == PressureCoupling::extrapolated) ? pt * pt : phi * phi;
      const double w = qp.quad.weights[q] * detJ;

      for (int k = 0; k < nv; ++k) {
        for (int a = 0; a < d; ++a) {
          double val = 0.0;
          for (int b = 0; b < d; ++b) val += gcoef * sig(a, b) * G(k, b) / h;
          val += pphi * p * G(k, a) / h;
          ru[k * d + a] += w * val;
        }
        double vphi = ((1.0 - kap) * phi * sig_ee + 2.0 * phi * p * tre - Gc / eps * (1.0 - phi)) * s[k];
        for (int b = 0; b < d; ++b) vphi += Gc * eps * gphi[b] * G(k, b) / h;
        rphi[k] += w * vphi;
      }
    }

    for (int k = 0; k < nv; ++k) {
      for (int a = 0; a < d; ++a) sc.vector_add(R, map.u_dof(verts[k], a), ru[k * d + a]);
      sc.vector_add(R, map.phi_dof(verts[k]), rphi[k]);
    }
  }
  return R;
}

BlockSystem assemble_jacobian(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints,
                              const Material& mat, const Regularization& reg,
                              const Vector& solution, const Vector& phi_tilde) {
  const int d = mesh.dim();
  const int nv = 1 << d;
  const int nu = map.n_u(), np = map.n_phi();
  const double kap = reg.kappa, eps = reg.eps, p = mat.pressure, Gc = mat.G_c;
  const double mu = mat.mu(), lam = mat.lambda();
  static thread_local QpData qp2, qp3;
  QpData& qp = (d == 2) ? qp2 : qp3;
  if (qp.shape.empty()) qp = make_qp_data(d);

  Scatter sc{constraints};
  std::vector<Triplet> t_uu, t_pu, t_pp;
  const std::size_t ncells = mesh.active_cells().size();
  t_uu.reserve(ncells * nv * nv * d * d * 2);
  t_pu.reserve(ncells * nv * nv * d * 2);
  t_pp.reserve(ncells * nv * nv * 2);
  Vector diag_uu = Vector::Zero(nu), diag_pp = Vector::Zero(np);

  Matrix uloc(nv, d);
  Vector philoc(nv), ptloc(nv);
  Matrix kuu(nv * d, nv * d), kpu(nv, nv * d), kpp(nv, nv);
  Matrix gphys(nv, 3);

  for (int id : mesh.active_cells()) {
    std::vector<int> verts = map.cell_vertices(mesh, id);
    const double h = mesh.cell_edge(id);
    const double detJ = std::pow(h, d);
    for (int k = 0; k < nv; ++k) {
      for (int a = 0; a < d; ++a) uloc(k, a) = solution[map.u_dof(verts[k], a)];
      philoc[k] = solution[map.phi_dof(verts[k])];
      ptloc[k] = phi_tilde[verts[k]];
    }
    kuu.setZero();
    kpu.setZero();
    kpp.setZero();

    for (int q = 0; q < int(qp.quad.weights.size()); ++q) {
      const Vector& s = qp.shape[q];
      const Matrix& G = qp.grads[q];
      gphys.setZero();
      for (int k = 0; k < nv; ++k)
        for (int b = 0; b < d; ++b) gphys(k, b) = G(k, b) / h;

      Eigen::Matrix3d gu = Eigen::Matrix3d::Zero();
      double phi = 0.0, pt = 0.0;
      for (int k = 0; k < nv; ++k) {
        phi += s[k] * philoc[k];
        pt += s[k] * ptloc[k];
        for (int b = 0; b < d; ++b)
          for (int a = 0; a < d; ++a) gu(a, b) += uloc(k, a) * gphys(k, b);
      }
      Eigen::Matrix3d e = 0.5 * (gu + gu.transpose());
      double tre = 0.0;
      for (int a = 0; a < d; ++a) tre += e(a, a);
      Eigen::Matrix3d sig = 2.0 * mu * e;
      for (int a = 0; a < d; ++a) sig(a, a) += lam * tre;
      double sig_ee = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) sig_ee += sig(a, b) * e(a, b);
      const double gcoef = (1.0 - kap) * pt * pt + kap;
      const double w = qp.quad.weights[q] * detJ;

      for (int k = 0; k < nv; ++k) {      // test
        for (int l = 0; l < nv; ++l) {    // trial
          double gg = 0.0;
          for (int b = 0; b < d; ++b) gg += gphys(k, b) * gphys(l, b);
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
              double val = mu * ((a == b ? gg : 0.0) + gphys(l, a) * gphys(k, b)) +
                           lam * gphys(l, b) * gphys(k, a);
              kuu(k * d + a, l * d + b) += w * gcoef * val;
            }
          for (int b = 0; b < d; ++b) {
            double sgl = 0.0;
            for (int c = 0; c < d; ++c) sgl += sig(b, c) * gphys(l, c);
            kpu(k, l * d + b) += w * (2.0 * (1.0 - kap) * phi * sgl + 2.0 * p * phi * gphys(l, b)) * s[k];
          }
          kpp(k, l) += w * (((1.0 - kap) * sig_ee + 2.0 * p * tre + Gc / eps) * s[l] * s[k] + Gc * eps * gg);
        }
      }
    }

    // scatter with condensation; constrained diagonals accumulated separately
    std::vector<int> udofs(nv * d), pdofs(nv);
    for (int k = 0; k < nv; ++k) {
      for (int a = 0; a < d; ++a) udofs[k * d + a] = map.u_dof(verts[k], a);
      pdofs[k] = map.phi_dof(verts[k]);
    }
    for (int i = 0; i < nv * d; ++i) {
      if (constraints.is_constrained(udofs[i])) diag_uu[udofs[i]] += kuu(i, i);
      for (int j = 0; j < nv * d; ++j)
        sc.matrix_add(t_uu, udofs[i], udofs[j], kuu(i, j), 0, 0);
    }
    for (int i = 0; i < nv; ++i) {
      if (constraints.is_constrained(pdofs[i])) diag_pp[pdofs[i] - nu] += kpp(i, i);
      for (int j = 0; j < nv * d; ++j)
        sc.matrix_add(t_pu, pdofs[i], udofs[j], kpu(i, j), nu, 0);
      for (int j = 0; j < nv; ++j)
        sc.matrix_add(t_pp, pdofs[i], pdofs[j], kpp(i, j), nu, nu);
    }
  }

  for (int i = 0; i < nu; ++i)
    if (diag_uu[i] != 0.0) t_uu.emplace_back(i, i, diag_uu[i]);
  for (int i = 0; i < np; ++i)
    if (diag_pp[i] != 0.0) t_pp.emplace_back(i, i, diag_pp[i]);

  BlockSystem sys;
  sys.M_uu.resize(nu, nu);
  sys.M_phiu.resize(np, nu);
  sys.M_phiphi.resize(np, np);
  sys.M_uu.setFromTriplets(t_uu.begin(), t_uu.end());
  sys.M_phiu.setFromTriplets(t_pu.begin(), t_pu.end());
  sys.M_phiphi.setFromTriplets(t_pp.begin(), t_pp.end());
  sys.rhs = Vector::Zero(nu + np);
  return sys;
}

CrackSeed initial_crack(const Mesh& mesh, const DofMap& map, const Material& mat,
                        double band_half) {
  const int d = mesh.dim();
  CrackSeed seed;
  seed.band_edge = band_half > 0.0 ? band_half : slit_band_edge(mesh, mat);
  seed.phi = Vector::Ones(map.n_phi());
  const double band = seed.band_edge;
  const double tol = 1e-9 * band;
  int n_zero = 0, n_plane = 0;
  for (int v = 0; v < map.n_vertices(); ++v) {
    Eigen::Vector3d x = map.vertex_physical(mesh, v);
    bool in;
    if (d == 2)
      in = std::abs(x[0]) <= mat.l0 + tol && std::abs(x[1]) <= band + tol;
    else
      in = std::hypot(x[0], x[1]) <= mat.l0 + tol && std::abs(x[2]) <= band + tol;
    if (in) {
      seed.phi[v] = 0.0;
      ++n_zero;
      if (std::abs(d == 2 ? x[1] : x[2]) <= tol) ++n_plane;
    }
  }
  if (n_zero == 0 || n_plane == 0)
    throw std::runtime_error("initial_crack: slit is not resolved by the mesh (no vertex layer inside the band)");
  return seed;
}

} // namespace crackfield
