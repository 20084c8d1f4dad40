#include "crackfield/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace crackfield {

Vector BlockSystem::apply(const Vector& x) const {
  const int nu = n_u(), np = n_phi();
  Vector y(nu + np);
  y.head(nu) = M_uu * x.head(nu);
  y.tail(np) = M_phiu * x.head(nu) + M_phiphi * x.tail(np);
  return y;
}

GmresResult gmres(const LinearOperator& op, const LinearOperator& prec,
                  const Vector& rhs, const GmresOptions& opts) {
  if (!(opts.rtol > 0.0 && opts.rtol < 1.0))
    throw std::invalid_argument("gmres: rtol must be in (0,1)");
  const int n = int(rhs.size());
  auto M = prec ? prec : [](const Vector& v) { return v; };

  GmresResult res;
  res.x = Vector::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }

  Vector r = rhs;
  while (res.iterations < opts.max_iter) {
    double beta = r.norm();
    if (beta <= opts.rtol * bnorm) {
      res.converged = true;
      res.residual = beta / bnorm;
      return res;
    }
    const int m = std::min(opts.restart, opts.max_iter - res.iterations);
    Matrix V(n, m + 1);
    Matrix H = Matrix::Zero(m + 1, m);
    Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
    Vector g = Vector::Zero(m + 1);
    g[0] = beta;
    V.col(0) = r / beta;

    int j = 0;
    bool inner_done = false;
    for (; j < m && !inner_done; ++j) {
      Vector w = op(M(V.col(j)));
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H(i, j) = w.dot(V.col(i));
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool happy = H(j + 1, j) <= 1e-14 * bnorm;
      if (!happy) V.col(j + 1) = w / H(j + 1, j);

      for (int i = 0; i < j; ++i) {  // previous Givens rotations
        double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) {
        res.breakdown = true;
        inner_done = true;
        --j;
        break;
      }
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++res.iterations;
      const double rel = std::abs(g[j + 1]) / bnorm;
      res.residual_history.push_back(rel);
      if (rel <= opts.rtol || happy || res.iterations >= opts.max_iter)
        inner_done = true;
    }

    const int k = j;  // size of the solved least-squares problem
    if (k > 0) {
      Vector y(k);
      for (int i = k - 1; i >= 0; --i) {
        double s = g[i];
        for (int l = i + 1; l < k; ++l) s -= H(i, l) * y[l];
        if (H(i, i) == 0.0) {
          res.breakdown = true;
          y[i] = 0.0;
        } else {
          y[i] = s / H(i, i);
        }
      }
      res.x += M(V.leftCols(k) * y);
    }
    r = rhs - op(res.x);
    res.residual = r.norm() / bnorm;
    if (res.residual <= opts.rtol) {
      res.converged = true;
      return res;
    }
    if (res.breakdown) return res;
  }
  res.residual = r.norm() / bnorm;
  return res;
}

namespace {

// Largest eigenvalue of D^-1 A by power iteration (deterministic start).
double estimate_lambda_max(const CsrMatrix& A, const Vector& inv_diag) {
  const int n = int(A.rows());
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + i);
  v.normalize();
  double lambda = 1.0;
  for (int it = 0; it < 15; ++it) {
    Vector w = inv_diag.asDiagonal() * (A * v);
    double nw = w.norm();
    if (nw == 0.0) return 1.0;
    lambda = nw;
    v = w / nw;
  }
  return std::max(lambda, 1e-12);
}

struct Aggregation {
  std::vector<int> agg_of_node;  // -1 for none (never after completion)
  int n_aggregates = 0;
};

// Greedy smoothed-aggregation clustering on the strength graph.
Aggregation aggregate_nodes(int n_nodes, const std::vector<std::vector<int>>& strong) {
  Aggregation agg;
  agg.agg_of_node.assign(n_nodes, -1);
  // pass 1: seed aggregates from nodes whose strong neighborhood is free
  for (int i = 0; i < n_nodes; ++i) {
    if (agg.agg_of_node[i] >= 0) continue;
    bool free = true;
    for (int j : strong[i])
      if (agg.agg_of_node[j] >= 0) { free = false; break; }
    if (!free) continue;
    const int a = agg.n_aggregates++;
    agg.agg_of_node[i] = a;
    for (int j : strong[i]) agg.agg_of_node[j] = a;
  }
  // pass 2: attach leftovers to a neighboring aggregate
  for (int i = 0; i < n_nodes; ++i) {
    if (agg.agg_of_node[i] >= 0) continue;
    for (int j : strong[i])
      if (agg.agg_of_node[j] >= 0) { agg.agg_of_node[i] = agg.agg_of_node[j]; break; }
  }
  // pass 3: isolated nodes become singletons
  for (int i = 0; i < n_nodes; ++i)
    if (agg.agg_of_node[i] < 0) agg.agg_of_node[i] = agg.n_aggregates++;
  return agg;
}

} // namespace

AmgHierarchy build_amg(const CsrMatrix& A_in, const std::vector<int>& node_of_dof_in,
                       const Matrix& nullspace_in, const AmgOptions& opts) {
  AmgHierarchy h;
  h.opts_ = opts;

  CsrMatrix A = A_in;
  std::vector<int> node_of_dof = node_of_dof_in;
  Matrix B = nullspace_in;

  for (int lev = 0; lev < opts.max_levels; ++lev) {
    const int n = int(A.rows());
    if (n <= opts.coarse_size) break;

    const int n_nodes = node_of_dof.empty() ? 0 : *std::max_element(node_of_dof.begin(), node_of_dof.end()) + 1;

    // node-block strength: Frobenius norms of the coupling blocks
    std::vector<std::map<int, double>> blk(n_nodes);
    for (int i = 0; i < n; ++i) {
      const int ni = node_of_dof[i];
      for (CsrMatrix::InnerIterator it(A, i); it; ++it)
        blk[ni][node_of_dof[it.col()]] += it.value() * it.value();
    }
    std::vector<std::vector<int>> strong(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const double dii = std::sqrt(blk[i].count(i) ? blk[i][i] : 0.0);
      for (auto& [j, s2] : blk[i]) {
        if (j == i) continue;
        const double djj = std::sqrt(blk[j].count(j) ? blk[j][j] : 0.0);
        if (std::sqrt(s2) > opts.strength_threshold * std::sqrt(dii * djj))
          strong[i].push_back(j);
      }
    }
    Aggregation agg = aggregate_nodes(n_nodes, strong);
    if (agg.n_aggregates >= n_nodes && n_nodes > 1) break;  // no coarsening possible

    // tentative prolongator: per-aggregate QR of the near-nullspace block
    const int m = int(B.cols());
    std::vector<std::vector<int>> agg_dofs(agg.n_aggregates);
    for (int i = 0; i < n; ++i) agg_dofs[agg.agg_of_node[node_of_dof[i]]].push_back(i);

    std::vector<int> agg_offset(agg.n_aggregates + 1, 0);
    std::vector<Matrix> agg_Q(agg.n_aggregates);
    std::vector<Matrix> agg_R(agg.n_aggregates);
    for (int a = 0; a < agg.n_aggregates; ++a) {
      const auto& dofs = agg_dofs[a];
      Matrix Bg(int(dofs.size()), m);
      for (int r = 0; r < int(dofs.size()); ++r) Bg.row(r) = B.row(dofs[r]);
      Eigen::ColPivHouseholderQR<Matrix> qr(Bg);
      qr.setThreshold(1e-10);
      const int rank = std::max<int>(0, std::min<int>(int(qr.rank()), std::min<int>(m, int(dofs.size()))));
      agg_Q[a] = Matrix(qr.householderQ()) .leftCols(rank);
      Matrix R = qr.matrixR().topLeftCorner(rank, m).template triangularView<Eigen::Upper>();
      agg_R[a] = R * qr.colsPermutation().transpose();
      agg_offset[a + 1] = agg_offset[a] + rank;
    }
    const int nc = agg_offset.back();
    if (nc == 0 || nc >= n) break;

    std::vector<Triplet> trip;
    trip.reserve(std::size_t(n) * m);
    for (int a = 0; a < agg.n_aggregates; ++a) {
      const auto& dofs = agg_dofs[a];
      for (int r = 0; r < int(dofs.size()); ++r)
        for (int c = 0; c < int(agg_Q[a].cols()); ++c)
          if (std::abs(agg_Q[a](r, c)) > 1e-300)
            trip.emplace_back(dofs[r], agg_offset[a] + c, agg_Q[a](r, c));
    }
    CsrMatrix T(n, nc);
    T.setFromTriplets(trip.begin(), trip.end());

    // prolongation smoothing P = (I - w D^-1 A) T
    Vector inv_diag(n);
    for (int i = 0; i < n; ++i) {
      double d = A.coeff(i, i);
      inv_diag[i] = (d != 0.0) ? 1.0 / d : 0.0;
    }
    const double lambda = estimate_lambda_max(A, inv_diag);
    const double wp = opts.prolongation_omega * 2.0 / lambda;
    CsrMatrix DA = inv_diag.asDiagonal() * A;
    CsrMatrix DAT = DA * T;
    CsrMatrix P = T - CsrMatrix(wp * DAT);
    P.prune(1.0, 1e-300);

    AmgHierarchy::Level level;
    level.A = A;
    level.P = P;
    level.inv_diag = inv_diag;
    level.jacobi_weight = opts.jacobi_omega * 2.0 / lambda;
    h.levels_.push_back(std::move(level));

    // coarse operator and coarse near-nullspace
    CsrMatrix AP = A * P;
    CsrMatrix Pt = P.transpose();
    CsrMatrix Ac = Pt * AP;
    Ac.prune(1.0, 1e-300);
    Matrix Bc(nc, m);
    for (int a = 0; a < agg.n_aggregates; ++a)
      Bc.middleRows(agg_offset[a], agg_offset[a + 1] - agg_offset[a]) = agg_R[a];
    std::vector<int> coarse_node(nc);
    for (int a = 0; a < agg.n_aggregates; ++a)
      for (int c = agg_offset[a]; c < agg_offset[a + 1]; ++c) coarse_node[c] = a;

    A = std::move(Ac);
    B = std::move(Bc);
    node_of_dof = std::move(coarse_node);
  }

  Matrix Ad = Matrix(A);
  h.coarse_lu_ = std::make_shared<Eigen::PartialPivLU<Matrix>>(Ad);
  // report only exact pivot breakdown; the kappa-regularized blocks are
  // legitimately ill-conditioned inside the crack
  if (Ad.rows() > 0) {
    Matrix U = h.coarse_lu_->matrixLU();
    if (U.diagonal().cwiseAbs().minCoeff() == 0.0)
      throw std::runtime_error("build_amg: coarsest-level matrix is singular");
  }
  return h;
}

AmgHierarchy build_amg(const CsrMatrix& A, const AmgOptions& opts) {
  std::vector<int> node(A.rows());
  for (int i = 0; i < int(A.rows()); ++i) node[i] = i;
  return build_amg(A, node, Matrix::Ones(A.rows(), 1), opts);
}

void AmgHierarchy::cycle(int lev, const Vector& b, Vector& x) const {
  if (lev == int(levels_.size())) {
    x = coarse_lu_->solve(b);
    return;
  }
  const Level& L = levels_[lev];
  const double w = L.jacobi_weight;
  x = w * (L.inv_diag.asDiagonal() * b);  // first sweep from zero guess
  for (int s = 1; s < opts_.smoothing_sweeps; ++s)
    x += w * (L.inv_diag.asDiagonal() * (b - L.A * x));
  Vector r = b - L.A * x;
  Vector bc = L.P.transpose() * r;
  Vector xc;
  cycle(lev + 1, bc, xc);
  x += L.P * xc;
  for (int s = 0; s < opts_.smoothing_sweeps; ++s)
    x += w * (L.inv_diag.asDiagonal() * (b - L.A * x));
}

Vector AmgHierarchy::v_cycle(const Vector& r) const {
  Vector x;
  cycle(0, r, x);
  return x;
}

Matrix rigid_body_modes(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints) {
  const int d = map.dim();
  const int n = map.n_u();
  const int m = (d == 2) ? 3 : 6;
  Matrix B = Matrix::Zero(n, m);
  for (int v = 0; v < map.n_vertices(); ++v) {
    Eigen::Vector3d x = map.vertex_physical(mesh, v);
    for (int c = 0; c < d; ++c) B(map.u_dof(v, c), c) = 1.0;  // translations
    if (d == 2) {
      B(map.u_dof(v, 0), 2) = -x[1];
      B(map.u_dof(v, 1), 2) = x[0];
    } else {
      B(map.u_dof(v, 1), 3) = -x[2];
      B(map.u_dof(v, 2), 3) = x[1];
      B(map.u_dof(v, 0), 4) = x[2];
      B(map.u_dof(v, 2), 4) = -x[0];
      B(map.u_dof(v, 0), 5) = -x[1];
      B(map.u_dof(v, 1), 5) = x[0];
    }
  }
  for (int i = 0; i < n; ++i)
    if (constraints.is_constrained(i)) B.row(i).setZero();
  return B;
}

PrecKind preconditioner_kind_from_string(const std::string& s) {
  if (s == "exact") return PrecKind::exact;
  if (s == "amg") return PrecKind::amg;
  if (s == "diagonal") return PrecKind::diagonal;
  throw std::invalid_argument("unknown preconditioner kind: " + s);
}

BlockPreconditioner BlockPreconditioner::build(const BlockSystem& sys, PrecKind kind,
                                               const AmgOptions& amg_opts,
                                               const NullspaceInfo* ns) {
  BlockPreconditioner p;
  p.kind_ = kind;
  p.n_u_ = sys.n_u();
  p.n_phi_ = sys.n_phi();
  switch (kind) {
    case PrecKind::exact: {
      Eigen::SparseMatrix<double> Auu = sys.M_uu;
      Eigen::SparseMatrix<double> App = sys.M_phiphi;
      p.lu_u_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(Auu);
      p.lu_phi_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(App);
      if (p.lu_u_->info() != Eigen::Success || p.lu_phi_->info() != Eigen::Success)
        throw std::runtime_error("BlockPreconditioner: block factorization failed");
      break;
    }
    case PrecKind::amg: {
      if (ns) {
        p.amg_u_ = std::make_shared<AmgHierarchy>(
            build_amg(sys.M_uu, ns->u_node_of_dof, ns->u_modes, amg_opts));
        p.amg_phi_ = std::make_shared<AmgHierarchy>(
            build_amg(sys.M_phiphi, ns->phi_node_of_dof, ns->phi_modes, amg_opts));
      } else {
        p.amg_u_ = std::make_shared<AmgHierarchy>(build_amg(sys.M_uu, amg_opts));
        p.amg_phi_ = std::make_shared<AmgHierarchy>(build_amg(sys.M_phiphi, amg_opts));
      }
      break;
    }
    case PrecKind::diagonal: {
      p.inv_diag_u_ = Vector::Ones(p.n_u_);
      p.inv_diag_phi_ = Vector::Ones(p.n_phi_);
      for (int i = 0; i < p.n_u_; ++i) {
        double d = sys.M_uu.coeff(i, i);
        if (d != 0.0) p.inv_diag_u_[i] = 1.0 / d;
      }
      for (int i = 0; i < p.n_phi_; ++i) {
        double d = sys.M_phiphi.coeff(i, i);
        if (d != 0.0) p.inv_diag_phi_[i] = 1.0 / d;
      }
      break;
    }
  }
  return p;
}

Vector BlockPreconditioner::apply(const Vector& r) const {
  Vector z(n_u_ + n_phi_);
  switch (kind_) {
    case PrecKind::exact:
      z.head(n_u_) = lu_u_->solve(r.head(n_u_));
      z.tail(n_phi_) = lu_phi_->solve(r.tail(n_phi_));
      break;
    case PrecKind::amg:
      z.head(n_u_) = amg_u_->v_cycle(r.head(n_u_));
      z.tail(n_phi_) = amg_phi_->v_cycle(r.tail(n_phi_));
      break;
    case PrecKind::diagonal:
      z.head(n_u_) = inv_diag_u_.asDiagonal() * r.head(n_u_);
      z.tail(n_phi_) = inv_diag_phi_.asDiagonal() * r.tail(n_phi_);
      break;
  }
  return z;
}

BlockSparsity assemble_pattern(const Mesh& mesh, const DofMap& map,
                               const ConstraintSet& constraints) {
  const int d = map.dim();
  const int nu = map.n_u(), np = map.n_phi();
  std::vector<std::set<int>> uu(nu), phiu(np), phiphi(np);

  auto expand = [&](int dof, std::vector<int>& out) {
    if (constraints.is_constrained(dof)) {
      for (const auto& [m, w] : constraints.line(dof).entries) {
        (void)w;
        out.push_back(m);
      }
    } else {
      out.push_back(dof);
    }
  };

  for (int id : mesh.active_cells()) {
    std::vector<int> verts = map.cell_vertices(mesh, id);
    std::vector<int> dofs;
    for (int v : verts)
      for (int c = 0; c < d; ++c) dofs.push_back(map.u_dof(v, c));
    for (int v : verts) dofs.push_back(map.phi_dof(v));

    std::vector<int> rows, cols;
    for (int i : dofs) {
      rows.clear();
      expand(i, rows);
      for (int j : dofs) {
        cols.clear();
        expand(j, cols);
        for (int ri : rows)
          for (int cj : cols) {
            if (ri < nu && cj < nu) uu[ri].insert(cj);
            if (ri >= nu && cj < nu) phiu[ri - nu].insert(cj);
            if (ri >= nu && cj >= nu) phiphi[ri - nu].insert(cj - nu);
          }
      }
    }
  }
  // constrained dofs keep their diagonal
  for (const auto& [dof, line] : constraints.lines()) {
    (void)line;
    if (dof < nu)
      uu[dof].insert(dof);
    else
      phiphi[dof - nu].insert(dof - nu);
  }

  BlockSparsity sp;
  auto to_vec = [](std::vector<std::set<int>>& s) {
    std::vector<std::vector<int>> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i].assign(s[i].begin(), s[i].end());
    return out;
  };
  sp.uu = to_vec(uu);
  sp.phiu = to_vec(phiu);
  sp.phiphi = to_vec(phiphi);
  return sp;
}

void write_matrix_market(const std::string& path, const CsrMatrix& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  char buf[64];
  for (int i = 0; i < int(A.rows()); ++i)
    for (CsrMatrix::InnerIterator it(A, i); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i + 1, int(it.col()) + 1, it.value());
      out << buf;
    }
  if (!out) throw std::runtime_error("write_matrix_market: write failed for " + path);
}

} // namespace crackfield
