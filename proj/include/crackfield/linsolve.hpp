#ifndef CRACKFIELD_LINSOLVE_HPP
#define CRACKFIELD_LINSOLVE_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "crackfield/fem.hpp"
#include "crackfield/types.hpp"

namespace crackfield {

/// 2x2 block operator with empty upper-right block:
///   [ M_uu      0      ] [x_u  ]   [ F_u   ]
///   [ M_phiu  M_phiphi ] [x_phi] = [ F_phi ]
struct BlockSystem {
  CsrMatrix M_uu;
  CsrMatrix M_phiu;
  CsrMatrix M_phiphi;
  Vector rhs;  // stacked (F_u, F_phi)

  int n_u() const { return int(M_uu.rows()); }
  int n_phi() const { return int(M_phiphi.rows()); }
  int n_total() const { return n_u() + n_phi(); }

  Vector apply(const Vector& x) const;
};

using LinearOperator = std::function<Vector(const Vector&)>;

struct GmresOptions {
  double rtol = 1e-8;
  int max_iter = 1000;
  int restart = 100;
};

struct GmresResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  double residual = 0.0;             // final relative residual
  std::vector<double> residual_history;
};

/// Restarted GMRES with right preconditioning; prec may be empty (identity).
GmresResult gmres(const LinearOperator& op, const LinearOperator& prec,
                  const Vector& rhs, const GmresOptions& opts = {});

struct AmgOptions {
  double strength_threshold = 0.02;
  // Damping factors relative to the Poisson-normalized spectrum: the applied
  // weight is omega * 2 / lambda_max(D^-1 A), estimated by power iteration.
  double prolongation_omega = 2.0 / 3.0;
  double jacobi_omega = 2.0 / 3.0;
  int smoothing_sweeps = 1;
  int coarse_size = 64;
  int max_levels = 25;
};

/// Smoothed-aggregation hierarchy; the V-cycle with zero initial guess is a
/// fixed linear operator.
class AmgHierarchy {
 public:
  Vector v_cycle(const Vector& r) const;
  int n_levels() const { return int(levels_.size()) + 1; }
  int coarse_dim() const { return int(coarse_lu_->rows()); }

 private:
  struct Level {
    CsrMatrix A;
    CsrMatrix P;         // prolongation to this level from the next coarser
    Vector inv_diag;
    double jacobi_weight = 2.0 / 3.0;
  };
  std::vector<Level> levels_;  // finest first; coarsest solved directly
  std::shared_ptr<Eigen::PartialPivLU<Matrix>> coarse_lu_;
  AmgOptions opts_;

  void cycle(int level, const Vector& b, Vector& x) const;

  friend AmgHierarchy build_amg(const CsrMatrix&, const std::vector<int>&,
                                const Matrix&, const AmgOptions&);
};

/// node_of_dof groups dofs that must stay in one aggregate (e.g. the d
/// displacement components of a vertex); near_nullspace columns are the
/// smooth modes the coarse spaces must represent (constants, rigid body).
AmgHierarchy build_amg(const CsrMatrix& A, const std::vector<int>& node_of_dof,
                       const Matrix& near_nullspace, const AmgOptions& opts = {});

/// Scalar convenience overload: one dof per node, constant near-nullspace.
AmgHierarchy build_amg(const CsrMatrix& A, const AmgOptions& opts = {});

/// Rigid body modes of the displacement block (d translations + rotations),
/// zeroed on constrained dofs; the standard elasticity near-nullspace.
Matrix rigid_body_modes(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints);

enum class PrecKind { exact, amg, diagonal };

PrecKind preconditioner_kind_from_string(const std::string& s);

/// Block-diagonal approximation P^-1 = diag(M_uu^-1, M_phiphi^-1), frozen at
/// setup so GMRES sees a stationary preconditioner.
class BlockPreconditioner {
 public:
  struct NullspaceInfo {
    std::vector<int> u_node_of_dof;
    Matrix u_modes;
    std::vector<int> phi_node_of_dof;
    Matrix phi_modes;
  };

  static BlockPreconditioner build(const BlockSystem& sys, PrecKind kind,
                                   const AmgOptions& amg_opts = {},
                                   const NullspaceInfo* nullspace = nullptr);

  Vector apply(const Vector& r) const;
  PrecKind kind() const { return kind_; }

 private:
  PrecKind kind_ = PrecKind::exact;
  int n_u_ = 0, n_phi_ = 0;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> lu_u_, lu_phi_;
  std::shared_ptr<AmgHierarchy> amg_u_, amg_phi_;
  Vector inv_diag_u_, inv_diag_phi_;
};

/// Element sparsity of the three Jacobian blocks after constraint
/// condensation (row -> sorted column list).
struct BlockSparsity {
  std::vector<std::vector<int>> uu;
  std::vector<std::vector<int>> phiu;
  std::vector<std::vector<int>> phiphi;
};

BlockSparsity assemble_pattern(const Mesh& mesh, const DofMap& map,
                               const ConstraintSet& constraints);

/// Matrix Market coordinate format (1-based, general).
void write_matrix_market(const std::string& path, const CsrMatrix& A);

} // namespace crackfield

#endif
