#ifndef CRACKFIELD_MODEL_HPP
#define CRACKFIELD_MODEL_HPP

#include "crackfield/fem.hpp"
#include "crackfield/linsolve.hpp"
#include "crackfield/mesh.hpp"
#include "crackfield/types.hpp"

namespace crackfield {

enum class EpsMode { tied, fixed };
enum class PressureCoupling { extrapolated, current };

struct Material {
  double E = 1.0;
  double nu = 0.2;
  double G_c = 1.0;
  double pressure = 1e-3;
  double l0 = 1.0;              // crack half-length
  double kappa_factor = 1e-12;  // kappa = kappa_factor * min cell edge
  EpsMode eps_mode = EpsMode::tied;
  double c_eps = 2.0;           // tied: eps = c_eps * crack-band cell diameter
  double eps_fixed = 0.0625;
  PressureCoupling pressure_coupling = PressureCoupling::extrapolated;

  double mu() const { return E / (2.0 * (1.0 + nu)); }
  double lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }

  void validate() const;
};

/// Linear stress-strain law sigma = 2 mu e(u) + lambda tr(e(u)) I.
Eigen::Matrix3d sigma(const Eigen::Matrix3d& grad_u, const Material& mat, int d);

/// Regularization parameters for the current mesh: eps from the material's
/// mode (tied uses the crack-band cell diameter) and kappa from the minimum
/// active edge.
struct Regularization {
  double eps = 0.0;
  double kappa = 0.0;
};

Regularization resolve_regularization(const Mesh& mesh, const Material& mat, double band_edge);

/// Minimum active cell edge among cells whose closure meets the crack slit
/// (2d: segment y=0, |x| <= l0; 3d: disk z=0, radius l0).
double slit_band_edge(const Mesh& mesh, const Material& mat);

/// Loading-step history for the quasi-static evolution.
struct FractureState {
  FieldVector solution;  // stacked (u, phi)
  Vector phi_old;        // previous loading step (constraint bound), length n_phi
  Vector phi_prev2;      // two steps back, extrapolation history
  int step = 0;          // loading step index n
};

/// phi_old for n <= 2, else 2 phi^{n-1} - phi^{n-2}, clipped nodally to [0,1].
Vector extrapolate_phi(const FractureState& state);

/// Residual (F_u, F_phi) of the equality system; constrained entries are
/// condensed into their masters and then zeroed.
Vector assemble_residual(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints,
                         const Material& mat, const Regularization& reg,
                         const Vector& solution, const Vector& phi_tilde);

/// Exact Gateaux derivative of assemble_residual with phi_tilde held fixed;
/// the M_uphi block vanishes by construction.
BlockSystem assemble_jacobian(const Mesh& mesh, const DofMap& map, const ConstraintSet& constraints,
                              const Material& mat, const Regularization& reg,
                              const Vector& solution, const Vector& phi_tilde);

/// Nodal crack seed: phi = 0 in a slab of half-width band_half around the
/// slit, 1 elsewhere. band_half <= 0 selects one cell layer (the minimum
/// slit-cell edge); band_edge reports the half-width actually used.
struct CrackSeed {
  Vector phi;
  double band_edge = 0.0;
};

CrackSeed initial_crack(const Mesh& mesh, const DofMap& map, const Material& mat,
                        double band_half = 0.0);

} // namespace crackfield

#endif
