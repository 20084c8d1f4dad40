#ifndef CRACKFIELD_REFERENCE_HPP
#define CRACKFIELD_REFERENCE_HPP

#include <vector>

namespace crackfield {

struct SneddonParams {
  double pressure = 1e-3;
  double l0 = 1.0;
  double E = 1.0;
  double nu = 0.2;
  int dimension = 2;

  void validate() const;
};

/// Closed-form total crack volume:
/// 2d: 2 pi p l0^2 (1-nu^2)/E,  3d: 16 p l0^3 (1-nu^2)/(3E).
double tcv_exact(const SneddonParams& p);

/// Closed-form opening at radius rho: c p l0 (1-nu^2)/E sqrt(1-(rho/l0)^2),
/// c = 2 (2d) or 4/pi (3d); zero beyond the tip.
double cod_exact(const SneddonParams& p, double rho);

struct RateFit {
  double order = 0.0;        // fitted q
  double limit = 0.0;        // extrapolated v*
  bool valid = false;
};

/// Richardson extrapolation from the last three entries of a sequence at
/// constant refinement ratio r: q = log_r(d1/d2), v* = v_k + d2/(r^q - 1).
RateFit richardson(const std::vector<double>& values, double ratio = 2.0);

/// Least-squares slope of log(error) vs log(parameter); nonpositive errors
/// are excluded.
double fit_rate(const std::vector<std::pair<double, double>>& pairs);

/// Percent errors 100 |v* - exact| / exact for a list of extrapolated values.
std::vector<double> domain_error_table(const std::vector<double>& extrapolated, double exact);

} // namespace crackfield

#endif
