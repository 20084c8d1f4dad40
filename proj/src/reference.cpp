#include "crackfield/reference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crackfield {

void SneddonParams::validate() const {
  if (!(E > 0.0)) throw std::invalid_argument("SneddonParams: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("SneddonParams: nu must be in [0, 0.5)");
  if (!(l0 > 0.0)) throw std::invalid_argument("SneddonParams: l0 must be positive");
  if (dimension != 2 && dimension != 3)
    throw std::invalid_argument("SneddonParams: dimension must be 2 or 3");
}

double tcv_exact(const SneddonParams& p) {
  p.validate();
  const double f = p.pressure * (1.0 - p.nu * p.nu) / p.E;
  if (p.dimension == 2) return 2.0 * std::numbers::pi * f * p.l0 * p.l0;
  return 16.0 / 3.0 * f * p.l0 * p.l0 * p.l0;
}

double cod_exact(const SneddonParams& p, double rho) {
  p.validate();
  if (rho < 0.0) throw std::invalid_argument("cod_exact: rho must be nonnegative");
  if (rho > p.l0) return 0.0;
  const double c = (p.dimension == 2) ? 2.0 : 4.0 / std::numbers::pi;
  const double t = rho / p.l0;
  return c * p.pressure * p.l0 * (1.0 - p.nu * p.nu) / p.E * std::sqrt(1.0 - t * t);
}

RateFit richardson(const std::vector<double>& values, double ratio) {
  if (values.size() < 3) throw std::invalid_argument("richardson: need at least 3 values");
  if (!(ratio > 1.0)) throw std::invalid_argument("richardson: ratio must exceed 1");
  RateFit fit;
  const std::size_t k = values.size() - 1;
  const double d1 = values[k - 1] - values[k - 2];
  const double d2 = values[k] - values[k - 1];
  if (d1 == 0.0 || d2 == 0.0 || d1 / d2 <= 0.0) return fit;  // degenerate, q undefined
  fit.order = std::log(d1 / d2) / std::log(ratio);
  fit.limit = values[k] + d2 / (std::pow(ratio, fit.order) - 1.0);
  fit.valid = std::isfinite(fit.order) && std::isfinite(fit.limit);
  return fit;
}

double fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [param, err] : pairs)
    if (err > 0.0 && param > 0.0) pts.emplace_back(std::log(param), std::log(err));
  if (pts.size() < 2) throw std::invalid_argument("fit_rate: need at least 2 positive pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> domain_error_table(const std::vector<double>& extrapolated, double exact) {
  if (extrapolated.empty()) throw std::invalid_argument("domain_error_table: no entries");
  std::vector<double> out;
  out.reserve(extrapolated.size());
  for (double v : extrapolated) out.push_back(100.0 * std::abs(v - exact) / std::abs(exact));
  return out;
}

} // namespace crackfield
