#include "diva/errors.hpp"
#include "diva/oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

namespace diva {

// E/L = -4 int_0^inf J0(w) J1(w) / (w (1 + exp(w U / 2))) dw
double lieb_wu_half_filling(double u_over_t) {
  if (!(u_over_t >= 0.0) || !std::isfinite(u_over_t)) throw std::invalid_argument("U/t must be finite and nonnegative");
  if (u_over_t == 0.0) return -4.0 / std::numbers::pi;
  auto integrand = [u_over_t](double w) {
    if (w == 0.0) return 0.5 / (1.0 + 1.0);  // J0 J1 / w -> 1/2
    const double x = 0.5 * w * u_over_t;
    if (x > 700.0) return 0.0;
    return std::cyl_bessel_j(0.0, w) * std::cyl_bessel_j(1.0, w) / (w * (1.0 + std::exp(x)));
  };
  const double w_max = std::min(8000.0, 90.0 / u_over_t + 50.0);
  const double panel = std::min(std::numbers::pi, 20.0 / u_over_t);
  double sum = 0.0;
  for (double a = 0.0; a < w_max; a += panel) {
    const double b = std::min(a + panel, w_max);
    double err = 0.0;
    const double part = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 3, 1e-13, &err);
    if (!std::isfinite(part) || err > 1e-10) throw QuadratureError("Lieb-Wu quadrature did not converge");
    sum += part;
  }
  return -4.0 * sum;
}

}  // namespace diva
