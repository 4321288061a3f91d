#pragma once

#include <cmath>

namespace curvflow::detail {

// Branch-free sine/cosine that the compiler can vectorize. Quadrant
// reduction with a three-part pi/2 and the fdlibm kernel polynomials; error
// is within a few ulp for |x| < 1e6. Callers fall back to std::sin/cos
// beyond that.
inline void sincos_kernel(double x, double& s, double& c) {
  constexpr double kTwoOverPi = 0.63661977236758134308;
  constexpr double p1 = 1.57079632673412561417e+00;
  constexpr double p2 = 6.07710050650619224932e-11;
  constexpr double p3 = 2.02226624879595063154e-21;
  constexpr double kRound = 6755399441055744.0;  // 1.5 * 2^52
  const double q = (x * kTwoOverPi + kRound) - kRound;
  const double r = ((x - q * p1) - q * p2) - q * p3;
  const double z = r * r;
  const double sp =
      r + r * z *
              (-1.66666666666666307295e-01 +
               z * (8.33333333332211858878e-03 +
                    z * (-1.98412698295895385996e-04 +
                         z * (2.75573136213857245213e-06 +
                              z * (-2.50507477628578072866e-08 + z * 1.58962301576546568060e-10)))));
  const double cp =
      1.0 - 0.5 * z +
      z * z *
          (4.16666666666665929218e-02 +
           z * (-1.38888888888730564116e-03 +
                z * (2.48015872888517045348e-05 +
                     z * (-2.75573141792967388112e-07 +
                          z * (2.08757008419747316778e-09 + z * -1.13585365213876817300e-11)))));
  const long qi = static_cast<long>(q) & 3;
  const double ss = (qi & 1) ? cp : sp;
  const double cc = (qi & 1) ? sp : cp;
  s = (qi & 2) ? -ss : ss;
  c = ((qi + 1) & 2) ? -cc : cc;
}

constexpr double kFastTrigLimit = 1e6;

}  // namespace curvflow::detail
