#pragma once

namespace subsamp {

// Regularized lower incomplete gamma P(a, x), series expansion for
// x < a + 1 and continued fraction otherwise. Relative accuracy ~1e-14.
double gamma_p(double a, double x);

// Upper tail Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

}  // namespace subsamp
