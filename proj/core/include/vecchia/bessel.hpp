#pragma once

namespace vecchia {

enum class BesselScaling {
  none,
  exponential,  ///< return exp(x) * K_nu(x)
};

/// Modified Bessel function of the second kind, K_nu(x).
///
/// Half-integer orders (within 1e-12) use the terminating closed form.
/// Other orders reduce to |mu| <= 1/2 and use Temme's series for x < 2 or
/// Steed's continued fraction otherwise, followed by upward recurrence,
/// which is stable for K. Relative accuracy is better than 1e-12 over
/// nu in (0, 10], x in [1e-8, 50].
///
/// Throws std::domain_error for nu <= 0 or x <= 0 (or non-finite input), and
/// std::overflow_error when an unscaled result is not representable.
double bessel_k(double nu, double x, BesselScaling scaling = BesselScaling::none);

/// True when nu is within 1e-12 of n + 1/2 for some integer n >= 0.
bool is_half_integer(double nu);

namespace detail {
/// The series / continued-fraction path with no half-integer shortcut.
/// Exposed so tests can compare both routes at half-integer orders.
double bessel_k_general(double nu, double x, BesselScaling scaling);
/// Closed form for nu = n + 1/2.
double bessel_k_half_integer(int n, double x, BesselScaling scaling);
}  // namespace detail

}  // namespace vecchia
