#include "vecchia/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace vecchia {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIterations = 100000;

// Power-series coefficients of 1/Gamma(z) = sum_k c[k] z^(k+1)
// (Abramowitz & Stegun 6.1.34).
constexpr double kReciprocalGamma[] = {
    1.0000000000000000,  0.5772156649015329,  -0.6558780715202538, -0.0420026350340952,
    0.1665386113822915,  -0.0421977345555443, -0.0096219715278770, 0.0072189432466630,
    -0.0011651675918591, -0.0002152416741149, 0.0001280502823882,  -0.0000201348547807,
    -0.0000012504934821, 0.0000011330272320,  -0.0000002056338417, 0.0000000061160950,
    0.0000000050020075,  -0.0000000011812746, 0.0000000001043427,  0.0000000000077823,
    -0.0000000000036968, 0.0000000000005100,  -0.0000000000000206, -0.0000000000000054,
    0.0000000000000014,  0.0000000000000001,
};

struct TemmeGammas {
  double gam1;   // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
  double gam2;   // (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

// 1/Gamma(1+z) = sum_k c[k] z^k; split into even and odd powers so gam1 has
// no cancellation at small mu.
TemmeGammas temme_gammas(double mu) {
  double even = 0.0;  // sum over k even of c[k] mu^k
  double odd = 0.0;   // sum over k odd of c[k] mu^(k-1)
  const double mu2 = mu * mu;
  constexpr int terms = static_cast<int>(std::size(kReciprocalGamma));
  for (int k = terms - 1; k >= 0; --k) {
    if (k % 2 == 0) {
      even = even * mu2 + kReciprocalGamma[k];
    } else {
      odd = odd * mu2 + kReciprocalGamma[k];
    }
  }
  const double gampl = even + mu * odd;
  const double gammi = even - mu * odd;
  return {-odd, even, gampl, gammi};
}

void check_domain(double nu, double x) {
  if (!(nu > 0.0) || !(x > 0.0) || !std::isfinite(nu) || !std::isfinite(x)) {
    throw std::domain_error("bessel_k requires nu > 0 and x > 0");
  }
}

// `scaled` is exp(x) * K(x).
double finish(double scaled, double x, BesselScaling scaling) {
  if (scaling == BesselScaling::exponential) return scaled;
  const double value = scaled * std::exp(-x);
  if (!std::isfinite(value)) throw std::overflow_error("bessel_k overflow; request exponential scaling");
  return value;
}

}  // namespace

bool is_half_integer(double nu) {
  const double shifted = nu - 0.5;
  return shifted > -1e-12 && std::abs(shifted - std::round(shifted)) <= 1e-12;
}

namespace detail {

double bessel_k_half_integer(int n, double x, BesselScaling scaling) {
  if (!(x > 0.0) || n < 0) throw std::domain_error("bessel_k requires x > 0");
  // K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_{k=0}^n (n+k)! / (k! (n-k)!) (2x)^{-k}
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= n; ++k) {
    term *= static_cast<double>((n + k) * (n - k + 1)) / (static_cast<double>(k) * 2.0 * x);
    sum += term;
  }
  const double scaled = std::sqrt(std::numbers::pi / (2.0 * x)) * sum;
  return finish(scaled, x, scaling);
}

double bessel_k_general(double nu, double x, BesselScaling scaling) {
  check_domain(nu, x);
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;  // |mu| <= 1/2
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;

  // k_mu and k_mu1 hold exp(x)*K_mu(x) and exp(x)*K_{mu+1}(x).
  double k_mu;
  double k_mu1;
  if (x < 2.0) {
    const double half_x = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(half_x);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = half_x * half_x;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIterations; ++i) {
      ff = (i * ff + p + q) / (i * i - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxIterations) throw std::runtime_error("bessel_k: Temme series did not converge");
    const double ex = std::exp(x);
    k_mu = sum * ex;
    k_mu1 = sum1 * xi2 * ex;
  } else {
    // Steed's method for the continued fraction CF2 (Temme 1975).
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= kMaxIterations; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxIterations) throw std::runtime_error("bessel_k: continued fraction did not converge");
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
  }

  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  if (!std::isfinite(k_mu)) throw std::overflow_error("bessel_k overflow");
  return finish(k_mu, x, scaling);
}

}  // namespace detail

double bessel_k(double nu, double x, BesselScaling scaling) {
  check_domain(nu, x);
  if (is_half_integer(nu)) {
    return detail::bessel_k_half_integer(static_cast<int>(std::lround(nu - 0.5)), x, scaling);
  }
  return detail::bessel_k_general(nu, x, scaling);
}

}  // namespace vecchia
