#ifndef SUPERFACE_DETMATH_HPP
#define SUPERFACE_DETMATH_HPP

// Deterministic scalar math for the fixed-function pipelines (degradation,
// RNG transforms, rasterization). libm's exp/log/cos are not correctly
// rounded and differ between platforms; these are plain polynomial
// evaluations over IEEE doubles, so a fixed input gives the same bits
// everywhere as long as FP contraction is disabled.

#include <cmath>
#include <cstdint>
#include <limits>

namespace sf {
namespace detmath {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.6931471805599453094172321;

// exp(x), Cephes-style: reduce x = n*ln2 + r, |r| <= ln2/2, then a degree-6
// rational approximation of exp(r).
inline double dexp(double x) {
  if (x != x) return x;
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  if (x < -745.0) return 0.0;

  double n = std::floor(x / kLn2 + 0.5);
  // split ln2 for extra precision in the reduction
  const double ln2_hi = 6.93145751953125e-1;
  const double ln2_lo = 1.42860682030941723212e-6;
  double r = x - n * ln2_hi;
  r = r - n * ln2_lo;

  // exp(r) ~ 1 + 2r P(r^2) / (Q(r^2) - r P(r^2))
  const double p0 = 1.26177193074810590878e-4;
  const double p1 = 3.02994407707441961300e-2;
  const double p2 = 9.99999999999999999910e-1;
  const double q0 = 3.00198505138664455042e-6;
  const double q1 = 2.52448340349684104192e-3;
  const double q2 = 2.27265548208155028766e-1;
  const double q3 = 2.00000000000000000005e0;
  double r2 = r * r;
  double p = r * (p2 + r2 * (p1 + r2 * p0));
  double q = q3 + r2 * (q2 + r2 * (q1 + r2 * q0));
  double e = 1.0 + 2.0 * p / (q - p);

  // scale by 2^n through the exponent bits
  int64_t ni = static_cast<int64_t>(n);
  uint64_t bits;
  __builtin_memcpy(&bits, &e, 8);
  int64_t expo = static_cast<int64_t>((bits >> 52) & 0x7ff) + ni;
  if (expo <= 0) return e * std::ldexp(1.0, static_cast<int>(ni));  // subnormal range
  if (expo >= 0x7ff) return std::numeric_limits<double>::infinity();
  bits = (bits & ~(0x7ffULL << 52)) | (static_cast<uint64_t>(expo) << 52);
  __builtin_memcpy(&e, &bits, 8);
  return e;
}

// natural log, Cephes ndtrl-style reduction: x = m * 2^e with m in [sqrt(1/2), sqrt(2)).
inline double dlog(double x) {
  if (x != x) return x;
  if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  int e = 0;
  double m = std::frexp(x, &e);  // m in [0.5, 1)
  if (m < 0.70710678118654752440) {
    m *= 2.0;
    e -= 1;
  }
  double z = m - 1.0;
  double zz = z * z;
  // log(1+z) ~ z - z^2/2 + z^3 P(z)/Q(z)
  const double P[6] = {1.01875663804580931796e-4, 4.97494994976747001425e-1,
                       4.70579119878881725854e0,  1.44989225341610930846e1,
                       1.79368678507819816313e1,  7.70838733755885391666e0};
  const double Q[5] = {1.12873587189167450590e1, 4.52279145837532221105e1,
                       8.29875266912776603211e1, 7.11544750618563894466e1,
                       2.31251620126765340583e1};
  double p = P[0];
  for (int i = 1; i < 6; ++i) p = p * z + P[i];
  double q = z + Q[0];
  for (int i = 1; i < 5; ++i) q = q * z + Q[i];
  double y = z * zz * p / q;
  double de = static_cast<double>(e);
  y += de * -2.121944400546905827679e-4;
  y -= 0.5 * zz;
  double r = z + y;
  r += de * 0.693359375;
  return r;
}

// sin/cos via argument reduction to [-pi/4, pi/4] and minimax polynomials.
namespace detail {
inline double sin_poly(double x) {
  double z = x * x;
  double p = 1.58962301576546568060e-10;
  p = p * z - 2.50507477628578072866e-8;
  p = p * z + 2.75573136213857245213e-6;
  p = p * z - 1.98412698295895385996e-4;
  p = p * z + 8.33333333332211858878e-3;
  p = p * z - 1.66666666666666307295e-1;
  return x + x * z * p;
}
inline double cos_poly(double x) {
  double z = x * x;
  double p = -1.13585365213876817300e-11;
  p = p * z + 2.08757008419747316778e-9;
  p = p * z - 2.75573141792967388112e-7;
  p = p * z + 2.48015872888517179954e-5;
  p = p * z - 1.38888888888730564116e-3;
  p = p * z + 4.16666666666665929218e-2;
  return 1.0 - 0.5 * z + z * z * p;
}
}  // namespace detail

inline void dsincos(double x, double& s, double& c) {
  double ax = std::fabs(x);
  // quadrant reduction; fine for the |x| <= ~1e6 arguments we feed it
  double j = std::floor(ax / (kPi / 4.0));
  int64_t q = static_cast<int64_t>(j);
  if (q & 1) {
    q += 1;
    j += 1.0;
  }
  q &= 7;
  const double pio4_hi = 7.85398125648498535156e-1;
  const double pio4_me = 3.77489470793079817668e-8;
  const double pio4_lo = 2.69515142907905952645e-15;
  double z = ((ax - j * pio4_hi) - j * pio4_me) - j * pio4_lo;
  double sp = detail::sin_poly(z), cp = detail::cos_poly(z);
  double ss, cc;
  switch (q) {
    case 0: ss = sp; cc = cp; break;
    case 2: ss = cp; cc = -sp; break;
    case 4: ss = -sp; cc = -cp; break;
    default: ss = -cp; cc = sp; break;  // q == 6
  }
  if (x < 0.0) ss = -ss;
  s = ss;
  c = cc;
}

inline double dsin(double x) {
  double s, c;
  dsincos(x, s, c);
  return s;
}
inline double dcos(double x) {
  double s, c;
  dsincos(x, s, c);
  return c;
}

}  // namespace detmath
}  // namespace sf

#endif
