#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace odm {

// Principal branch of the product logarithm, W0(x) e^{W0(x)} = x for x >= -1/e.
//
// Initial guess: branch-point series in p = sqrt(2(ex + 1)) below x = -1/4,
// Winitzki's log1p form elsewhere. Refined with Halley steps (at most 50).
template <typename Scalar>
Scalar lambert_w0(Scalar x) {
  using std::abs;
  using std::exp;
  using std::log;
  using std::log1p;
  using std::sqrt;

  if (std::isnan(x)) throw std::domain_error("lambert_w0: NaN argument");
  const Scalar e = std::numbers::e_v<Scalar>;
  // e x + 1 with the rounding error of e folded back in.
  const Scalar e_lo = static_cast<Scalar>(static_cast<long double>(std::numbers::e_v<long double>) -
                                          static_cast<long double>(e));
  const Scalar dist = std::fma(e, x, Scalar(1)) + e_lo * x;
  if (dist < Scalar(0)) {
    if (dist > Scalar(-8) * std::numeric_limits<Scalar>::epsilon()) return Scalar(-1);
    throw std::domain_error("lambert_w0: argument below -1/e");
  }
  if (dist == Scalar(0)) return Scalar(-1);
  if (x == Scalar(0)) return Scalar(0);
  if (std::isinf(x)) return x;

  Scalar w;
  if (x < Scalar(-0.25)) {
    const Scalar p = sqrt(Scalar(2) * dist);
    w = Scalar(-1) + p * (Scalar(1) + p * (Scalar(-1) / Scalar(3) + p * Scalar(11) / Scalar(72)));
  } else {
    const Scalar l = log1p(x);
    w = l * (Scalar(1) - log1p(l) / (Scalar(2) + l));
  }

  const Scalar tol = Scalar(4) * std::numeric_limits<Scalar>::epsilon();
  for (int iter = 0; iter < 50; ++iter) {
    const Scalar ew = exp(w);
    const Scalar f = w * ew - x;
    const Scalar wp1 = w + Scalar(1);
    if (f == Scalar(0) || wp1 == Scalar(0)) break;
    const Scalar step = f / (ew * wp1 - (w + Scalar(2)) * f / (Scalar(2) * wp1));
    w -= step;
    if (abs(step) <= tol * (Scalar(1) + abs(w))) break;
  }
  return w < Scalar(-1) ? Scalar(-1) : w;
}

/// v -> 2b (e^{W0((v - 1)/e) + 1} - 1): maps mutual information to a bound on
/// the expected one-step improvement in model risk. Non-negative, increasing.
template <typename Scalar>
Scalar g_transform(Scalar v, Scalar b) {
  using std::exp;
  if (v < Scalar(0)) throw std::domain_error("g_transform: negative information value");
  const Scalar e = std::numbers::e_v<Scalar>;
  const Scalar w = lambert_w0((v - Scalar(1)) / e);
  return Scalar(2) * b * std::expm1(w + Scalar(1));
}

/// Tradeoff coefficient 1 / g(log m) that keeps the adjusted request cost non-negative.
template <typename Scalar>
Scalar kappa0(int m, Scalar b) {
  if (m < 2) throw std::invalid_argument("kappa0: m must be at least 2");
  return Scalar(1) / g_transform(std::log(static_cast<Scalar>(m)), b);
}

}  // namespace odm
