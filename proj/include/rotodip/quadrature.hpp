#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "rotodip/errors.hpp"

namespace rotodip {

struct QuadOptions {
  double rel_tol = 1e-13;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

namespace quad_detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK values).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

template <class F>
Interval gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double res_g = fc * kWg[3];
  double res_k = fc * kWgk[7];
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXgk[i];
    const double f1 = f(c - x);
    const double f2 = f(c + x);
    res_k += kWgk[i] * (f1 + f2);
    if (i % 2 == 1) res_g += kWg[i / 2] * (f1 + f2);
  }
  res_k *= h;
  res_g *= h;
  double err = std::abs(res_k - res_g);
  // QUADPACK-style error sharpening
  err = std::pow(200.0 * err, 1.5);
  if (err > std::abs(res_k) || !std::isfinite(err)) err = std::abs(res_k - res_g);
  return {a, b, res_k, err};
}

}  // namespace quad_detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
/// Throws ConvergenceError if the tolerance cannot be met within the
/// interval budget.
template <class F>
double integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  using quad_detail::Interval;
  std::priority_queue<Interval> heap;
  Interval whole = quad_detail::gk15(f, a, b);
  double total = whole.value;
  double err_sum = whole.error;
  heap.push(whole);
  int n_intervals = 1;
  while (true) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (err_sum <= tol) return total;
    if (n_intervals >= opt.max_intervals)
      throw ConvergenceError("integrate: interval budget exhausted, err=" +
                             std::to_string(err_sum) + " tol=" + std::to_string(tol));
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b)
      throw ConvergenceError("integrate: interval collapsed below machine resolution");
    Interval left = quad_detail::gk15(f, worst.a, mid);
    Interval right = quad_detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err_sum += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++n_intervals;
  }
}

}  // namespace rotodip
