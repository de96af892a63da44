#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "rotodip/errors.hpp"

namespace rotodip {

/// Sparse trivariate polynomial with double coefficients, keyed by exponent
/// triples (p, q, r).
class Poly3 {
 public:
  using Key = std::array<int, 3>;

  Poly3() = default;
  static Poly3 monomial(int p, int q, int r, double c = 1.0) {
    Poly3 out;
    out.add(p, q, r, c);
    return out;
  }

  void add(int p, int q, int r, double c) {
    if (c == 0.0) return;
    const Key k{p, q, r};
    auto it = c_.find(k);
    if (it == c_.end())
      c_.emplace(k, c);
    else {
      it->second += c;
      if (it->second == 0.0) c_.erase(it);
    }
  }
  double coeff(int p, int q, int r) const {
    auto it = c_.find({p, q, r});
    return it == c_.end() ? 0.0 : it->second;
  }

  Poly3& operator+=(const Poly3& o) {
    for (const auto& [k, v] : o.c_) add(k[0], k[1], k[2], v);
    return *this;
  }
  Poly3& operator-=(const Poly3& o) {
    for (const auto& [k, v] : o.c_) add(k[0], k[1], k[2], -v);
    return *this;
  }
  Poly3& operator*=(double s) {
    if (s == 0.0) {
      c_.clear();
      return *this;
    }
    for (auto& [k, v] : c_) v *= s;
    return *this;
  }
  friend Poly3 operator*(Poly3 p, double s) { return p *= s; }
  friend Poly3 operator+(Poly3 a, const Poly3& b) { return a += b; }
  friend Poly3 operator-(Poly3 a, const Poly3& b) { return a -= b; }

  /// Multiply by the monomial x^p y^q z^r.
  Poly3 shifted(int p, int q, int r) const {
    Poly3 out;
    for (const auto& [k, v] : c_) out.add(k[0] + p, k[1] + q, k[2] + r, v);
    return out;
  }

  /// Partial derivative along axis (0 = x, 1 = y, 2 = z).
  Poly3 derivative(int axis) const {
    Poly3 out;
    for (const auto& [k, v] : c_) {
      if (k[axis] == 0) continue;
      Key d = k;
      --d[axis];
      out.add(d[0], d[1], d[2], v * k[axis]);
    }
    return out;
  }

  /// Coefficient-wise rescale for the substitution x -> sx*x etc:
  /// returns q with q(x,y,z) = (*this)(sx*x, sy*y, sz*z).
  Poly3 substituted_scale(double sx, double sy, double sz) const {
    Poly3 out;
    for (const auto& [k, v] : c_)
      out.add(k[0], k[1], k[2],
              v * std::pow(sx, k[0]) * std::pow(sy, k[1]) * std::pow(sz, k[2]));
    return out;
  }

  double eval(double x, double y, double z) const {
    double acc = 0.0;
    for (const auto& [k, v] : c_)
      acc += v * std::pow(x, k[0]) * std::pow(y, k[1]) * std::pow(z, k[2]);
    return acc;
  }

  int degree() const {
    int d = -1;
    for (const auto& [k, v] : c_) d = std::max(d, k[0] + k[1] + k[2]);
    return d;  // -1 for the zero polynomial
  }

  std::size_t term_count() const { return c_.size(); }
  const std::map<Key, double>& terms() const { return c_; }

 private:
  std::map<Key, double> c_;
};

/// Ordered monomial basis {x^p y^q z^r : p+q+r <= n_max}, graded by total
/// degree with a fixed lexicographic order inside each degree.
struct PolyBasis {
  int n_max = 0;
  std::vector<std::array<int, 3>> monomials;

  static PolyBasis make(int n_max) {
    if (n_max < 0) throw DomainError("PolyBasis: n_max must be >= 0");
    PolyBasis b;
    b.n_max = n_max;
    for (int d = 0; d <= n_max; ++d)
      for (int p = d; p >= 0; --p)
        for (int q = d - p; q >= 0; --q) b.monomials.push_back({p, q, d - p - q});
    return b;
  }

  std::size_t size() const { return monomials.size(); }

  /// Flat index of (p, q, r); -1 when outside the basis.
  int index_of(int p, int q, int r) const {
    if (p < 0 || q < 0 || r < 0) return -1;
    const int d = p + q + r;
    if (d > n_max) return -1;
    // monomials of degree < d occupy d(d+1)(d+2)/6 slots
    int base = d * (d + 1) * (d + 2) / 6;
    // inside degree d: p descending, then q descending
    int off = 0;
    for (int pp = d; pp > p; --pp) off += d - pp + 1;
    off += d - p - q;
    return base + off;
  }
};

}  // namespace rotodip
