#include "curvflow/predicted_rate.hpp"

#include <numeric>
#include <stdexcept>

namespace curvflow {

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw std::invalid_argument("Rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num = g == 0 ? 0 : n / g;
  den = g == 0 ? 1 : d / g;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}
Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}
Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num * b.num, a.den * b.den);
}

std::string RateKind::describe() const {
  const std::string ns = std::to_string(n);
  switch (type) {
    case Type::LK: return "lk(n=" + ns + ", k=" + std::to_string(index) + ")";
    case Type::Alpha: return "alpha(n=" + ns + ")";
    case Type::AlphaSq: return "alpha_sq(n=" + ns + ")";
    case Type::KFrame: return "kframe(n=" + ns + ", k=" + std::to_string(index) + ")";
    case Type::Codim: return "codim(n=" + ns + ", m=" + std::to_string(index) + ")";
  }
  return "unknown";
}

Rational predicted_rate_coefficient(const RateKind& kind) {
  const std::int64_t n = kind.n;
  const std::int64_t k = kind.index;
  if (n < 2) throw std::invalid_argument("predicted_rate: n must be >= 2");
  switch (kind.type) {
    case RateKind::Type::LK:
      if (k < 0 || k > n - 1) throw std::invalid_argument("predicted_rate: k out of range for lk");
      return Rational((n - k - 1) * (n + 1) * (k + 1), 2 * n * (n + 2));
    case RateKind::Type::Alpha:
      return Rational((n - 1) * (n + 1), 2 * n * (n + 2));
    case RateKind::Type::AlphaSq:
      return Rational(n - 1, n);
    case RateKind::Type::KFrame:
      if (k < 1 || k > n - 1) throw std::invalid_argument("predicted_rate: k out of range for kframe");
      return Rational(k * (n - k), n);
    case RateKind::Type::Codim:
      if (k < 1 || k > n - 1) throw std::invalid_argument("predicted_rate: m out of range for codim");
      return Rational(k * (n - k) * (n + 1), 2 * n * (n + 2));
  }
  throw std::invalid_argument("predicted_rate: unknown kind");
}

double predicted_rate(const RateKind& kind, double mu2) {
  return predicted_rate_coefficient(kind).value() * mu2;
}

DriftDecomposition drift_decomposition(int n_, int k_) {
  const std::int64_t n = n_, k = k_;
  if (n < 2 || k < 0 || k > n - 1) throw std::invalid_argument("drift_decomposition: bad (n, k)");
  DriftDecomposition d;
  d.norm_drift = Rational((n - 1) * (n + 1), 2 * n * (n + 2));
  d.trace_drift = Rational((n + 1) * k * (n - k), 2 * n * (n + 2));
  d.cross_variation = Rational(-(n - 1) * (k + 2) + 2 * (n - k - 1), n * (n + 2));
  return d;
}

}  // namespace curvflow
