#pragma once

// Closed-form expected growth rates, evaluated in exact rational arithmetic
// and scaled by mu2 at the end.

#include <cstdint>
#include <string>

namespace curvflow {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
};

struct RateKind {
  enum class Type { LK, Alpha, AlphaSq, KFrame, Codim };
  Type type = Type::LK;
  int n = 3;
  int index = 0;  // k for LK / KFrame, m for Codim

  static RateKind lk(int n, int k) { return {Type::LK, n, k}; }
  static RateKind alpha(int n) { return {Type::Alpha, n, 0}; }
  static RateKind alpha_sq(int n) { return {Type::AlphaSq, n, 0}; }
  static RateKind kframe(int n, int k) { return {Type::KFrame, n, k}; }
  static RateKind codim(int n, int m) { return {Type::Codim, n, m}; }

  std::string describe() const;
};

/// Rate per unit mu2 as an exact fraction. Throws std::invalid_argument for
/// out-of-range indices.
Rational predicted_rate_coefficient(const RateKind& kind);

/// predicted_rate_coefficient(kind) * mu2.
double predicted_rate(const RateKind& kind, double mu2);

/// Drift pieces of d(Tr S^(k) ||alpha||) per unit mu2: the ||alpha|| drift,
/// the Tr S^(k) drift and the cross-variation term. Their sum is the LK rate.
struct DriftDecomposition {
  Rational norm_drift;
  Rational trace_drift;
  Rational cross_variation;

  Rational total() const { return norm_drift + trace_drift + cross_variation; }
};

DriftDecomposition drift_decomposition(int n, int k);

}  // namespace curvflow
