#pragma once

// Exterior-algebra kernels for pushed tangent frames: Gram inner products of
// simple k-vectors, the volume factor ||alpha||, the elementary derivation
// tau^j_l, and two independent evaluations of Tr S^(k), the k-th elementary
// symmetric polynomial of the principal curvatures.
//
// All indices are 0-based. Sign factors that depend on 1-based positions are
// converted internally.

#include <vector>

#include "curvflow/types.hpp"

namespace curvflow {

/// Ordered tangent basis u_0..u_{n-2} of a hypersurface in R^n, stored as the
/// columns of an n x (n-1) matrix. Orthonormal only at t = 0.
struct Frame {
  Mat vectors;

  int ambient_dim() const { return static_cast<int>(vectors.rows()); }
  int size() const { return static_cast<int>(vectors.cols()); }
  Mat gram() const { return vectors.transpose() * vectors; }
};

/// Scalar second fundamental form in the frame basis, h(a, b) = S_nu(u_a, u_b).
struct ShapeForm {
  Mat h;

  explicit ShapeForm(Mat m);
};

/// Strictly increasing index tuple, a k-subset of {0..m-1}.
using MultiIndex = std::vector<int>;

/// All strictly increasing k-tuples drawn from {0..m-1}, in lexicographic
/// order. k = 0 yields the single empty tuple.
std::vector<MultiIndex> multi_indices(int m, int k);

/// Complement of `index` in {0..m-1}, increasing.
MultiIndex complement(const MultiIndex& index, int m);

/// Columns of `vectors` selected by `index`.
Mat select_columns(const Mat& vectors, const MultiIndex& index);

/// <A_1 ^ ... ^ A_k, B_1 ^ ... ^ B_k> = det(<A_i, B_j>). Columns are the
/// vectors. Two empty lists (k = 0) give 1.
double kvector_inner(const Mat& a, const Mat& b);

/// sqrt(det Gram). Throws std::invalid_argument on non-finite input.
double alpha_norm(const Frame& f);

/// Gram condition number of the frame (ratio of extreme Gram eigenvalues).
double gram_condition(const Frame& f);

/// Tr S^(k) via the eigenvalues of Gram^{-1} h (symmetric-definite
/// generalized eigenproblem). k = 0 returns 1.
double trace_sk_eigen(const Frame& f, const ShapeForm& s, int k);

/// Tr S^(0..n-1) from one eigen solve.
std::vector<double> trace_sk_all(const Frame& f, const ShapeForm& s);

/// Elementary symmetric polynomials e_0..e_k of the given values.
std::vector<double> elementary_symmetric(const Vec& values, int k);

/// S^(k)(alpha_l, alpha_m) as the signed permutation sum over S_k.
double sk_form(const ShapeForm& s, const MultiIndex& l, const MultiIndex& m);

/// Complementary k-vector alpha^l as a column list with its sign
/// (-1)^{|l| + k} (1-based |l|).
struct SignedVectors {
  double sign;
  Mat vectors;
};
SignedVectors complementary_kvector(const Frame& f, const MultiIndex& l);

/// Reference evaluation of Tr S^(k): double sum over l, m in I_k of
/// S^(k)(alpha_l, alpha_m) <alpha^l, alpha^m> / ||alpha||^2. Factorial cost;
/// requires n <= 6 and 1 <= k <= n-1.
double trace_sk_minorsum(const Frame& f, const ShapeForm& s, int k);

/// Linear combination of simple k-vectors.
struct KVectorTerm {
  double coeff;
  Mat vectors;  // columns
};
using KVectorSum = std::vector<KVectorTerm>;

/// tau^j_l xi = e_j ^ sum_i (-1)^i <xi_i, e_l> xi_0 ^ .. ^ (xi_i omitted) ^ ..
/// (0-based i). This is the derivative of xi under u -> u + eps e_j <u, e_l>.
KVectorSum tau_apply(int j, int l, const Mat& xi);

double kvector_inner(const KVectorSum& a, const KVectorSum& b);
double kvector_inner(const KVectorSum& a, const Mat& b);

/// Coefficients of the Ito differential of Tr S^(k) at one state:
///   dTr = sum_ab b_coeff(a,b) <dB(u_a, u_b), nu>
///       + sum_ij (w_diag(i,j) + w_tau(i,j)) dW^i_j
///       + drift dt
/// with W acting as du = dW u.
struct TraceSdeTerms {
  int k = 0;
  double trace = 0.0;
  Mat b_coeff;  // (n-1) x (n-1), indexed by frame slots
  Mat w_diag;   // n x n ambient: Tr S^(k) (k nu nu^T - 2 P_tangent)
  Mat w_tau;    // n x n ambient: tau-contraction coefficients
  double drift = 0.0;  // (n+1) k (n-k) mu2 / (2n(n+2)) Tr S^(k)
  double drift_rate = 0.0;
};

TraceSdeTerms trace_sde_terms(const Frame& f, const ShapeForm& s, const Vec& nu, int k,
                              double mu2);

}  // namespace curvflow
