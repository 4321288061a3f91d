#include "curvflow/exterior_curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace curvflow {

namespace {

int permutation_sign(const std::vector<int>& perm) {
  int inversions = 0;
  for (std::size_t a = 0; a < perm.size(); ++a)
    for (std::size_t b = a + 1; b < perm.size(); ++b)
      if (perm[a] > perm[b]) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

MultiIndex drop(const MultiIndex& index, int position) {
  MultiIndex out;
  out.reserve(index.size() - 1);
  for (int q = 0; q < static_cast<int>(index.size()); ++q)
    if (q != position) out.push_back(index[q]);
  return out;
}

void check_grade(int k, int lo, int hi, const char* what) {
  if (k < lo || k > hi)
    throw std::invalid_argument(std::string(what) + ": grade " + std::to_string(k) +
                                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_shapes(const Frame& f, const ShapeForm& s) {
  if (f.ambient_dim() < 2 || f.size() != f.ambient_dim() - 1)
    throw std::invalid_argument("frame must hold n-1 vectors in R^n");
  if (s.h.rows() != f.size() || s.h.cols() != f.size())
    throw std::invalid_argument("shape form size does not match the frame");
  if (!f.vectors.allFinite() || !s.h.allFinite())
    throw std::invalid_argument("non-finite frame or shape form");
}

// Eigenvalues of Gram^{-1} h through the Cholesky reduction L^{-1} h L^{-T}.
Vec shape_operator_eigenvalues(const Frame& f, const ShapeForm& s) {
  check_shapes(f, s);
  const double cond = gram_condition(f);
  if (!(cond <= kMaxGramCondition))
    throw DegenerateFrameError("frame Gram condition number " + std::to_string(cond) +
                               " exceeds 1e12");
  const Mat g = f.gram();
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw DegenerateFrameError("frame Gram matrix is singular");
  const Mat linv_h = llt.matrixL().solve(s.h);
  Mat reduced = llt.matrixL().solve(linv_h.transpose());
  reduced = 0.5 * (reduced + reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(reduced, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace

ShapeForm::ShapeForm(Mat m) : h(std::move(m)) {
  if (h.rows() != h.cols()) throw std::invalid_argument("shape form must be square");
  if (h.size() > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("shape form must be exactly symmetric");
}

std::vector<MultiIndex> multi_indices(int m, int k) {
  std::vector<MultiIndex> out;
  if (k < 0 || k > m) return out;
  MultiIndex cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  for (;;) {
    out.push_back(cur);
    int pos = k - 1;
    while (pos >= 0 && cur[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++cur[pos];
    for (int q = pos + 1; q < k; ++q) cur[q] = cur[q - 1] + 1;
  }
  return out;
}

MultiIndex complement(const MultiIndex& index, int m) {
  MultiIndex out;
  for (int a = 0; a < m; ++a)
    if (std::find(index.begin(), index.end(), a) == index.end()) out.push_back(a);
  return out;
}

Mat select_columns(const Mat& vectors, const MultiIndex& index) {
  Mat out(vectors.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t c = 0; c < index.size(); ++c) out.col(c) = vectors.col(index[c]);
  return out;
}

double kvector_inner(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("kvector_inner: grade mismatch");
  if (a.cols() == 0) return 1.0;
  const Mat cross = a.transpose() * b;
  return cross.determinant();
}

double alpha_norm(const Frame& f) {
  if (!f.vectors.allFinite()) throw std::invalid_argument("alpha_norm: non-finite frame");
  const double det = f.gram().determinant();
  return std::sqrt(std::max(det, 0.0));
}

double gram_condition(const Frame& f) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(f.gram(), Eigen::EigenvaluesOnly);
  const Vec& ev = eig.eigenvalues();
  if (!(ev(0) > 0.0)) return std::numeric_limits<double>::infinity();
  return ev(ev.size() - 1) / ev(0);
}

std::vector<double> elementary_symmetric(const Vec& values, int k) {
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  // Expand prod_i (1 + lambda_i x) one factor at a time.
  for (Eigen::Index i = 0; i < values.size(); ++i)
    for (int q = k; q >= 1; --q) e[q] += values(i) * e[q - 1];
  return e;
}

double trace_sk_eigen(const Frame& f, const ShapeForm& s, int k) {
  check_grade(k, 0, f.size(), "trace_sk_eigen");
  if (k == 0) {
    check_shapes(f, s);
    return 1.0;
  }
  return elementary_symmetric(shape_operator_eigenvalues(f, s), k)[k];
}

std::vector<double> trace_sk_all(const Frame& f, const ShapeForm& s) {
  return elementary_symmetric(shape_operator_eigenvalues(f, s), f.size());
}

double sk_form(const ShapeForm& s, const MultiIndex& l, const MultiIndex& m) {
  if (l.size() != m.size()) throw std::invalid_argument("sk_form: grade mismatch");
  const int k = static_cast<int>(l.size());
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    double prod = permutation_sign(perm);
    for (int j = 0; j < k && prod != 0.0; ++j) prod *= s.h(l[perm[j]], m[j]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

SignedVectors complementary_kvector(const Frame& f, const MultiIndex& l) {
  const int k = static_cast<int>(l.size());
  int one_based_sum = 0;
  for (int v : l) one_based_sum += v + 1;
  const double sign = (one_based_sum + k) % 2 == 0 ? 1.0 : -1.0;
  return {sign, select_columns(f.vectors, complement(l, f.size()))};
}

double trace_sk_minorsum(const Frame& f, const ShapeForm& s, int k) {
  check_shapes(f, s);
  if (f.ambient_dim() > 6) throw std::invalid_argument("trace_sk_minorsum: n must be <= 6");
  check_grade(k, 1, f.size(), "trace_sk_minorsum");
  const double cond = gram_condition(f);
  if (!(cond <= kMaxGramCondition))
    throw DegenerateFrameError("frame Gram condition number exceeds 1e12");
  const double alpha_sq = f.gram().determinant();
  const auto indices = multi_indices(f.size(), k);
  std::vector<SignedVectors> comp;
  comp.reserve(indices.size());
  for (const auto& l : indices) comp.push_back(complementary_kvector(f, l));

  double total = 0.0;
  for (std::size_t a = 0; a < indices.size(); ++a)
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const double gram = comp[a].sign * comp[b].sign *
                          kvector_inner(comp[a].vectors, comp[b].vectors);
      if (gram == 0.0) continue;
      total += sk_form(s, indices[a], indices[b]) * gram;
    }
  return total / alpha_sq;
}

KVectorSum tau_apply(int j, int l, const Mat& xi) {
  const int n = static_cast<int>(xi.rows());
  if (j < 0 || j >= n || l < 0 || l >= n) throw std::invalid_argument("tau_apply: index out of range");
  KVectorSum out;
  const int k = static_cast<int>(xi.cols());
  for (int i = 0; i < k; ++i) {
    const double c = (i % 2 == 0 ? 1.0 : -1.0) * xi(l, i);
    if (c == 0.0) continue;
    KVectorTerm term{c, Mat(n, k)};
    term.vectors.col(0) = Vec::Unit(n, j);
    int col = 1;
    for (int q = 0; q < k; ++q)
      if (q != i) term.vectors.col(col++) = xi.col(q);
    out.push_back(std::move(term));
  }
  return out;
}

double kvector_inner(const KVectorSum& a, const KVectorSum& b) {
  double s = 0.0;
  for (const auto& x : a)
    for (const auto& y : b) s += x.coeff * y.coeff * kvector_inner(x.vectors, y.vectors);
  return s;
}

double kvector_inner(const KVectorSum& a, const Mat& b) {
  double s = 0.0;
  for (const auto& x : a) s += x.coeff * kvector_inner(x.vectors, b);
  return s;
}

TraceSdeTerms trace_sde_terms(const Frame& f, const ShapeForm& s, const Vec& nu, int k,
                              double mu2) {
  check_shapes(f, s);
  const int n = f.ambient_dim();
  const int m = f.size();
  check_grade(k, 1, m, "trace_sde_terms");
  if (nu.size() != n) throw std::invalid_argument("trace_sde_terms: normal has wrong size");

  TraceSdeTerms out;
  out.k = k;
  out.trace = trace_sk_eigen(f, s, k);
  const Mat g = f.gram();
  const double alpha_sq = g.determinant();

  const auto indices = multi_indices(m, k);
  std::vector<SignedVectors> comp;
  for (const auto& l : indices) comp.push_back(complementary_kvector(f, l));

  // B loading: derivative of the trace with respect to h(a, b).
  out.b_coeff = Mat::Zero(m, m);
  for (std::size_t a = 0; a < indices.size(); ++a)
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const double weight = comp[a].sign * comp[b].sign *
                            kvector_inner(comp[a].vectors, comp[b].vectors) / alpha_sq;
      if (weight == 0.0) continue;
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < k; ++i) {
          const double sign = (p + i) % 2 == 0 ? 1.0 : -1.0;
          out.b_coeff(indices[a][p], indices[b][i]) +=
              sign * sk_form(s, drop(indices[a], p), drop(indices[b], i)) * weight;
        }
    }

  const Mat tangent_projector = f.vectors * g.ldlt().solve(f.vectors.transpose());
  out.w_diag = out.trace * (static_cast<double>(k) * nu * nu.transpose() - 2.0 * tangent_projector);

  out.w_tau = Mat::Zero(n, n);
  if (k < m) {
    std::vector<double> sk(indices.size() * indices.size());
    for (std::size_t a = 0; a < indices.size(); ++a)
      for (std::size_t b = 0; b < indices.size(); ++b)
        sk[a * indices.size() + b] = sk_form(s, indices[a], indices[b]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::vector<KVectorSum> tau(indices.size());
        for (std::size_t a = 0; a < indices.size(); ++a) tau[a] = tau_apply(i, j, comp[a].vectors);
        double acc = 0.0;
        for (std::size_t a = 0; a < indices.size(); ++a)
          for (std::size_t b = 0; b < indices.size(); ++b) {
            const double w = sk[a * indices.size() + b];
            if (w == 0.0) continue;
            const double sym = kvector_inner(tau[a], comp[b].vectors) +
                               kvector_inner(tau[b], comp[a].vectors);
            acc += w * comp[a].sign * comp[b].sign * sym;
          }
        out.w_tau(i, j) = acc / alpha_sq;
      }
  }

  const double nd = n;
  out.drift_rate = (nd + 1.0) * k * (nd - k) * mu2 / (2.0 * nd * (nd + 2.0));
  out.drift = out.drift_rate * out.trace;
  return out;
}

}  // namespace curvflow
