#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "relx/error.hpp"
#include "relx/vector/sparse.hpp"

namespace relx {

struct LsaOptions {
  int oversample = 10;
  int min_iterations = 4;
  // Extra subspace iterations run until the top-k singular values change by
  // less than `tolerance` (relative) or `max_iterations` is reached.
  int max_iterations = 300;
  double tolerance = 1e-13;
  std::uint64_t seed = 42;
};

struct LsaModel {
  int k = 0;
  std::vector<double> singular_values;  // descending
  Eigen::MatrixXd term_basis;           // terms x k
  int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace detail

// Truncated SVD of a documents x terms matrix by randomized subspace
// iteration. Basis column signs are fixed so the largest-magnitude entry is
// positive.
inline LsaModel lsa_fit(const Eigen::MatrixXd& a, int k, const LsaOptions& opt = {}) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::Index full = std::min(m, n);
  if (k < 1 || k > full)
    throw Error(ErrorKind::kConfig, "LSA k=" + std::to_string(k) + " outside [1, " + std::to_string(full) + "]");
  const Eigen::Index l = std::min<Eigen::Index>(k + opt.oversample, full);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd omega(n, l);
  for (Eigen::Index j = 0; j < l; ++j)
    for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = gauss(rng);

  Eigen::MatrixXd q = detail::orthonormal_basis(a * omega);
  auto small_svd = [&](const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd b = basis.transpose() * a;  // l x n
    return Eigen::JacobiSVD<Eigen::MatrixXd>(b, Eigen::ComputeThinV);
  };
  auto svd = small_svd(q);
  Eigen::VectorXd prev = svd.singularValues().head(k);
  int it = 0;
  const bool exact = l == full && l == n;  // range of A^T fully captured
  while (!exact && it < opt.max_iterations) {
    q = detail::orthonormal_basis(a * detail::orthonormal_basis(a.transpose() * q));
    ++it;
    svd = small_svd(q);
    Eigen::VectorXd cur = svd.singularValues().head(k);
    double scale = std::max(cur(0), 1e-300);
    bool stable = (cur - prev).cwiseAbs().maxCoeff() <= opt.tolerance * scale;
    prev = cur;
    if (it >= opt.min_iterations && stable) break;
  }

  LsaModel model;
  model.k = k;
  model.iterations = it;
  model.term_basis = svd.matrixV().leftCols(k);
  for (int j = 0; j < k; ++j) {
    model.singular_values.push_back(std::max(0.0, svd.singularValues()(j)));
    Eigen::Index arg = 0;
    model.term_basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.term_basis(arg, j) < 0) model.term_basis.col(j) *= -1.0;
  }
  return model;
}

inline std::vector<double> lsa_project(const LsaModel& model, const std::vector<double>& v) {
  if (static_cast<Eigen::Index>(v.size()) != model.term_basis.rows())
    throw Error(ErrorKind::kDimension, "LSA projection expects " + std::to_string(model.term_basis.rows()) +
                                           " terms, got " + std::to_string(v.size()));
  Eigen::Map<const Eigen::RowVectorXd> row(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::RowVectorXd p = row * model.term_basis;
  return {p.data(), p.data() + p.size()};
}

inline std::vector<double> lsa_project(const LsaModel& model, const SparseVector& v) {
  std::vector<double> out(static_cast<std::size_t>(model.k), 0.0);
  for (auto [i, w] : v.entries()) {
    if (i >= model.term_basis.rows()) throw Error(ErrorKind::kDimension, "term index outside LSA basis");
    for (int j = 0; j < model.k; ++j) out[static_cast<std::size_t>(j)] += w * model.term_basis(i, j);
  }
  return out;
}

inline Eigen::MatrixXd document_term_matrix(const std::vector<SparseVector>& docs, std::size_t terms) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(terms));
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (auto [i, w] : docs[d].entries()) a(static_cast<Eigen::Index>(d), i) = w;
  return a;
}

}  // namespace relx
