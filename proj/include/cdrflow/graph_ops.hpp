#pragma once

// Normalization of the interaction matrix and the linear operators that act
// on the item axis. Every operator maps a dense (rows x |V|) signal X to
// X * M without forming M unless asked to.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/parallel.hpp"
#include "cdrflow/random.hpp"

namespace cdrflow {

using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Largest item count for which an operator may be materialized densely.
inline constexpr Index kMaterializeLimit = 2048;

struct DegreePair {
  Vector user_degrees;
  Vector item_degrees;
};

struct NormalizedMatrix {
  SparseMatrix matrix;
  DegreePair degrees;
};

// d^{-1/2}, with 0 for isolated nodes.
inline double inv_sqrt_degree(double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; }

inline Vector inv_sqrt_degrees(const Vector& d) { return d.unaryExpr(&inv_sqrt_degree); }

inline Vector sqrt_degrees(const Vector& d) {
  return d.unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
}

// D_U^{-1/2} R D_I^{-1/2}. The sparsity pattern of R is kept.
inline NormalizedMatrix normalize(const SparseMatrix& r) {
  if (r.nonZeros() == 0) throw DataError("cannot normalize a matrix without interactions");
  NormalizedMatrix out;
  out.degrees.user_degrees = Vector::Zero(r.rows());
  out.degrees.item_degrees = Vector::Zero(r.cols());
  for (Index i = 0; i < r.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(r, i); it; ++it) {
      out.degrees.user_degrees[it.row()] += it.value();
      out.degrees.item_degrees[it.col()] += it.value();
    }
  const Vector du = inv_sqrt_degrees(out.degrees.user_degrees);
  const Vector di = inv_sqrt_degrees(out.degrees.item_degrees);
  out.matrix = r;
  for (Index i = 0; i < out.matrix.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(out.matrix, i); it; ++it)
      it.valueRef() = du[it.row()] * it.value() * di[it.col()];
  return out;
}

inline NormalizedMatrix normalize(const UnifiedMatrix& r) { return normalize(r.matrix); }

// Content hash of a sparse matrix (shape, pattern, values).
inline std::uint64_t matrix_fingerprint(const SparseMatrix& m) {
  SparseMatrix c = m;
  c.makeCompressed();
  auto bytes = [](const void* p, std::size_t n) {
    return std::string_view(static_cast<const char*>(p), n);
  };
  const Index shape[2] = {c.rows(), c.cols()};
  std::uint64_t h = fnv1a(bytes(shape, sizeof shape));
  h = fnv1a(bytes(c.outerIndexPtr(), sizeof(*c.outerIndexPtr()) * static_cast<std::size_t>(c.outerSize() + 1)), h);
  h = fnv1a(bytes(c.innerIndexPtr(), sizeof(*c.innerIndexPtr()) * static_cast<std::size_t>(c.nonZeros())), h);
  h = fnv1a(bytes(c.valuePtr(), sizeof(double) * static_cast<std::size_t>(c.nonZeros())), h);
  return h;
}

enum class OperatorKind { item_graph, low_pass, smoothing_generator, sharpening_generator, composite };

inline std::string_view to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::item_graph: return "item_graph";
    case OperatorKind::low_pass: return "low_pass";
    case OperatorKind::smoothing_generator: return "smoothing_generator";
    case OperatorKind::sharpening_generator: return "sharpening_generator";
    case OperatorKind::composite: return "composite";
  }
  return "unknown";
}

// Immutable linear map X -> X * M on the item axis. Application is
// row-parallel over fixed-size row blocks; each output row depends only on
// the matching input row, so results do not depend on the thread count.
class ItemOperator {
 public:
  using Block = Eigen::Ref<const DenseMatrix>;
  using Kernel = std::function<DenseMatrix(const Block&)>;

  ItemOperator(OperatorKind kind, Index dim, Kernel kernel)
      : kind_(kind), dim_(dim), kernel_(std::make_shared<const Kernel>(std::move(kernel))) {}

  // X -> X * m, for tests and small reference problems.
  static ItemOperator from_dense(Eigen::MatrixXd m, OperatorKind kind = OperatorKind::composite) {
    if (m.rows() != m.cols()) throw UsageError("operator matrix must be square");
    const Index n = m.rows();
    auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(m));
    return ItemOperator(kind, n, [shared](const Block& x) -> DenseMatrix { return x * (*shared); });
  }

  static ItemOperator scaled_identity(Index dim, double c) {
    return ItemOperator(OperatorKind::composite, dim, [c](const Block& x) -> DenseMatrix { return c * x; });
  }

  OperatorKind kind() const { return kind_; }
  Index dim() const { return dim_; }

  DenseMatrix apply(const DenseMatrix& x) const {
    if (x.cols() != dim_)
      throw UsageError("operator expects " + std::to_string(dim_) + " columns, got " + std::to_string(x.cols()));
    DenseMatrix out(x.rows(), dim_);
    parallel::for_each_row_block(x.rows(), [&](Index begin, Index end) {
      out.middleRows(begin, end - begin) = (*kernel_)(x.middleRows(begin, end - begin));
    });
    return out;
  }

  DenseMatrix operator()(const DenseMatrix& x) const { return apply(x); }

  // Applies the kernel to one block without scheduling; used by composites.
  DenseMatrix apply_block(const Block& x) const { return (*kernel_)(x); }

  // Dense M, i.e. apply(I). Refused above kMaterializeLimit items.
  DenseMatrix materialize() const {
    if (dim_ > kMaterializeLimit)
      throw UsageError("refusing to materialize a " + std::to_string(dim_) + "x" + std::to_string(dim_) +
                       " item operator");
    return apply(DenseMatrix::Identity(dim_, dim_));
  }

 private:
  OperatorKind kind_;
  Index dim_;
  std::shared_ptr<const Kernel> kernel_;
};

// P = Rn^T Rn applied as (X Rn^T) Rn.
inline ItemOperator item_graph(const SparseMatrix& normalized) {
  auto rn = std::make_shared<const SparseMatrix>(normalized);
  return ItemOperator(OperatorKind::item_graph, normalized.cols(),
                      [rn](const ItemOperator::Block& x) -> DenseMatrix {
                        const DenseMatrix t = x * rn->transpose();
                        return t * (*rn);
                      });
}

// Gram matrix of the columns in `cols` only; rows and columns of M outside
// the block are zero.
inline ItemOperator single_domain_graph(const SparseMatrix& normalized, IndexRange cols) {
  if (cols.size() <= 0) throw UsageError("single-domain item graph needs a non-empty column range");
  if (cols.begin < 0 || cols.end > normalized.cols()) throw UsageError("column range out of bounds");
  auto block = std::make_shared<const SparseMatrix>(normalized.middleCols(cols.begin, cols.size()));
  const Index n = normalized.cols();
  return ItemOperator(OperatorKind::item_graph, n, [block, cols, n](const ItemOperator::Block& x) -> DenseMatrix {
    DenseMatrix out = DenseMatrix::Zero(x.rows(), n);
    const DenseMatrix t = x.middleCols(cols.begin, cols.size()) * block->transpose();
    out.middleCols(cols.begin, cols.size()) = t * (*block);
    return out;
  });
}

struct SvdOptions {
  Index oversampling = 10;
  int power_iterations = 2;
  // Exact dense SVD when min(rows, cols) is at most this.
  Index dense_limit = 512;
};

struct SvdResult {
  Eigen::MatrixXd right_vectors;  // |V| x rank, orthonormal columns
  Vector singular_values;         // non-increasing
  Index rank = 0;
  Index requested_rank = 0;
  std::uint64_t seed = 0;
  bool rank_clamped = false;  // requested_rank exceeded the numerical rank
};

namespace detail {

inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

// Flip columns so the largest-magnitude entry of each is positive.
inline void fix_signs(Eigen::MatrixXd& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) = -v.col(j);
  }
}

inline Index numerical_rank(const Vector& s, Index rows, Index cols) {
  if (s.size() == 0) return 0;
  const double tol = s[0] * static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
  Index r = 0;
  while (r < s.size() && s[r] > tol) ++r;
  return r;
}

}  // namespace detail

// Top-k right singular vectors. Dense SVD for small problems, otherwise a
// seeded randomized range finder with subspace (power) iterations.
inline SvdResult truncated_svd(const SparseMatrix& a, Index k, std::uint64_t seed, const SvdOptions& opt = {}) {
  if (k < 1) throw UsageError("SVD rank must be at least 1");
  const Index m = a.rows();
  const Index n = a.cols();
  const Index min_dim = std::min(m, n);
  if (min_dim < 1) throw DataError("SVD of an empty matrix");

  Eigen::MatrixXd v;
  Vector s;
  if (min_dim <= opt.dense_limit) {
    const Eigen::MatrixXd dense(a);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinV);
    v = svd.matrixV();
    s = svd.singularValues();
  } else {
    const Index l = std::min(k + opt.oversampling, min_dim);
    Rng rng(seed);
    Eigen::MatrixXd omega(n, l);
    for (Index j = 0; j < l; ++j)
      for (Index i = 0; i < n; ++i) omega(i, j) = standard_normal(rng);
    Eigen::MatrixXd q = detail::orthonormal_basis(a * omega);
    for (int it = 0; it < opt.power_iterations; ++it) {
      const Eigen::MatrixXd z = detail::orthonormal_basis(a.transpose() * q);
      q = detail::orthonormal_basis(a * z);
    }
    // A ~ Q Q^T A; the SVD of (Q^T A)^T = A^T Q gives the right vectors.
    const Eigen::MatrixXd bt = a.transpose() * q;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU);
    v = svd.matrixU();
    s = svd.singularValues();
  }
  if (!s.allFinite() || !v.allFinite()) throw NumericalError("SVD produced non-finite values");

  SvdResult out;
  out.requested_rank = k;
  out.seed = seed;
  const Index achievable = detail::numerical_rank(s, m, n);
  out.rank = std::min(k, achievable);
  out.rank_clamped = k > achievable;
  if (out.rank == 0) throw NumericalError("matrix has numerical rank 0");
  out.right_vectors = v.leftCols(out.rank);
  out.singular_values = s.head(out.rank);
  detail::fix_signs(out.right_vectors);
  return out;
}

// Ideal low-pass filter X -> X D^{-1/2} U U^T D^{1/2}, applied factor by factor.
inline ItemOperator low_pass(const SvdResult& svd, const Vector& item_degrees) {
  if (svd.right_vectors.rows() != item_degrees.size())
    throw UsageError("singular vectors and item degrees disagree on the item count");
  struct Factors {
    Eigen::MatrixXd u;
    Vector inv_sqrt;
    Vector sqrt;
  };
  auto f = std::make_shared<const Factors>(
      Factors{svd.right_vectors, inv_sqrt_degrees(item_degrees), sqrt_degrees(item_degrees)});
  return ItemOperator(OperatorKind::low_pass, item_degrees.size(), [f](const ItemOperator::Block& x) -> DenseMatrix {
    const DenseMatrix coeffs = (x * f->inv_sqrt.asDiagonal()) * f->u;
    return (coeffs * f->u.transpose()) * f->sqrt.asDiagonal();
  });
}

// Smoothing generator. Default: X -> k (alpha X P + beta X F - X).
// strict_combination: X -> k alpha X P + beta X F - (k alpha + beta) X, the
// plain weighted sum of the heat and low-pass generators. Terms whose weight
// is zero are skipped; `low_pass_op` may be empty when beta == 0.
inline ItemOperator smoothing_generator(const ItemOperator& graph, const std::optional<ItemOperator>& low_pass_op,
                                        double alpha, double beta, double k, bool strict_combination = false) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("alpha and beta must be non-negative");
  if (!(k > 0.0)) throw UsageError("heat capacity k must be positive");
  if (beta != 0.0 && !low_pass_op) throw UsageError("beta > 0 requires a low-pass operator");
  if (low_pass_op && low_pass_op->dim() != graph.dim()) throw UsageError("operator dimensions differ");
  std::optional<ItemOperator> lp = beta != 0.0 ? low_pass_op : std::nullopt;
  return ItemOperator(OperatorKind::smoothing_generator, graph.dim(),
                      [graph, lp, alpha, beta, k, strict_combination](const ItemOperator::Block& x) -> DenseMatrix {
                        DenseMatrix out = DenseMatrix::Zero(x.rows(), x.cols());
                        if (strict_combination) {
                          if (alpha != 0.0) out = (k * alpha) * graph.apply_block(x);
                          if (lp) out += beta * lp->apply_block(x);
                          out -= (k * alpha + beta) * x;
                          return out;
                        }
                        if (alpha != 0.0) out = alpha * graph.apply_block(x);
                        if (lp) out += beta * lp->apply_block(x);
                        out -= x;
                        out *= k;
                        return out;
                      });
}

// X -> -X P.
inline ItemOperator sharpening_generator(const ItemOperator& graph) {
  return ItemOperator(OperatorKind::sharpening_generator, graph.dim(),
                      [graph](const ItemOperator::Block& x) -> DenseMatrix { return -graph.apply_block(x); });
}

// Power-iteration estimate of ||M||_2 for a symmetric operator.
inline double spectral_norm_estimate(const ItemOperator& op, int iterations = 200, std::uint64_t seed = 1) {
  Rng rng(seed);
  DenseMatrix x(1, op.dim());
  for (Index j = 0; j < op.dim(); ++j) x(0, j) = standard_normal(rng);
  x /= x.norm();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    DenseMatrix y = op.apply_block(x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    estimate = norm;
    x = y / norm;
  }
  return estimate;
}

}  // namespace cdrflow
