#pragma once

// Fixtures and dense reference computations shared by the suites. The dense
// references are built from plain Eigen matrices and never call into the
// operator or solver code they are compared against.

#include <Eigen/Dense>

#include <atomic>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cdrflow.hpp"

namespace cdrflow::testing {

inline std::string data_path(const std::string& name) { return std::string(CDRFLOW_DATA_DIR) + "/" + name; }
inline std::string config_path(const std::string& name) { return std::string(CDRFLOW_CONFIG_DIR) + "/" + name; }

struct ToyA {
  DomainDataset source;
  DomainDataset target;
  ColdStartSplit split;
  UnifiedMatrix matrix;
};

inline ToyA load_toy_a() {
  ToyA t;
  t.source = load_domain(data_path("toy_a_source.tsv"), Domain::source, 4.0, 2);
  t.target = load_domain(data_path("toy_a_target.tsv"), Domain::target, 4.0, 2);
  t.split = no_cold_split(t.source, t.target);
  t.matrix = build_unified(t.source, t.target, t.split);
  return t;
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cdrflow_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = {}) const { return (child.empty() ? path_ : path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

namespace dense {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd normalized(const MatrixXd& r) {
  const VectorXd du = r.rowwise().sum();
  const VectorXd di = r.colwise().sum().transpose();
  MatrixXd out = r;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      const double s = (du(i) > 0 ? 1.0 / std::sqrt(du(i)) : 0.0) * (di(j) > 0 ? 1.0 / std::sqrt(di(j)) : 0.0);
      out(i, j) = r(i, j) * s;
    }
  return out;
}

inline MatrixXd item_graph(const MatrixXd& r) {
  const MatrixXd rn = normalized(r);
  return rn.transpose() * rn;
}

// Orthogonal projector onto the span of the top `rank` eigenvectors of
// RnᵀRn, i.e. the top right singular subspace of Rn. rank < 0 keeps every
// eigenvalue above a relative tolerance.
inline MatrixXd top_projector(const MatrixXd& rn, Eigen::Index rank = -1) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(rn.transpose() * rn);
  const VectorXd ev = es.eigenvalues();  // ascending
  const Eigen::Index n = ev.size();
  const double tol = std::max(ev.cwiseAbs().maxCoeff(), 1.0) * 1e-10 * static_cast<double>(n);
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ev(i) > tol) ++keep;
  if (rank >= 0) keep = std::min(keep, rank);
  const MatrixXd v = es.eigenvectors().rightCols(keep);
  return v * v.transpose();
}

inline MatrixXd low_pass(const MatrixXd& r, Eigen::Index rank = -1) {
  const VectorXd di = r.colwise().sum().transpose();
  VectorXd inv(di.size()), fwd(di.size());
  for (Eigen::Index j = 0; j < di.size(); ++j) {
    inv(j) = di(j) > 0 ? 1.0 / std::sqrt(di(j)) : 0.0;
    fwd(j) = std::sqrt(di(j));
  }
  return inv.asDiagonal() * top_projector(normalized(r), rank) * fwd.asDiagonal();
}

// Matrix of the linear map X -> X M_b.
inline MatrixXd smoothing_matrix(const MatrixXd& r, double alpha, double beta, double k, Eigen::Index rank = -1) {
  const auto n = r.cols();
  return k * (alpha * item_graph(r) + beta * low_pass(r, rank) - MatrixXd::Identity(n, n));
}

inline MatrixXd euler_matrix(const MatrixXd& m, double s, int n) {
  const MatrixXd one = MatrixXd::Identity(m.rows(), m.cols()) + s * m;
  MatrixXd out = MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < n; ++i) out = out * one;
  return out;
}

inline MatrixXd rk4_matrix(const MatrixXd& m, double s, int n) {
  const MatrixXd a = s * m;
  const MatrixXd a2 = a * a;
  const MatrixXd a3 = a2 * a;
  const MatrixXd a4 = a3 * a;
  const MatrixXd one = MatrixXd::Identity(m.rows(), m.cols()) + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0;
  MatrixXd out = MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < n; ++i) out = out * one;
  return out;
}

// exp(t M) for symmetric M via eigendecomposition.
inline MatrixXd expm_symmetric(const MatrixXd& m, double t) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd e = (t * es.eigenvalues()).array().exp();
  return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().transpose();
}

// Full pipeline, Euler/RK4 only: R (I + s_b M_b)^{n_b} * RK4(-P, s_h)^{n_h}.
inline MatrixXd pipeline(const MatrixXd& r, const ProcessConfig& c) {
  const auto step = [](ode::Method m, const MatrixXd& gen, double s, int n) {
    return m == ode::Method::euler ? euler_matrix(gen, s, n) : rk4_matrix(gen, s, n);
  };
  MatrixXd x = r;
  x = x * step(c.solver_b, smoothing_matrix(r, c.alpha, c.beta, c.k), c.tb / c.steps_b, c.steps_b);
  x = x * step(c.solver_h, MatrixXd(-item_graph(r)), c.th / c.steps_h, c.steps_h);
  return x;
}

}  // namespace dense

inline Eigen::MatrixXd to_dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

// Random binary sparse matrix; every row and column gets at least one entry.
inline SparseMatrix random_binary(Index rows, Index cols, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<bool> col_hit(static_cast<std::size_t>(cols), false);
  for (Index i = 0; i < rows; ++i) {
    bool any = false;
    for (Index j = 0; j < cols; ++j)
      if (bernoulli(rng, density)) {
        trip.emplace_back(i, j, 1.0);
        col_hit[static_cast<std::size_t>(j)] = any = true;
      }
    if (!any) {
      const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(cols)));
      trip.emplace_back(i, j, 1.0);
      col_hit[static_cast<std::size_t>(j)] = true;
    }
  }
  for (Index j = 0; j < cols; ++j)
    if (!col_hit[static_cast<std::size_t>(j)])
      trip.emplace_back(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(rows))), j, 1.0);
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end(), [](double a, double) { return a; });
  return m;
}

// Random matrix with spectral norm exactly `norm` (rescaled by its largest
// singular value).
inline Eigen::MatrixXd random_with_norm(Index n, double norm, Rng& rng, bool symmetric = false) {
  Eigen::MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = standard_normal(rng);
  if (symmetric) m = (m + m.transpose()).eval();
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  return m * (norm / s);
}

inline double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace cdrflow::testing
