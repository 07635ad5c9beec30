#include "ethcluster/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ethcluster/error.hpp"

namespace ethcluster {

Matrix to_matrix(std::span<const std::vector<double>> rows) {
  if (rows.empty()) return Matrix(0, 0);
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
      throw Error(ErrorCode::DimError, "rows have differing lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][c];
  }
  return m;
}

PcaBasis pca_fit(const Matrix& X, Eigen::Index num_components) {
  if (X.rows() < 2) throw Error(ErrorCode::InvalidInput, "PCA needs at least two rows");
  if (num_components < 1 || num_components > std::min(X.rows(), X.cols())) {
    throw Error(ErrorCode::InvalidComponents, "num_components must lie in [1, min(n, dim)]");
  }
  PcaBasis basis;
  basis.mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - basis.mean.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullV);
  basis.components = svd.matrixV().leftCols(num_components);
  for (Eigen::Index c = 0; c < basis.components.cols(); ++c) {
    Eigen::Index arg = 0;
    basis.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis.components(arg, c) < 0) basis.components.col(c) *= -1.0;
  }
  return basis;
}

namespace {

// Fixed summation order so that a row projects to identical bits whether it
// is transformed alone or as part of a matrix.
void project_row(const PcaBasis& basis, const double* row, std::ptrdiff_t stride, double* out,
                 std::ptrdiff_t out_stride) {
  const auto dim = basis.dim();
  for (Eigen::Index c = 0; c < basis.num_components(); ++c) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) {
      s += (row[d * stride] - basis.mean[d]) * basis.components(d, c);
    }
    out[c * out_stride] = s;
  }
}

}  // namespace

Matrix pca_transform(const PcaBasis& basis, const Matrix& X) {
  if (X.cols() != basis.dim()) throw Error(ErrorCode::DimError, "PCA input width mismatch");
  Matrix out(X.rows(), basis.num_components());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    project_row(basis, &X(r, 0), X.rows(), &out(r, 0), out.rows());
  }
  return out;
}

Vector pca_transform(const PcaBasis& basis, const Vector& row) {
  if (row.size() != basis.dim()) throw Error(ErrorCode::DimError, "PCA input width mismatch");
  Vector out(basis.num_components());
  project_row(basis, row.data(), 1, out.data(), 1);
  return out;
}

double euclidean(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::DimError, "distance between unequal lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double euclidean(const Vector& p, const Vector& q) {
  return euclidean(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                   std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

int nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<std::size_t> initial_center_rows(std::size_t n, int k, std::int64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  if (static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::TooManyClusters, "more clusters than rows");
  }
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates; the bounded draw avoids library-specific
  // distributions so the choice is stable across standard libraries.
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::size_t range = n - i;
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const std::size_t j = i + std::min(range - 1, static_cast<std::size_t>(u * static_cast<double>(range)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

double within_cluster_ss(const Matrix& X, const Matrix& centers, std::span<const int> assignments) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    total += (X.row(r) - centers.row(assignments[static_cast<std::size_t>(r)])).squaredNorm();
  }
  return total;
}

namespace {

std::vector<int> assign_all(const Matrix& X, const Matrix& centers) {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = nearest_center(centers, X.row(r).transpose());
  }
  return out;
}

void update_centers(const Matrix& X, const std::vector<int>& assignments, Matrix& centers) {
  const auto k = centers.rows();
  Matrix sums = Matrix::Zero(k, X.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const auto c = assignments[static_cast<std::size_t>(r)];
    sums.row(c) += X.row(r);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      continue;
    }
    Eigen::Index far = 0;
    double far_d = -1.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double d = (X.row(r) - centers.row(c)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = r;
      }
    }
    centers.row(c) = X.row(far);
  }
}

}  // namespace

ClusterModel kmeans_from(const Matrix& X, Matrix initial_centers, int max_iterations) {
  if (max_iterations < 1) throw Error(ErrorCode::InvalidInput, "max_iterations must be >= 1");
  if (initial_centers.cols() != X.cols()) throw Error(ErrorCode::DimError, "center width mismatch");
  if (initial_centers.rows() > X.rows()) {
    throw Error(ErrorCode::TooManyClusters, "more clusters than rows");
  }
  ClusterModel model;
  model.max_iterations = max_iterations;
  model.centers = std::move(initial_centers);
  model.assignments = assign_all(X, model.centers);
  model.objective_history.push_back(within_cluster_ss(X, model.centers, model.assignments));
  for (int it = 1; it <= max_iterations; ++it) {
    model.iterations_run = it;
    update_centers(X, model.assignments, model.centers);
    auto next = assign_all(X, model.centers);
    model.objective_history.push_back(within_cluster_ss(X, model.centers, next));
    const bool converged = next == model.assignments;
    model.assignments = std::move(next);
    if (converged) break;
  }
  return model;
}

ClusterModel kmeans_fit(const Matrix& X, int k, int max_iterations, std::int64_t seed) {
  const auto rows = initial_center_rows(static_cast<std::size_t>(X.rows()), k, seed);
  Matrix init(k, X.cols());
  for (int c = 0; c < k; ++c) init.row(c) = X.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(c)]));
  auto model = kmeans_from(X, std::move(init), max_iterations);
  model.seed = seed;
  return model;
}

void label_clusters(ClusterModel& model, std::span<const Label> truth) {
  if (truth.size() != model.assignments.size()) {
    throw Error(ErrorCode::AlignmentError, "truth labels do not match cluster assignments");
  }
  std::vector<std::size_t> vulnerable(static_cast<std::size_t>(model.k()), 0);
  std::vector<std::size_t> clean(static_cast<std::size_t>(model.k()), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& bucket = truth[i] == Label::vulnerable ? vulnerable : clean;
    ++bucket[static_cast<std::size_t>(model.assignments[i])];
  }
  model.labels.assign(static_cast<std::size_t>(model.k()), Label::clean);
  for (std::size_t c = 0; c < model.labels.size(); ++c) {
    if (vulnerable[c] > 0 && vulnerable[c] >= clean[c]) model.labels[c] = Label::vulnerable;
  }
}

Label predict(const ClusterModel& model, const std::optional<PcaBasis>& basis, const Vector& v) {
  if (model.labels.size() != static_cast<std::size_t>(model.k())) {
    throw Error(ErrorCode::InvalidInput, "cluster model is not labeled");
  }
  const Vector point = basis ? pca_transform(*basis, v) : v;
  if (point.size() != model.centers.cols()) throw Error(ErrorCode::DimError, "vector width mismatch");
  return model.labels[static_cast<std::size_t>(nearest_center(model.centers, point))];
}

}  // namespace ethcluster
