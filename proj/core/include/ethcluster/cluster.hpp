#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ethcluster/types.hpp"

namespace ethcluster {

using Matrix = Eigen::MatrixXd;  // rows are observations
using Vector = Eigen::VectorXd;

Matrix to_matrix(std::span<const std::vector<double>> rows);

struct PcaBasis {
  Vector mean;        // dim
  Matrix components;  // dim x num_components, orthonormal columns

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index num_components() const { return components.cols(); }
};

// Centers X by its column means and keeps the leading right-singular vectors
// of the centered matrix. Each component's sign is fixed so that its largest
// magnitude entry is positive.
// Throws Error(InvalidComponents) unless 1 <= num_components <= min(n, dim),
// and Error(InvalidInput) for fewer than two rows.
PcaBasis pca_fit(const Matrix& X, Eigen::Index num_components);

// (X - mean) * components. Throws Error(DimError) on a column mismatch.
Matrix pca_transform(const PcaBasis& basis, const Matrix& X);
Vector pca_transform(const PcaBasis& basis, const Vector& row);

double euclidean(std::span<const double> p, std::span<const double> q);
double euclidean(const Vector& p, const Vector& q);

struct ClusterModel {
  Matrix centers;  // k x d
  std::vector<int> assignments;
  std::int64_t seed = 1194;
  int max_iterations = 100;
  int iterations_run = 0;
  std::vector<Label> labels;  // empty until label_clusters
  // Within-cluster sum of squared distances after each assignment step.
  std::vector<double> objective_history;

  int k() const { return static_cast<int>(centers.rows()); }
};

// Index of the nearest center; ties go to the lowest index.
int nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& point);

// The k distinct row indices used as initial centers for a given seed.
std::vector<std::size_t> initial_center_rows(std::size_t n, int k, std::int64_t seed);

// Lloyd's algorithm from explicit initial centers. Runs until assignments
// stop changing or max_iterations mean updates have been made. A cluster
// left empty by an update is re-seeded at the row farthest from its old
// center.
ClusterModel kmeans_from(const Matrix& X, Matrix initial_centers, int max_iterations);

// Seeded uniform choice of k distinct rows, then kmeans_from.
// Throws Error(TooManyClusters) when k > n.
ClusterModel kmeans_fit(const Matrix& X, int k, int max_iterations, std::int64_t seed);

double within_cluster_ss(const Matrix& X, const Matrix& centers, std::span<const int> assignments);

// A cluster is vulnerable when at least half of its members are vulnerable
// in `truth`; empty clusters are clean.
// Throws Error(AlignmentError) when truth and assignments differ in length.
void label_clusters(ClusterModel& model, std::span<const Label> truth);

// Projects through `basis` when given, then returns the nearest center's
// label. Throws Error(DimError) on a width mismatch and Error(InvalidInput)
// when the model is unlabeled.
Label predict(const ClusterModel& model, const std::optional<PcaBasis>& basis, const Vector& v);

}  // namespace ethcluster
