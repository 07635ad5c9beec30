#include "ethcluster/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "ethcluster/error.hpp"

namespace ethcluster {

ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::AlignmentError, "predicted and truth labels differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::vulnerable;
    const bool t = truth[i] == Label::vulnerable;
    if (p && t) ++cm.tp;
    else if (p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

Percentage percentage(std::uint64_t numerator, std::uint64_t denominator) {
  Percentage p;
  p.exact = 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
  // round(10000 * num / den) half-up, exactly.
  // Counts stay far below 2^64 / 20000.
  const std::uint64_t hundredths = (numerator * 20000u + denominator) / (denominator * 2u);
  p.rounded = static_cast<double>(hundredths) / 100.0;
  return p;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyEvaluation, "no evaluated documents");
  MetricsReport r;
  r.accuracy = percentage(cm.tp + cm.tn, cm.total());
  if (cm.tp + cm.fp > 0) r.precision = percentage(cm.tp, cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) r.recall = percentage(cm.tp, cm.tp + cm.fn);
  if (2 * cm.tp + cm.fn + cm.fp > 0) {
    r.f_measure = percentage(2 * cm.tp, 2 * cm.tp + cm.fn + cm.fp);
  }
  return r;
}

std::vector<ProjectedPoint> project2d(const Matrix& X, std::span<const int> assignments,
                                      std::span<const Label> labels) {
  if (X.rows() < 2) throw Error(ErrorCode::InvalidInput, "projection needs at least two rows");
  if (assignments.size() != static_cast<std::size_t>(X.rows())) {
    throw Error(ErrorCode::AlignmentError, "assignments do not match rows");
  }
  const auto comps = std::min<Eigen::Index>(2, std::min(X.rows(), X.cols()));
  Matrix coords = Matrix::Zero(X.rows(), 2);
  if (comps > 0) {
    const auto basis = pca_fit(X, comps);
    coords.leftCols(comps) = pca_transform(basis, X);
  }
  std::vector<ProjectedPoint> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const int cluster = assignments[static_cast<std::size_t>(r)];
    const Label label = static_cast<std::size_t>(cluster) < labels.size()
                            ? labels[static_cast<std::size_t>(cluster)]
                            : Label::clean;
    out.push_back({coords(r, 0), coords(r, 1), cluster, label});
  }
  return out;
}

std::string points_csv(std::span<const ProjectedPoint> points) {
  std::ostringstream out;
  out << "x,y,cluster,label\n" << std::setprecision(17);
  for (const auto& p : points) {
    out << p.x << ',' << p.y << ',' << p.cluster << ',' << to_string(p.label) << '\n';
  }
  return out.str();
}

std::string format_percentage(const std::optional<Percentage>& p) {
  if (!p) return "undefined";
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << p->rounded;
  std::string s = out.str();
  // Trim trailing zeros the way the published tables print them.
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string format_report_table(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "Vulnerability" << std::right << std::setw(6) << "TP"
      << std::setw(6) << "FP" << std::setw(6) << "FN" << std::setw(6) << "TN" << std::setw(10)
      << "ACC(%)" << std::setw(10) << "P(%)" << std::setw(10) << "R(%)" << std::setw(10) << "F(%)"
      << '\n';
  for (const auto& row : rows) {
    out << std::left << std::setw(16) << to_string(row.kind) << std::right << std::setw(6)
        << row.confusion.tp << std::setw(6) << row.confusion.fp << std::setw(6) << row.confusion.fn
        << std::setw(6) << row.confusion.tn << std::setw(10) << format_percentage(row.metrics.accuracy)
        << std::setw(10) << format_percentage(row.metrics.precision) << std::setw(10)
        << format_percentage(row.metrics.recall) << std::setw(10)
        << format_percentage(row.metrics.f_measure) << '\n';
  }
  return out.str();
}

}  // namespace ethcluster
