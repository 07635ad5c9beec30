#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ethcluster/cluster.hpp"
#include "ethcluster/types.hpp"

namespace ethcluster {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// A percentage: `exact` is the unrounded value, `rounded` is half-up to two
// decimals computed in integer arithmetic from the underlying ratio.
struct Percentage {
  double exact = 0.0;
  double rounded = 0.0;
};

// nullopt marks a metric whose denominator is zero.
struct MetricsReport {
  std::optional<Percentage> accuracy;
  std::optional<Percentage> precision;
  std::optional<Percentage> recall;
  std::optional<Percentage> f_measure;
};

// Throws Error(AlignmentError) on length mismatch.
ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth);

// Throws Error(EmptyEvaluation) when the matrix is empty.
MetricsReport metrics(const ConfusionMatrix& cm);

Percentage percentage(std::uint64_t numerator, std::uint64_t denominator);

struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;
  int cluster = 0;
  Label label = Label::clean;
};

// Top-two PCA coordinates of X, one row per input row. With fewer than two
// usable components the missing coordinate is zero.
std::vector<ProjectedPoint> project2d(const Matrix& X, std::span<const int> assignments,
                                      std::span<const Label> labels);

std::string points_csv(std::span<const ProjectedPoint> points);

// Fixed-width table in the layout of the confusion and metrics tables.
struct ReportRow {
  VulnerabilityKind kind;
  ConfusionMatrix confusion;
  MetricsReport metrics;
};
std::string format_report_table(std::span<const ReportRow> rows);

// "97.41", "100", "95.4"; "undefined" for nullopt.
std::string format_percentage(const std::optional<Percentage>& p);

}  // namespace ethcluster
