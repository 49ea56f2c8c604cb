#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "daccn/tensor.hpp"

namespace daccn {

enum class SqRelConvention {
  standard,           // mean (pred - gt)^2 / gt
  squared_relative,   // mean ((pred - gt) / gt)^2
};

std::string to_string(SqRelConvention c);
SqRelConvention sq_rel_convention_from_string(const std::string& name);

struct MetricsOptions {
  bool median_scaling = true;
  Real d_min = 0.1;
  Real d_max = 100;
  SqRelConvention sq_rel = SqRelConvention::standard;
};

struct MetricsReport {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;
  std::int64_t n_pixels = 0;
  double scale = 1;  // median-scaling factor applied to pred (1 when off)
  SqRelConvention sq_rel_convention = SqRelConvention::standard;

  static std::string delimited_header(char sep = ',');
  // One record, full precision, fields in delimited_header order.
  std::string to_delimited(char sep = ',') const;
  // Fixed-width table in the usual column order, labelled with the Sq Rel convention.
  std::string to_table(const std::string& label = "") const;
};

/// Seven-metric depth evaluation over pixels where `valid_mask` is nonzero
/// (undefined mask: all pixels) and gt lies in [d_min, d_max].
///
/// With median scaling pred is first multiplied by median(gt)/median(pred)
/// over those pixels; pred is then clamped to [d_min, d_max].
/// DegenerateError when no pixel qualifies.
MetricsReport depth_metrics(const Tensor& pred, const Tensor& gt, const Tensor& valid_mask,
                            const MetricsOptions& options);

/// Unweighted mean of per-image reports (n_pixels is summed).
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

// Median with the even-count convention (mean of the two middle values).
double median(std::vector<double> values);

}  // namespace daccn
