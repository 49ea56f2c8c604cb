#include "daccn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "daccn/errors.hpp"

namespace daccn {

std::string to_string(SqRelConvention c) {
  return c == SqRelConvention::standard ? "standard" : "squared_relative";
}

SqRelConvention sq_rel_convention_from_string(const std::string& name) {
  if (name == "standard") return SqRelConvention::standard;
  if (name == "squared_relative") return SqRelConvention::squared_relative;
  throw ConfigError("unknown sq_rel convention '" + name + "' (standard | squared_relative)");
}

double median(std::vector<double> values) {
  if (values.empty()) throw DegenerateError("median of an empty set");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / 2;
}

MetricsReport depth_metrics(const Tensor& pred, const Tensor& gt, const Tensor& valid_mask,
                            const MetricsOptions& options) {
  if (pred.shape() != gt.shape())
    throw DimensionError("depth_metrics: pred " + shape_to_string(pred.shape()) + " vs gt " +
                         shape_to_string(gt.shape()));
  if (valid_mask.defined() && valid_mask.numel() != gt.numel())
    throw DimensionError("depth_metrics: mask size does not match depth maps");
  if (!(options.d_min > 0 && options.d_min < options.d_max)) throw ConfigError("depth_metrics: bad depth range");

  const auto p = pred.values(), g = gt.values();
  std::vector<double> pv, gv;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (valid_mask.defined() && valid_mask.values()[k] == 0) continue;
    if (!(g[k] >= options.d_min && g[k] <= options.d_max)) continue;
    if (!(p[k] > 0) || !std::isfinite(static_cast<double>(p[k])))
      throw DomainError("depth_metrics: prediction must be positive and finite on evaluated pixels");
    pv.push_back(p[k]);
    gv.push_back(g[k]);
  }
  if (gv.empty()) throw DegenerateError("depth_metrics: no valid pixel");

  MetricsReport r;
  r.sq_rel_convention = options.sq_rel;
  r.n_pixels = static_cast<std::int64_t>(gv.size());
  if (options.median_scaling) r.scale = median(gv) / median(pv);

  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0;
  std::int64_t d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t k = 0; k < gv.size(); ++k) {
    const double y = std::clamp(pv[k] * r.scale, static_cast<double>(options.d_min), static_cast<double>(options.d_max));
    const double t = gv[k];
    const double diff = y - t;
    abs_rel += std::abs(diff) / t;
    sq_rel += options.sq_rel == SqRelConvention::standard ? diff * diff / t : (diff / t) * (diff / t);
    sq += diff * diff;
    const double dl = std::log(y) - std::log(t);
    sq_log += dl * dl;
    const double ratio = std::max(y / t, t / y);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
  }
  const double n = static_cast<double>(gv.size());
  r.abs_rel = abs_rel / n;
  r.sq_rel = sq_rel / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sq_log / n);
  r.delta1 = static_cast<double>(d1) / n;
  r.delta2 = static_cast<double>(d2) / n;
  r.delta3 = static_cast<double>(d3) / n;
  return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw DegenerateError("mean_report: no reports");
  MetricsReport m;
  m.sq_rel_convention = reports.front().sq_rel_convention;
  m.scale = 0;
  for (const auto& r : reports) {
    m.abs_rel += r.abs_rel;
    m.sq_rel += r.sq_rel;
    m.rmse += r.rmse;
    m.rmse_log += r.rmse_log;
    m.delta1 += r.delta1;
    m.delta2 += r.delta2;
    m.delta3 += r.delta3;
    m.scale += r.scale;
    m.n_pixels += r.n_pixels;
  }
  const double n = static_cast<double>(reports.size());
  for (double* f : {&m.abs_rel, &m.sq_rel, &m.rmse, &m.rmse_log, &m.delta1, &m.delta2, &m.delta3, &m.scale}) *f /= n;
  return m;
}

std::string MetricsReport::delimited_header(char sep) {
  std::string out;
  for (const char* f : {"abs_rel", "sq_rel", "rmse", "rmse_log", "delta1", "delta2", "delta3", "n_pixels", "scale",
                        "sq_rel_convention"}) {
    if (!out.empty()) out += sep;
    out += f;
  }
  return out;
}

std::string MetricsReport::to_delimited(char sep) const {
  std::ostringstream out;
  char buf[32];
  for (double v : {abs_rel, sq_rel, rmse, rmse_log, delta1, delta2, delta3}) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << sep;
  }
  std::snprintf(buf, sizeof buf, "%.17g", scale);
  out << n_pixels << sep << buf << sep << to_string(sq_rel_convention);
  return out.str();
}

std::string MetricsReport::to_table(const std::string& label) const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s %8s %8s\n", "", "AbsRel", "SqRel", "RMSE", "RMSElog",
                "d<1.25", "d<1.25^2", "d<1.25^3");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", label.c_str(), abs_rel, sq_rel,
                rmse, rmse_log, delta1, delta2, delta3);
  out += buf;
  out += "(sq_rel convention: " + to_string(sq_rel_convention) + ", pixels: " + std::to_string(n_pixels) + ")\n";
  return out;
}

}  // namespace daccn
