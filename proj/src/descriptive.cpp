#include "metocean/descriptive.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numbers>

#include "metocean/error.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

std::vector<double> finite_only(std::span<const double> v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << j.dump(1) << '\n';
}

std::vector<double> gaussian_kernel(double sigma_cells) {
  const auto half = static_cast<int>(std::ceil(4.0 * sigma_cells));
  std::vector<double> k;
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    k.push_back(std::exp(-0.5 * (i / sigma_cells) * (i / sigma_cells)));
    total += k.back();
  }
  for (auto& w : k) w /= total;
  return k;
}

}  // namespace

nlohmann::json histogram_json(const std::string& name, std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw Error("histogram needs at least one bin");
  const auto v = finite_only(values);
  if (v.empty()) throw Error(fmt::format("no finite values for {}", name));
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  std::vector<double> edges;
  for (std::size_t b = 0; b <= bins; ++b) edges.push_back(lo + width * static_cast<double>(b));
  return nlohmann::json{{"schema_version", 1}, {"variable", name}, {"edges", edges}, {"counts", counts},
                        {"n", v.size()}};
}

nlohmann::json kde_2d_json(const std::string& x_name, std::span<const double> x, const std::string& y_name,
                           std::span<const double> y, std::size_t grid, double bandwidth_multiplier) {
  if (!(bandwidth_multiplier > 0.0)) throw Error("bandwidth must be positive");
  if (grid < 4) throw Error("density grid needs at least 4 cells per axis");
  if (x.size() != y.size()) throw Error("density inputs differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  if (xs.size() < 2) throw Error("density needs at least two complete pairs");
  const double factor = std::pow(static_cast<double>(xs.size()), -1.0 / 6.0) * bandwidth_multiplier;
  const double hx = std::max(std::sqrt(stats::variance(xs)), 1e-12) * factor;
  const double hy = std::max(std::sqrt(stats::variance(ys)), 1e-12) * factor;
  const auto [xl, xh] = std::minmax_element(xs.begin(), xs.end());
  const auto [yl, yh] = std::minmax_element(ys.begin(), ys.end());
  const double x0 = *xl - 3.0 * hx, x1 = *xh + 3.0 * hx;
  const double y0 = *yl - 3.0 * hy, y1 = *yh + 3.0 * hy;
  const double dx = (x1 - x0) / static_cast<double>(grid - 1);
  const double dy = (y1 - y0) / static_cast<double>(grid - 1);

  // Linear binning onto the grid nodes.
  std::vector<double> m(grid * grid, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fx = (xs[i] - x0) / dx, fy = (ys[i] - y0) / dy;
    const auto ix = std::min(static_cast<std::size_t>(fx), grid - 2);
    const auto iy = std::min(static_cast<std::size_t>(fy), grid - 2);
    const double wx = fx - static_cast<double>(ix), wy = fy - static_cast<double>(iy);
    m[ix * grid + iy] += (1 - wx) * (1 - wy);
    m[(ix + 1) * grid + iy] += wx * (1 - wy);
    m[ix * grid + iy + 1] += (1 - wx) * wy;
    m[(ix + 1) * grid + iy + 1] += wx * wy;
  }
  auto convolve = [&](const std::vector<double>& k, bool along_x) {
    std::vector<double> out(grid * grid, 0.0);
    const auto half = static_cast<long>(k.size() / 2);
    for (std::size_t a = 0; a < grid; ++a) {
      for (std::size_t b = 0; b < grid; ++b) {
        double s = 0.0;
        for (long t = -half; t <= half; ++t) {
          const long src = static_cast<long>(along_x ? a : b) + t;
          if (src < 0 || src >= static_cast<long>(grid)) continue;
          const auto s_idx = static_cast<std::size_t>(src);
          s += k[static_cast<std::size_t>(t + half)] * (along_x ? m[s_idx * grid + b] : m[a * grid + s_idx]);
        }
        out[a * grid + b] = s;
      }
    }
    m = std::move(out);
  };
  convolve(gaussian_kernel(hx / dx), true);
  convolve(gaussian_kernel(hy / dy), false);
  const double norm = static_cast<double>(xs.size()) * dx * dy;
  std::vector<std::vector<double>> density(grid, std::vector<double>(grid));
  for (std::size_t a = 0; a < grid; ++a)
    for (std::size_t b = 0; b < grid; ++b) density[a][b] = m[a * grid + b] / norm;
  std::vector<double> gx, gy;
  for (std::size_t a = 0; a < grid; ++a) {
    gx.push_back(x0 + dx * static_cast<double>(a));
    gy.push_back(y0 + dy * static_cast<double>(a));
  }
  return nlohmann::json{{"schema_version", 1},  {"x", x_name},  {"y", y_name},         {"x_grid", gx},
                        {"y_grid", gy},         {"bandwidth", {hx, hy}}, {"density", density}};
}

std::vector<std::filesystem::path> emit_descriptive_stats(const Dataset& data, const MetaModelParams& params,
                                                          const DescriptiveOptions& options,
                                                          const std::filesystem::path& out_dir) {
  if (options.variables.empty()) throw Error("empty variable selection");
  if (!(options.bandwidth_multiplier > 0.0)) throw Error("bandwidth must be positive");
  if (data.empty()) throw Error("empty dataset");
  std::filesystem::create_directories(out_dir);
  std::vector<Field> fields;
  for (const auto& v : options.variables) fields.push_back(parse_field(v));
  std::vector<std::vector<double>> cols;
  for (auto f : fields) cols.push_back(data.column(f));

  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto path = out_dir / fmt::format("hist_{}.json", field_name(fields[i]));
    write_json(path, histogram_json(std::string(field_name(fields[i])), cols[i], options.bins));
    written.push_back(path);
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t j = i + 1; j < fields.size(); ++j) {
      const auto path = out_dir / fmt::format("kde_{}_{}.json", field_name(fields[i]), field_name(fields[j]));
      write_json(path, kde_2d_json(std::string(field_name(fields[i])), cols[i], std::string(field_name(fields[j])),
                                   cols[j], options.kde_grid, options.bandwidth_multiplier));
      written.push_back(path);
    }
  }

  const auto tension = evaluate_batch(data, params);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < tension.size(); ++i) {
    if (std::isfinite(tension[i].t_max) && (!std::isfinite(tension[peak].t_max) || tension[i].t_max > tension[peak].t_max)) {
      peak = i;
    }
  }
  const std::size_t len = std::min(options.series_length, data.size());
  const std::size_t begin = std::min(peak > len / 2 ? peak - len / 2 : 0, data.size() - len);
  nlohmann::json series{{"schema_version", 1}};
  std::vector<std::string> times;
  std::vector<double> response;
  for (std::size_t i = begin; i < begin + len; ++i) {
    times.push_back(format_timestamp(data.records()[i].timestamp));
    response.push_back(tension[i].t_max);
  }
  series["timestamp"] = times;
  series["t_max"] = response;
  for (std::size_t c = 0; c < fields.size(); ++c) {
    series[std::string(field_name(fields[c]))] =
        std::vector<double>(cols[c].begin() + static_cast<std::ptrdiff_t>(begin),
                            cols[c].begin() + static_cast<std::ptrdiff_t>(begin + len));
  }
  const auto path = out_dir / "series.json";
  write_json(path, series);
  written.push_back(path);
  return written;
}

}  // namespace metocean
