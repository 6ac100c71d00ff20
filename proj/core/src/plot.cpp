#include "pscore/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pscore/errors.hpp"
#include "pscore/rng.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

constexpr int kCanvas = 800;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 40.0;
constexpr double kMarginTop = 56.0;
constexpr double kMarginBottom = 40.0;
constexpr double kPointRadius = 3.0;

const char* const kPalette[3] = {"#1b9e77", "#d95f02", "#7570b3"};

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void check(const ScatterData& data) {
  const auto m = static_cast<std::size_t>(data.coords.rows());
  if (data.coords.cols() != 2) throw DataError("scatter coordinates must have 2 columns");
  if (data.groups.size() != m) throw DataError("scatter group codes do not match coordinates");
  if (data.row_ids.size() != m) throw DataError("scatter row ids do not match coordinates");
  for (int g : data.groups) {
    if (g < 0 || static_cast<std::size_t>(g) >= data.group_names.size()) {
      throw DataError("scatter group code out of range");
    }
  }
}

}  // namespace

void write_coords_csv(const ScatterData& data, const std::string& path) {
  check(data);
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"row", "x", "y", "group"});
  for (Eigen::Index i = 0; i < data.coords.rows(); ++i) {
    rows.push_back({std::to_string(data.row_ids[static_cast<std::size_t>(i)]),
                    format_double(data.coords(i, 0)), format_double(data.coords(i, 1)),
                    data.group_names[static_cast<std::size_t>(
                        data.groups[static_cast<std::size_t>(i)])]});
  }
  write_csv(path, rows);
}

void write_scatter_svg(const ScatterData& data, const std::string& title,
                       const std::string& path) {
  check(data);
  const Eigen::Index m = data.coords.rows();

  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  if (m > 0) {
    min_x = data.coords.col(0).minCoeff();
    max_x = data.coords.col(0).maxCoeff();
    min_y = data.coords.col(1).minCoeff();
    max_y = data.coords.col(1).maxCoeff();
  }
  // Degenerate extents still need a finite scale.
  if (max_x - min_x < 1e-12) { min_x -= 0.5; max_x += 0.5; }
  if (max_y - min_y < 1e-12) { min_y -= 0.5; max_y += 0.5; }

  const double plot_w = kCanvas - kMarginLeft - kMarginRight;
  const double plot_h = kCanvas - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + (x - min_x) / (max_x - min_x) * plot_w; };
  // SVG y grows downward; flip so larger y plots higher.
  auto sy = [&](double y) { return kMarginTop + (max_y - y) / (max_y - min_y) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
         "viewBox=\"0 0 800 800\">\n";
  svg += "<rect width=\"800\" height=\"800\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"400\" y=\"32\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\" fill=\"#222222\">" + xml_escape(title) + "</text>\n";
  svg += "<rect x=\"" + fixed2(kMarginLeft) + "\" y=\"" + fixed2(kMarginTop) + "\" width=\"" +
         fixed2(plot_w) + "\" height=\"" + fixed2(plot_h) +
         "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  for (Eigen::Index i = 0; i < m; ++i) {
    const int g = data.groups[static_cast<std::size_t>(i)];
    svg += "<circle cx=\"" + fixed2(sx(data.coords(i, 0))) + "\" cy=\"" +
           fixed2(sy(data.coords(i, 1))) + "\" r=\"" + fixed2(kPointRadius) + "\" fill=\"" +
           kPalette[g % 3] + "\" fill-opacity=\"0.75\"/>\n";
  }

  // Legend block, top-right inside the frame.
  const double legend_x = kCanvas - kMarginRight - 170.0;
  double legend_y = kMarginTop + 16.0;
  svg += "<rect x=\"" + fixed2(legend_x - 10.0) + "\" y=\"" + fixed2(legend_y - 14.0) +
         "\" width=\"170\" height=\"" +
         fixed2(static_cast<double>(data.group_names.size()) * 20.0 + 8.0) +
         "\" fill=\"#ffffff\" fill-opacity=\"0.85\" stroke=\"#999999\"/>\n";
  for (std::size_t g = 0; g < data.group_names.size(); ++g) {
    svg += "<rect x=\"" + fixed2(legend_x) + "\" y=\"" + fixed2(legend_y - 9.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + kPalette[g % 3] + "\"/>\n";
    svg += "<text x=\"" + fixed2(legend_x + 18.0) + "\" y=\"" + fixed2(legend_y + 1.0) +
           "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222222\">" +
           xml_escape(data.group_names[g]) + "</text>\n";
    legend_y += 20.0;
  }
  svg += "</svg>\n";
  write_text_file(path, svg);
}

std::vector<std::size_t> subsample_per_group(const std::vector<int>& groups, int n_groups,
                                             std::size_t per_group, std::uint64_t seed) {
  if (n_groups < 1) throw ConfigError("need at least one group");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_groups));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] < 0 || groups[i] >= n_groups) throw DataError("group code out of range");
    members[static_cast<std::size_t>(groups[i])].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> selected;
  for (auto& rows : members) {
    if (rows.size() <= per_group) {
      selected.insert(selected.end(), rows.begin(), rows.end());
      continue;
    }
    for (std::size_t pick : rng.sample_without_replacement(rows.size(), per_group)) {
      selected.push_back(rows[pick]);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace pscore
