#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pscore {

// Rows for a grouped 2-D scatter: one group code per point plus the legend
// names behind the codes.
struct ScatterData {
  Eigen::MatrixXd coords;               // m x 2
  std::vector<int> groups;              // m codes into group_names
  std::vector<std::string> group_names;
  std::vector<std::size_t> row_ids;     // original row indices for the CSV
};

// CSV with header row,x,y,group (group written as its name).
void write_coords_csv(const ScatterData& data, const std::string& path);

// Standalone 800x800 SVG scatter with a legend; groups cycle through a fixed
// three-color palette.
void write_scatter_svg(const ScatterData& data, const std::string& title,
                       const std::string& path);

// Deterministically pick up to `per_group` rows from each group (groups in
// ascending code order, chosen rows sorted ascending overall).
std::vector<std::size_t> subsample_per_group(const std::vector<int>& groups, int n_groups,
                                             std::size_t per_group, std::uint64_t seed);

}  // namespace pscore
