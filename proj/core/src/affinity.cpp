#include "pscore/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "pscore/errors.hpp"
#include "pscore/parallel.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

constexpr char kAffinityMagic[4] = {'P', 'S', 'A', 'F'};

}  // namespace

Eigen::MatrixXd standardized_continuous(const Dataset& data) {
  const std::size_t m = data.size();
  const std::size_t n = data.continuous.size();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t f = 0; f < n; ++f) {
    const auto& col = data.continuous[f];
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m);
    const double sd = std::sqrt(var);
    for (std::size_t r = 0; r < m; ++r) {
      const double centered = col[r] - mean;
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          sd > 0.0 ? centered / sd : 0.0;
    }
  }
  return z;
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double sigma) {
  if (a.size() != b.size()) {
    throw DataError("gaussian_kernel: vector lengths differ (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  if (!(sigma > 0.0)) {
    throw ConfigError("gaussian_kernel: sigma must be positive, got " + format_double(sigma));
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sq += diff * diff;
  }
  return std::exp(-sq / (2.0 * sigma * sigma));
}

double median_sigma(const Eigen::MatrixXd& points) {
  const Eigen::Index m = points.rows();
  if (m < 2) throw DataError("median_sigma needs at least 2 points");

  std::vector<double> squared;
  squared.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      squared.push_back((points.row(i) - points.row(j)).squaredNorm());
    }
  }

  const std::size_t n = squared.size();
  const std::size_t hi = n / 2;
  const std::size_t lo = (n - 1) / 2;
  std::nth_element(squared.begin(), squared.begin() + static_cast<std::ptrdiff_t>(lo),
                   squared.end());
  double median = squared[lo];
  if (hi != lo) {
    std::nth_element(squared.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                     squared.begin() + static_cast<std::ptrdiff_t>(hi), squared.end());
    median = 0.5 * (median + squared[hi]);
  }
  const double sigma = std::sqrt(median);
  if (!(sigma > 0.0)) {
    throw DataError(
        "median pairwise distance is zero; set the kernel bandwidth explicitly");
  }
  return sigma;
}

Eigen::MatrixXd delta_kernel_matrix(std::span<const int> codes) {
  const std::size_t m = codes.size();
  if (m == 0) throw DataError("delta_kernel_matrix: empty column");
  int max_code = 0;
  for (int c : codes) max_code = std::max(max_code, c);
  std::vector<double> inv_count(static_cast<std::size_t>(max_code) + 1, 0.0);
  for (int c : codes) inv_count[static_cast<std::size_t>(c)] += 1.0;
  for (double& v : inv_count) {
    if (v > 0.0) v = 1.0 / v;
  }

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                            static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      if (codes[i] == codes[j]) {
        const double v = inv_count[static_cast<std::size_t>(codes[i])];
        k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    }
  }
  return k;
}

AffinityMatrix build_affinity(const Dataset& data, const KernelParams& params) {
  data.validate();
  const std::size_t m = data.size();
  if (m > params.max_dense_samples) {
    throw DataError("dataset size " + std::to_string(m) + " exceeds the dense affinity cap " +
                    std::to_string(params.max_dense_samples) + "; subsample before clustering");
  }
  const std::size_t n_cont = data.continuous.size();
  const std::size_t n_disc = data.discrete.size();
  if (n_cont == 0 && n_disc == 0) {
    throw DataError("build_affinity: dataset has no covariate columns");
  }

  AffinityMatrix result;
  Eigen::MatrixXd z;
  if (n_cont > 0) {
    z = standardized_continuous(data);
    if (params.sigma.has_value()) {
      if (!(*params.sigma > 0.0)) {
        throw ConfigError("kernel sigma must be positive, got " + format_double(*params.sigma));
      }
      result.sigma = *params.sigma;
    } else {
      result.sigma = median_sigma(z);
    }
  }

  // Per-column inverse value counts for the delta kernels, computed once.
  std::vector<std::vector<double>> inv_counts(n_disc);
  for (std::size_t f = 0; f < n_disc; ++f) {
    inv_counts[f].assign(data.discrete_levels[f].size(), 0.0);
    for (int c : data.discrete[f]) inv_counts[f][static_cast<std::size_t>(c)] += 1.0;
    for (double& v : inv_counts[f]) v = 1.0 / v;
  }

  // Row-major copy so each sample's standardized features form a contiguous
  // span; entries then go through gaussian_kernel itself, keeping the matrix
  // bit-identical to a per-feature recomposition from the public kernels.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z_rows;
  if (n_cont > 0) z_rows = z;
  Eigen::MatrixXd k(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));

  parallel_for(0, m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        double value = 0.0;
        for (std::size_t f = 0; f < n_disc; ++f) {
          if (data.discrete[f][i] == data.discrete[f][j]) {
            value += inv_counts[f][static_cast<std::size_t>(data.discrete[f][i])];
          }
        }
        if (n_cont > 0) {
          value += gaussian_kernel(
              std::span<const double>(z_rows.row(static_cast<Eigen::Index>(i)).data(), n_cont),
              std::span<const double>(z_rows.row(static_cast<Eigen::Index>(j)).data(), n_cont),
              result.sigma);
        }
        k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
        k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
      }
    }
  });

  result.values = std::move(k);
  return result;
}

void write_affinity(const AffinityMatrix& affinity, const std::string& path) {
  const Eigen::Index m = affinity.values.rows();
  if (m != affinity.values.cols()) throw DataError("affinity matrix is not square");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write affinity dump: " + path);
  out.write(kAffinityMagic, sizeof(kAffinityMagic));
  const std::uint32_t m32 = static_cast<std::uint32_t>(m);
  unsigned char size_bytes[4];
  for (int b = 0; b < 4; ++b) size_bytes[b] = static_cast<unsigned char>(m32 >> (8 * b));
  out.write(reinterpret_cast<const char*>(size_bytes), sizeof(size_bytes));
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) row[static_cast<std::size_t>(j)] = affinity.values(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw DataError("short write on affinity dump: " + path);
}

AffinityMatrix read_affinity(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open affinity dump: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kAffinityMagic, sizeof(magic)) != 0) {
    throw DataError("bad affinity dump magic in " + path);
  }
  unsigned char size_bytes[4];
  in.read(reinterpret_cast<char*>(size_bytes), sizeof(size_bytes));
  if (!in) throw DataError("truncated affinity dump header in " + path);
  std::uint32_t m32 = 0;
  for (int b = 0; b < 4; ++b) m32 |= static_cast<std::uint32_t>(size_bytes[b]) << (8 * b);

  AffinityMatrix result;
  const Eigen::Index m = static_cast<Eigen::Index>(m32);
  result.values.resize(m, m);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw DataError("truncated affinity dump body in " + path);
    for (Eigen::Index j = 0; j < m; ++j) result.values(i, j) = row[static_cast<std::size_t>(j)];
  }
  return result;
}

}  // namespace pscore
