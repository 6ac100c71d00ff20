#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pscore/affinity.hpp"
#include "pscore/dataset.hpp"
#include "pscore/errors.hpp"
#include "support/datagen.hpp"
#include "support/temp_dir.hpp"

using namespace pscore;

TEST_CASE("standardization uses population moments and zeroes constant columns") {
  Schema schema;
  schema.columns = {{"c0", ColumnRole::continuous},
                    {"c1", ColumnRole::continuous},
                    {"t", ColumnRole::treatment}};
  const Dataset d = ingest_cells({{"c0", "c1", "t"},
                                  {"1", "5", "a"},
                                  {"2", "5", "b"},
                                  {"3", "5", "a"}},
                                 schema)
                        .data;

  const Eigen::MatrixXd z = standardized_continuous(d);
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 2);
  const double sd = std::sqrt(2.0 / 3.0);  // population std of {1,2,3}
  CHECK(z(0, 0) == doctest::Approx(-1.0 / sd).epsilon(1e-15));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.0 / sd).epsilon(1e-15));
  CHECK(z(0, 1) == 0.0);
  CHECK(z(1, 1) == 0.0);
  CHECK(z(2, 1) == 0.0);
}

TEST_CASE("gaussian kernel closed forms") {
  const std::vector<double> a = {0.0, 0.0};
  const std::vector<double> b = {1.0, 1.0};
  CHECK(gaussian_kernel(a, a, 2.0) == 1.0);
  CHECK(gaussian_kernel(a, b, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(gaussian_kernel(a, b, 2.0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_kernel(a, std::vector<double>{1.0}, 1.0), DataError);
  CHECK_THROWS_AS(gaussian_kernel(a, b, 0.0), ConfigError);
}

TEST_CASE("median bandwidth on odd and even pair counts") {
  Eigen::MatrixXd odd(3, 1);
  odd << 0.0, 1.0, 3.0;  // squared distances {1, 9, 4}; median 4
  CHECK(median_sigma(odd) == doctest::Approx(2.0).epsilon(1e-15));

  Eigen::MatrixXd even(4, 1);
  even << 0.0, 1.0, 2.0, 4.0;  // {1, 4, 16, 1, 9, 4}; central pair (4, 4)
  CHECK(median_sigma(even) == doctest::Approx(2.0).epsilon(1e-15));

  Eigen::MatrixXd dupes(3, 1);
  dupes << 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(median_sigma(dupes), DataError);
}

TEST_CASE("delta kernel: shared-value weights and unit row sums") {
  const std::vector<int> codes = {0, 1, 0, 2, 1};
  const Eigen::MatrixXd k = delta_kernel_matrix(codes);
  REQUIRE(k.rows() == 5);
  CHECK(k(0, 0) == 0.5);
  CHECK(k(0, 2) == 0.5);
  CHECK(k(2, 0) == 0.5);
  CHECK(k(1, 4) == 0.5);
  CHECK(k(3, 3) == 1.0);
  CHECK(k(0, 1) == 0.0);
  CHECK(k(0, 3) == 0.0);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(k.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(k.isApprox(k.transpose()));
}

TEST_CASE("affinity equals the per-feature recomposition exactly") {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const Dataset d = test_support::random_dataset(seed, 20, 3, 2, 2);
    const AffinityMatrix built = build_affinity(d, {});

    const Eigen::MatrixXd z = standardized_continuous(d);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(20, 20);
    for (const auto& codes : d.discrete) expected += delta_kernel_matrix(codes);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> zr = z;
    const double sigma = median_sigma(z);
    CHECK(built.sigma == sigma);
    for (Eigen::Index i = 0; i < 20; ++i) {
      for (Eigen::Index j = 0; j < 20; ++j) {
        const double gauss = gaussian_kernel(
            std::span<const double>(zr.row(i).data(), static_cast<std::size_t>(z.cols())),
            std::span<const double>(zr.row(j).data(), static_cast<std::size_t>(z.cols())),
            sigma);
        CHECK(built.values(i, j) == expected(i, j) + gauss);
      }
    }
  }
}

TEST_CASE("affinity is symmetric positive semi-definite on random data") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const Dataset d = test_support::random_dataset(seed, 30, 2, 2, 2);
    const AffinityMatrix a = build_affinity(d, {});
    CHECK(a.values.isApprox(a.values.transpose()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.values);
    const double max_eig = eig.eigenvalues().maxCoeff();
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * max_eig);
  }
}

TEST_CASE("explicit bandwidth is honoured; bad values rejected") {
  const Dataset d = test_support::random_dataset(7, 15, 2, 1, 2);
  KernelParams params;
  params.sigma = 3.5;
  CHECK(build_affinity(d, params).sigma == 3.5);
  params.sigma = -1.0;
  CHECK_THROWS_AS(build_affinity(d, params), ConfigError);
}

TEST_CASE("single-kind datasets use only their kernel") {
  const Dataset cont_only = test_support::random_dataset(8, 12, 2, 0, 2);
  const AffinityMatrix a = build_affinity(cont_only, {});
  CHECK(a.sigma > 0.0);
  for (Eigen::Index i = 0; i < a.values.rows(); ++i) {
    CHECK(a.values(i, i) == 1.0);  // Gaussian kernel of a point with itself
    for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
      CHECK(a.values(i, j) <= 1.0 + 1e-15);
      CHECK(a.values(i, j) > 0.0);
    }
  }

  const Dataset disc_only = test_support::random_dataset(9, 12, 0, 2, 2);
  const AffinityMatrix b = build_affinity(disc_only, {});
  CHECK(b.sigma == 0.0);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(12, 12);
  for (const auto& codes : disc_only.discrete) expected += delta_kernel_matrix(codes);
  CHECK(b.values == expected);
}

TEST_CASE("dense size cap is enforced") {
  const Dataset d = test_support::random_dataset(13, 40, 1, 1, 2);
  KernelParams params;
  params.max_dense_samples = 39;
  CHECK_THROWS_AS(build_affinity(d, params), DataError);
  params.max_dense_samples = 40;
  CHECK(build_affinity(d, params).values.rows() == 40);
}

TEST_CASE("binary dump round-trips bit-exactly and rejects corruption") {
  const Dataset d = test_support::random_dataset(14, 10, 2, 1, 2);
  const AffinityMatrix a = build_affinity(d, {});
  test_support::TempDir dir;
  const std::string path = dir.file("affinity.bin");
  write_affinity(a, path);
  const AffinityMatrix back = read_affinity(path);
  CHECK(back.values == a.values);
  CHECK(back.sigma == 0.0);  // dumps carry values only

  pscore::write_text_file(path, "NOTMAGICstuff");
  CHECK_THROWS_AS(read_affinity(path), DataError);
  CHECK_THROWS_AS(read_affinity(dir.file("missing.bin")), DataError);
}
