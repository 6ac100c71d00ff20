// Mixed-distance 2-D embedding: distance decomposition, per-row bandwidth
// calibration, joint distribution invariants, and the KL objective/gradient.
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pscore/affinity.hpp"
#include "pscore/dataset.hpp"
#include "pscore/embed.hpp"
#include "pscore/errors.hpp"
#include "pscore/rng.hpp"
#include "support/datagen.hpp"
#include "support/fd.hpp"

using namespace pscore;

namespace {

// Flatten an m x 2 coordinate matrix for the finite-difference helper.
std::vector<double> flatten(const Eigen::MatrixXd& coords) {
  std::vector<double> x(static_cast<std::size_t>(coords.size()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    x[static_cast<std::size_t>(2 * i)] = coords(i, 0);
    x[static_cast<std::size_t>(2 * i + 1)] = coords(i, 1);
  }
  return x;
}

Eigen::MatrixXd unflatten(const std::vector<double>& x) {
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(x.size() / 2), 2);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    coords(i, 0) = x[static_cast<std::size_t>(2 * i)];
    coords(i, 1) = x[static_cast<std::size_t>(2 * i + 1)];
  }
  return coords;
}

double row_perplexity(const Eigen::MatrixXd& p, Eigen::Index i) {
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double v = p(i, j);
    if (v > 0.0) entropy -= v * std::log2(v);
  }
  return std::pow(2.0, entropy);
}

}  // namespace

TEST_CASE("mixed_distance splits into continuous and discrete parts with tau scaling") {
  Schema schema;
  schema.columns = {{"x", ColumnRole::continuous},
                    {"y", ColumnRole::continuous},
                    {"c1", ColumnRole::discrete},
                    {"c2", ColumnRole::discrete},
                    {"t", ColumnRole::treatment}};
  const auto data = ingest_cells({{"x", "y", "c1", "c2", "t"},
                                  {"0", "0", "a", "p", "A"},
                                  {"1", "0", "a", "q", "A"},
                                  {"0", "2", "b", "q", "B"},
                                  {"1", "2", "b", "p", "B"}},
                                 schema)
                        .data;
  const auto dist = mixed_distance(data);

  REQUIRE(dist.values.rows() == 4);
  // Continuous part is the Euclidean distance over *standardized* columns.
  const auto z = standardized_continuous(data);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(dist.continuous_part(i, i) == 0.0);
    CHECK(dist.discrete_part(i, i) == 0.0);
    CHECK(dist.values(i, i) == 0.0);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double want = (z.row(i) - z.row(j)).norm();
      CHECK(dist.continuous_part(i, j) == doctest::Approx(want).epsilon(1e-12));
      CHECK(dist.values(i, j) ==
            dist.continuous_part(i, j) + dist.tau * dist.discrete_part(i, j));
      CHECK(dist.values(i, j) == dist.values(j, i));
    }
  }
  // Discrete part is the mismatch fraction over the two discrete columns.
  CHECK(dist.discrete_part(0, 1) == 0.5);  // c1 equal, c2 differs
  CHECK(dist.discrete_part(0, 2) == 1.0);  // both differ
  CHECK(dist.discrete_part(0, 3) == 0.5);  // c1 differs, c2 equal
  CHECK(dist.discrete_part(1, 2) == 0.5);
  // tau = (#discrete / #continuous) * (max Dc / max Dd) with 2/2 = 1.
  const double max_dc = dist.continuous_part.maxCoeff();
  const double max_dd = dist.discrete_part.maxCoeff();
  CHECK(max_dd == 1.0);
  CHECK(dist.tau == doctest::Approx(max_dc / max_dd).epsilon(1e-12));
}

TEST_CASE("mixed_distance edge cases fix tau") {
  SUBCASE("no discrete columns: tau = 0, distance is purely continuous") {
    const auto data = test_support::random_dataset(3, 12, 3, 0, 2);
    const auto dist = mixed_distance(data);
    CHECK(dist.tau == 0.0);
    for (Eigen::Index i = 0; i < dist.values.rows(); ++i)
      for (Eigen::Index j = 0; j < dist.values.cols(); ++j)
        CHECK(dist.values(i, j) == dist.continuous_part(i, j));
  }

  SUBCASE("no continuous columns: tau = 1, distance is purely discrete") {
    const auto data = test_support::random_dataset(4, 12, 0, 3, 2);
    const auto dist = mixed_distance(data);
    CHECK(dist.tau == 1.0);
    for (Eigen::Index i = 0; i < dist.values.rows(); ++i)
      for (Eigen::Index j = 0; j < dist.values.cols(); ++j) {
        CHECK(dist.values(i, j) == dist.discrete_part(i, j));
        CHECK(dist.continuous_part(i, j) == 0.0);
      }
  }

  SUBCASE("identical discrete columns everywhere: tau = 0") {
    Schema schema;
    schema.columns = {{"x", ColumnRole::continuous},
                      {"c", ColumnRole::discrete},
                      {"t", ColumnRole::treatment}};
    const auto data = ingest_cells({{"x", "c", "t"},
                                    {"0", "same", "A"},
                                    {"1", "same", "A"},
                                    {"3", "same", "B"}},
                                   schema)
                          .data;
    const auto dist = mixed_distance(data);
    CHECK(dist.tau == 0.0);
    CHECK(dist.discrete_part.maxCoeff() == 0.0);
  }
}

TEST_CASE("conditional_p calibrates every row to the target perplexity") {
  const auto data = test_support::random_dataset(11, 40, 3, 1, 2);
  const auto dist = mixed_distance(data);
  const double target = 12.0;
  const auto cond = conditional_p(dist, target);

  REQUIRE(cond.p.rows() == 40);
  CHECK(cond.non_converged.empty());
  CHECK(cond.warnings.empty());
  for (Eigen::Index i = 0; i < cond.p.rows(); ++i) {
    CHECK(cond.p(i, i) == 0.0);
    CHECK(cond.p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cond.p.row(i).minCoeff() >= 0.0);
    CHECK(row_perplexity(cond.p, i) == doctest::Approx(target).epsilon(1e-3));
  }

  SUBCASE("an over-ambitious target draws a warning") {
    const auto loud = conditional_p(dist, 20.0);  // m/3 is ~13.3
    CHECK_FALSE(loud.warnings.empty());
  }
}

TEST_CASE("symmetrize yields a symmetric joint distribution with unit mass") {
  const auto data = test_support::random_dataset(21, 25, 2, 2, 3);
  const auto dist = mixed_distance(data);
  const auto cond = conditional_p(dist, 8.0);
  const auto joint = symmetrize(cond.p);

  const Eigen::Index m = joint.rows();
  double mass = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    CHECK(joint(i, i) == 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
      CHECK(joint(i, j) == joint(j, i));
      if (i != j) CHECK(joint(i, j) >= 1e-12);
      mass += joint(i, j);
    }
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

  SUBCASE("off-diagonal floor applies to pairs with zero conditional mass") {
    Eigen::MatrixXd cond(3, 3);
    cond << 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0,
            0.5, 0.5, 0.0;
    const auto p = symmetrize(cond);
    CHECK(p(0, 1) == 1e-12);  // both directions carried zero mass
    CHECK(p(1, 0) == 1e-12);
    CHECK(p(0, 2) == doctest::Approx(1.5 / 6.0).epsilon(1e-15));
    CHECK(p(1, 2) == doctest::Approx(1.5 / 6.0).epsilon(1e-15));
    CHECK(p(0, 0) == 0.0);
  }
}

TEST_CASE("kl_gradient matches central finite differences for both neighborhoods") {
  const auto data = test_support::random_dataset(31, 10, 2, 1, 2);
  const auto dist = mixed_distance(data);
  const auto cond = conditional_p(dist, 3.0);
  const auto joint = symmetrize(cond.p);

  Rng rng(5);
  Eigen::MatrixXd coords(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) {
    coords(i, 0) = rng.normal(0.0, 1.0);
    coords(i, 1) = rng.normal(0.0, 1.0);
  }

  for (QKind kind : {QKind::student_t, QKind::gaussian}) {
    CAPTURE(to_string(kind));
    const auto grad = kl_gradient(joint, coords, kind);
    REQUIRE(grad.rows() == 10);
    REQUIRE(grad.cols() == 2);

    auto objective = [&](const std::vector<double>& x) {
      return kl_divergence(joint, unflatten(x), kind);
    };
    const auto fd = test_support::central_gradient(objective, flatten(coords), 1e-5);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index k = 0; k < 2; ++k) {
        const double analytic = grad(i, k);
        const double numeric = fd[static_cast<std::size_t>(2 * i + k)];
        CHECK(test_support::relative_error(analytic, numeric) <= 1e-4);
      }
    }
  }
}

TEST_CASE("kl_divergence is zero when Q reproduces P") {
  // With two points, both P and Q put all off-diagonal mass on the single
  // pair, so the divergence vanishes no matter the distance.
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 0.5,
       0.5, 0.0;
  Eigen::MatrixXd coords(2, 2);
  coords << 0.0, 0.0,
            3.0, -1.0;
  CHECK(kl_divergence(p, coords, QKind::student_t) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kl_divergence(p, coords, QKind::gaussian) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("run_embedding lowers the KL objective and records its trace") {
  const auto spec = test_support::separated_spec(20, 3.5);
  const auto data = synthesize(spec, 17);
  const auto dist = mixed_distance(data);

  EmbedParams params;
  params.perplexity = 10.0;
  params.iterations = 320;
  params.seed = 17;

  for (QKind kind : {QKind::student_t, QKind::gaussian}) {
    CAPTURE(to_string(kind));
    params.q_kind = kind;
    // The heavy-tailed neighborhood tolerates an aggressive step; the thin
    // Gaussian tails need a smaller one to keep exp(-d^2) from underflowing.
    params.learning_rate = kind == QKind::student_t ? 7.0 : 0.5;
    const auto emb = run_embedding(dist, params);
    REQUIRE(emb.coords.rows() == static_cast<Eigen::Index>(data.size()));
    REQUIRE(emb.coords.cols() == 2);
    CHECK(emb.coords.allFinite());
    CHECK(emb.final_kl < emb.initial_kl);
    CHECK(emb.final_kl >= 0.0);
    REQUIRE(emb.kl_trace.size() >= 2);
    // Trace starts at iteration 0 with the initial objective, samples every
    // 50 iterations, and closes with the final iteration and final_kl.
    CHECK(emb.kl_trace.front().iteration == 0);
    CHECK(emb.kl_trace.front().kl == emb.initial_kl);
    for (std::size_t s = 0; s + 1 < emb.kl_trace.size(); ++s) {
      CHECK(emb.kl_trace[s].iteration % 50 == 0);
      CHECK(emb.kl_trace[s].iteration < emb.kl_trace[s + 1].iteration);
    }
    CHECK(emb.kl_trace.back().iteration == params.iterations);
    CHECK(emb.kl_trace.back().kl == emb.final_kl);
    // Coordinates are recentered: the column means stay at zero.
    CHECK(std::abs(emb.coords.col(0).mean()) < 1e-9);
    CHECK(std::abs(emb.coords.col(1).mean()) < 1e-9);
  }
}

TEST_CASE("run_embedding is deterministic for a fixed seed") {
  const auto data = test_support::random_dataset(41, 30, 2, 1, 2);
  const auto dist = mixed_distance(data);
  EmbedParams params;
  params.perplexity = 8.0;
  params.iterations = 60;
  params.seed = 123;
  const auto a = run_embedding(dist, params);
  const auto b = run_embedding(dist, params);
  CHECK(a.final_kl == b.final_kl);
  for (Eigen::Index i = 0; i < a.coords.rows(); ++i)
    for (Eigen::Index k = 0; k < 2; ++k) CHECK(a.coords(i, k) == b.coords(i, k));

  SUBCASE("a different seed starts elsewhere") {
    EmbedParams other = params;
    other.seed = 124;
    const auto c = run_embedding(dist, other);
    bool any_differ = false;
    for (Eigen::Index i = 0; i < a.coords.rows() && !any_differ; ++i)
      for (Eigen::Index k = 0; k < 2; ++k)
        if (a.coords(i, k) != c.coords(i, k)) any_differ = true;
    CHECK(any_differ);
  }
}

TEST_CASE("embedding parameter and kind validation") {
  EmbedParams params;
  CHECK_NOTHROW(params.validate());
  params.perplexity = 0.0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params.perplexity = 30.0;
  params.iterations = 0;
  CHECK_THROWS_AS(params.validate(), ConfigError);
  params.iterations = 100;
  params.learning_rate = 0.0;
  CHECK_THROWS_AS(params.validate(), ConfigError);

  CHECK(q_kind_from_string("student_t") == QKind::student_t);
  CHECK(q_kind_from_string("gaussian") == QKind::gaussian);
  CHECK(to_string(QKind::student_t) == "student_t");
  CHECK(to_string(QKind::gaussian) == "gaussian");
  CHECK_THROWS_AS(q_kind_from_string("cauchy"), ConfigError);
}
