#include "pscore/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pscore/affinity.hpp"
#include "pscore/errors.hpp"
#include "pscore/parallel.hpp"
#include "pscore/rng.hpp"
#include "pscore/textio.hpp"

namespace pscore {
namespace {

constexpr double kJointFloor = 1e-12;
constexpr double kPerplexityTolerance = 1e-5;
constexpr int kBandwidthIterations = 50;
constexpr int kExaggerationIterations = 250;
constexpr double kExaggerationFactor = 12.0;
constexpr double kEarlyMomentum = 0.5;
constexpr double kLateMomentum = 0.8;
constexpr int kTraceStride = 50;

// Student-t / Gaussian similarity numerators for the 2-D configuration.
Eigen::MatrixXd q_numerators(const Eigen::MatrixXd& coords, QKind kind) {
  const Eigen::Index m = coords.rows();
  Eigen::MatrixXd num(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    num(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      const double sq = dx * dx + dy * dy;
      const double value =
          kind == QKind::student_t ? 1.0 / (1.0 + sq) : std::exp(-sq);
      num(i, j) = value;
      num(j, i) = value;
    }
  }
  return num;
}

Eigen::MatrixXd q_from_numerators(const Eigen::MatrixXd& num) {
  const double total = num.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("degenerate low-dimensional similarity matrix");
  }
  return num / total;
}

}  // namespace

std::string to_string(QKind kind) {
  return kind == QKind::student_t ? "student_t" : "gaussian";
}

QKind q_kind_from_string(const std::string& text) {
  if (text == "student_t") return QKind::student_t;
  if (text == "gaussian") return QKind::gaussian;
  throw ConfigError("unknown low-dimensional kernel '" + text +
                    "' (expected student_t or gaussian)");
}

void EmbedParams::validate() const {
  if (!(perplexity > 1.0)) throw ConfigError("perplexity must be > 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
}

DistanceMatrix mixed_distance(const Dataset& data) {
  data.validate();
  const auto m = static_cast<Eigen::Index>(data.size());
  const std::size_t n_cont = data.continuous.size();
  const std::size_t n_disc = data.discrete.size();
  if (n_cont == 0 && n_disc == 0) throw DataError("dataset has no covariate columns");

  DistanceMatrix result;
  result.continuous_part = Eigen::MatrixXd::Zero(m, m);
  result.discrete_part = Eigen::MatrixXd::Zero(m, m);

  if (n_cont > 0) {
    const Eigen::MatrixXd z = standardized_continuous(data);  // m x n_cont
    parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(m); ++j) {
          const double dist =
              (z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(j))).norm();
          result.continuous_part(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              dist;
          result.continuous_part(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
              dist;
        }
      }
    });
  }

  if (n_disc > 0) {
    const double inv_n = 1.0 / static_cast<double>(n_disc);
    parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(m); ++j) {
          int mismatches = 0;
          for (std::size_t f = 0; f < n_disc; ++f) {
            if (data.discrete[f][i] != data.discrete[f][j]) ++mismatches;
          }
          const double dist = static_cast<double>(mismatches) * inv_n;
          result.discrete_part(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist;
          result.discrete_part(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dist;
        }
      }
    });
  }

  if (n_disc == 0) {
    result.tau = 0.0;
  } else if (n_cont == 0) {
    result.tau = 1.0;
  } else {
    const double max_disc = result.discrete_part.maxCoeff();
    if (max_disc == 0.0) {
      result.tau = 0.0;
    } else {
      const double max_cont = result.continuous_part.maxCoeff();
      result.tau = (static_cast<double>(n_disc) / static_cast<double>(n_cont)) *
                   (max_cont / max_disc);
    }
  }
  result.values = result.continuous_part + result.tau * result.discrete_part;
  return result;
}

ConditionalResult conditional_p(const DistanceMatrix& distance, double perplexity) {
  const Eigen::Index m = distance.values.rows();
  if (distance.values.cols() != m) throw DataError("distance matrix must be square");
  if (m < 2) throw DataError("need at least 2 rows for neighborhood distributions");
  if (!(perplexity > 1.0)) throw ConfigError("perplexity must be > 1");
  if (!(perplexity < static_cast<double>(m))) {
    throw ConfigError("perplexity " + format_double(perplexity) +
                      " must be below the row count " + std::to_string(m));
  }

  ConditionalResult result;
  result.p = Eigen::MatrixXd::Zero(m, m);
  if (perplexity > static_cast<double>(m) / 3.0) {
    result.warnings.push_back("perplexity " + format_double(perplexity) +
                              " is large for " + std::to_string(m) +
                              " rows; neighborhoods may blur together");
  }

  std::vector<NonConvergedRow> per_row_failures(static_cast<std::size_t>(m), {0, -1.0});
  parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> sq(static_cast<std::size_t>(m));
    std::vector<double> prob(static_cast<std::size_t>(m));
    for (std::size_t i = lo; i < hi; ++i) {
      double min_sq = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
        if (j == i) continue;
        const double d = distance.values(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(j));
        sq[j] = d * d;
        min_sq = std::min(min_sq, sq[j]);
      }

      double beta = 1.0;
      double beta_lo = 0.0;
      double beta_hi = std::numeric_limits<double>::infinity();
      double achieved = 0.0;
      bool converged = false;
      for (int iter = 0; iter < kBandwidthIterations; ++iter) {
        // Shift by the row minimum so at least one weight is exp(0) = 1.
        double sum = 0.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
          if (j == i) {
            prob[j] = 0.0;
            continue;
          }
          prob[j] = std::exp(-(sq[j] - min_sq) * beta);
          sum += prob[j];
        }
        double entropy_bits = 0.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
          if (j == i || prob[j] <= 0.0) continue;
          const double p = prob[j] / sum;
          entropy_bits -= p * std::log2(p);
        }
        achieved = std::exp2(entropy_bits);
        const double diff = achieved - perplexity;
        if (std::abs(diff) <= kPerplexityTolerance) {
          converged = true;
          break;
        }
        if (diff > 0.0) {  // too spread out: sharpen
          beta_lo = beta;
          beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta_lo + beta_hi);
        } else {
          beta_hi = beta;
          beta = 0.5 * (beta_lo + beta_hi);
        }
      }

      double sum = 0.0;
      for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
        if (j == i) {
          prob[j] = 0.0;
          continue;
        }
        prob[j] = std::exp(-(sq[j] - min_sq) * beta);
        sum += prob[j];
      }
      for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
        result.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prob[j] / sum;
      }
      if (!converged) per_row_failures[i] = {i, achieved};
    }
  });

  for (const auto& failure : per_row_failures) {
    if (failure.achieved_perplexity >= 0.0) result.non_converged.push_back(failure);
  }
  return result;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& cond) {
  const Eigen::Index m = cond.rows();
  if (cond.cols() != m) throw DataError("conditional matrix must be square");
  Eigen::MatrixXd joint(m, m);
  const double scale = 1.0 / (2.0 * static_cast<double>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    joint(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double value = std::max((cond(i, j) + cond(j, i)) * scale, kJointFloor);
      joint(i, j) = value;
      joint(j, i) = value;
    }
  }
  return joint;
}

double kl_divergence(const Eigen::MatrixXd& joint_p, const Eigen::MatrixXd& coords, QKind kind) {
  const Eigen::MatrixXd q = q_from_numerators(q_numerators(coords, kind));
  double kl = 0.0;
  for (Eigen::Index i = 0; i < joint_p.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint_p.cols(); ++j) {
      if (i == j) continue;
      const double p = joint_p(i, j);
      if (p <= 0.0) continue;
      kl += p * std::log(p / std::max(q(i, j), kJointFloor));
    }
  }
  return kl;
}

Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& joint_p, const Eigen::MatrixXd& coords,
                            QKind kind) {
  const Eigen::Index m = coords.rows();
  const Eigen::MatrixXd num = q_numerators(coords, kind);
  const Eigen::MatrixXd q = q_from_numerators(num);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(m, 2);
  // Per-point accumulation in a fixed j order keeps runs reproducible across
  // thread counts.
  parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t iu = lo; iu < hi; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      double gx = 0.0, gy = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        const double mismatch = joint_p(i, j) - q(i, j);
        const double attenuation = kind == QKind::student_t ? num(i, j) : 1.0;
        const double scale = 4.0 * mismatch * attenuation;
        gx += scale * (coords(i, 0) - coords(j, 0));
        gy += scale * (coords(i, 1) - coords(j, 1));
      }
      grad(i, 0) = gx;
      grad(i, 1) = gy;
    }
  });
  return grad;
}

Embedding run_embedding(const DistanceMatrix& distance, const EmbedParams& params) {
  params.validate();
  const Eigen::Index m = distance.values.rows();

  ConditionalResult cond = conditional_p(distance, params.perplexity);
  const Eigen::MatrixXd joint = symmetrize(cond.p);

  Embedding out;
  out.non_converged = std::move(cond.non_converged);
  out.warnings = std::move(cond.warnings);

  Rng rng(params.seed);
  out.coords.resize(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.coords(i, 0) = rng.normal(0.0, 1e-4);
    out.coords(i, 1) = rng.normal(0.0, 1e-4);
  }

  out.initial_kl = kl_divergence(joint, out.coords, params.q_kind);
  out.kl_trace.push_back({0, out.initial_kl});

  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(m, 2);
  for (int iter = 0; iter < params.iterations; ++iter) {
    const bool exaggerate = iter < kExaggerationIterations;
    const Eigen::MatrixXd grad = kl_gradient(
        exaggerate ? Eigen::MatrixXd(joint * kExaggerationFactor) : joint, out.coords,
        params.q_kind);
    if (!grad.allFinite()) {
      throw NumericError("non-finite embedding gradient at iteration " + std::to_string(iter));
    }
    const double momentum = iter < kExaggerationIterations ? kEarlyMomentum : kLateMomentum;
    update = momentum * update - params.learning_rate * grad;
    out.coords += update;
    out.coords.rowwise() -= out.coords.colwise().mean();

    const int done = iter + 1;
    if (done % kTraceStride == 0 && done != params.iterations) {
      out.kl_trace.push_back({done, kl_divergence(joint, out.coords, params.q_kind)});
    }
  }

  out.final_kl = kl_divergence(joint, out.coords, params.q_kind);
  out.kl_trace.push_back({params.iterations, out.final_kl});
  return out;
}

}  // namespace pscore
