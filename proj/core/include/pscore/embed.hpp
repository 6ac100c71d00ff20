#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pscore/dataset.hpp"

namespace pscore {

enum class QKind { student_t, gaussian };

std::string to_string(QKind kind);
QKind q_kind_from_string(const std::string& text);

struct EmbedParams {
  double perplexity = 90.0;
  double learning_rate = 7.0;
  int iterations = 1000;
  QKind q_kind = QKind::student_t;
  std::uint64_t seed = 0;
  void validate() const;
};

// Combined distance D = D_c + tau * D_d over mixed covariates. The parts are
// retained so the decomposition can be checked exactly as stored.
struct DistanceMatrix {
  Eigen::MatrixXd values;
  Eigen::MatrixXd continuous_part;  // Euclidean distance over standardized continuous block
  Eigen::MatrixXd discrete_part;    // mismatch fraction over discrete columns
  double tau = 0.0;
};

// D_c = Euclidean distance over the standardized continuous block;
// D_d(i, j) = (fraction of discrete columns whose values differ);
// tau = (#discrete / #continuous) * (max D_c / max D_d), with the edge cases:
// no discrete columns -> tau = 0; no continuous columns -> tau = 1, D = D_d;
// max D_d = 0 -> tau = 0.
DistanceMatrix mixed_distance(const Dataset& data);

struct NonConvergedRow {
  std::size_t row = 0;
  double achieved_perplexity = 0.0;
};

struct ConditionalResult {
  Eigen::MatrixXd p;  // rows sum to 1, zero diagonal
  std::vector<NonConvergedRow> non_converged;
  std::vector<std::string> warnings;
};

// Per-row bandwidths found by binary search so each row's entropy perplexity
// 2^H matches the target within 1e-5 (at most 50 halvings). Rows that fail to
// converge are reported with the perplexity they reached, not treated as
// errors. Emits a warning when the target exceeds m/3.
ConditionalResult conditional_p(const DistanceMatrix& distance, double perplexity);

// p_ij = (p_i|j + p_j|i) / (2m), floored at 1e-12 off the diagonal for
// gradient stability; symmetric with zero diagonal and total mass 1.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& cond);

// KL(P || Q(coords)) where Q is the Student-t or Gaussian neighborhood
// distribution of the 2-D configuration. Exposed for gradient checks.
double kl_divergence(const Eigen::MatrixXd& joint_p, const Eigen::MatrixXd& coords, QKind kind);

// Analytic gradient of kl_divergence with respect to coords (m x 2).
Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& joint_p, const Eigen::MatrixXd& coords,
                            QKind kind);

struct KlSample {
  int iteration = 0;
  double kl = 0.0;  // measured against the un-exaggerated joint P
};

struct Embedding {
  Eigen::MatrixXd coords;  // m x 2, recentered every iteration
  double initial_kl = 0.0;
  double final_kl = 0.0;
  std::vector<KlSample> kl_trace;  // sampled every 50 iterations
  std::vector<NonConvergedRow> non_converged;
  std::vector<std::string> warnings;
};

// Full pipeline: conditional_p -> symmetrize -> gradient descent with
// momentum 0.5 (0.8 after iteration 250) and 12x early exaggeration for the
// first 250 iterations. Deterministic given params.seed.
Embedding run_embedding(const DistanceMatrix& distance, const EmbedParams& params);

}  // namespace pscore
