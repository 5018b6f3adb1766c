#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "oscroot/types.hpp"

namespace oscroot {

struct SnapshotPair {
  Eigen::MatrixXd x;  // n x M, one row per channel
  Eigen::MatrixXd y;  // one-step successors, same shape
  std::vector<ChannelLabel> channel_labels;
  double dt = 0.0;
};

// Least-squares Koopman estimate over the raw P/Q observables, plus the SVD
// factors of G needed for order reduction.
struct KoopmanOperator {
  Eigen::MatrixXd g;       // (1/M) X X^T, symmetric PSD
  Eigen::MatrixXd h;       // (1/M) X Y^T
  Eigen::MatrixXd m_k;     // transpose of G^+ H; equals A for linear data
  Eigen::MatrixXd u;       // left singular vectors of G
  Eigen::MatrixXd r_fac;   // right singular vectors of G
  Eigen::VectorXd singular_values;  // descending
  std::vector<ChannelLabel> channel_labels;
  double dt = 0.0;
};

struct KoopmanDecomposition {
  Eigen::VectorXcd mu;        // discrete eigenvalues, |mu| descending, pairs adjacent
  Eigen::MatrixXcd phi_hat;   // n x r right eigenvectors lifted to channel space
  Eigen::MatrixXcd xi_hat;    // r x n left eigenvectors (pseudoinverse of phi_hat)
  Eigen::MatrixXd m_tilde;    // r x r reduced operator, kept for debug dumps
  std::vector<ChannelLabel> channel_labels;
  double dt = 0.0;
  int r = 0;
};

struct ContinuousMode {
  std::complex<double> lambda;  // per-second
  double freq_hz = 0.0;
  double damping_ratio = 0.0;
};

SnapshotPair build_snapshots(const ChannelSet& cs);

KoopmanOperator estimate_operator(const SnapshotPair& sp);

// Elbow of the singular-value profile via sign changes of the discrete
// second derivative, floored at twice the dominant-mode count; an explicit
// override wins.
int select_truncation(const std::vector<double>& singular_values, int n_dominant_modes,
                      std::optional<int> override_r = {});

KoopmanDecomposition reduce_and_decompose(const KoopmanOperator& op, int r);

ContinuousMode to_continuous(std::complex<double> mu, double dt);

}  // namespace oscroot
