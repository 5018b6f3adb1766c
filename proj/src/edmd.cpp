#include "oscroot/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "oscroot/errors.hpp"

namespace oscroot {

namespace {

constexpr double kRankCutoff = 1e-12;  // relative to the largest singular value

int curvature_sign(double v, double tol) {
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

Eigen::MatrixXcd pinv_complex(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kRankCutoff * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

SnapshotPair build_snapshots(const ChannelSet& cs) {
  cs.validate();
  const auto n = static_cast<Eigen::Index>(cs.channels.size());
  const auto m_total = static_cast<Eigen::Index>(cs.length());
  if (m_total < n + 1) {
    throw Error(ErrorKind::data_quality,
                "insufficient-data: " + std::to_string(m_total) + " samples cannot form " +
                    std::to_string(n) + "-channel snapshot pairs");
  }

  SnapshotPair sp;
  sp.dt = cs.dt;
  sp.x.resize(n, m_total - 1);
  sp.y.resize(n, m_total - 1);
  sp.channel_labels.reserve(cs.channels.size());
  for (Eigen::Index row = 0; row < n; ++row) {
    const auto& samples = cs.channels[static_cast<std::size_t>(row)].samples;
    for (Eigen::Index col = 0; col + 1 < m_total; ++col) {
      sp.x(row, col) = samples[static_cast<std::size_t>(col)];
      sp.y(row, col) = samples[static_cast<std::size_t>(col) + 1];
    }
    sp.channel_labels.push_back(cs.channels[static_cast<std::size_t>(row)].label);
  }
  return sp;
}

KoopmanOperator estimate_operator(const SnapshotPair& sp) {
  const Eigen::Index n = sp.x.rows();
  const Eigen::Index m = sp.x.cols();
  if (n < 1 || m < n || sp.y.rows() != n || sp.y.cols() != m) {
    throw Error(ErrorKind::data_quality, "insufficient-data: snapshot matrices are malformed");
  }

  KoopmanOperator op;
  op.dt = sp.dt;
  op.channel_labels = sp.channel_labels;
  const double scale = 1.0 / static_cast<double>(m);
  op.g = scale * (sp.x * sp.x.transpose());
  op.g = 0.5 * (op.g + op.g.transpose()).eval();  // kill round-off asymmetry
  op.h = scale * (sp.x * sp.y.transpose());

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  op.u = svd.matrixU();
  op.r_fac = svd.matrixV();
  op.singular_values = svd.singularValues();

  const double sigma1 = op.singular_values(0);
  if (!(sigma1 > 0.0)) {
    throw Error(ErrorKind::numerical, "degenerate-data: snapshot Gram matrix is identically zero");
  }
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (op.singular_values(i) > kRankCutoff * sigma1) inv(i) = 1.0 / op.singular_values(i);
  }
  const Eigen::MatrixXd k = op.r_fac * inv.asDiagonal() * op.u.transpose() * op.h;
  op.m_k = k.transpose();
  return op;
}

int select_truncation(const std::vector<double>& singular_values, int n_dominant_modes,
                      std::optional<int> override_r) {
  const auto n = static_cast<int>(singular_values.size());
  if (n < 3) {
    throw Error(ErrorKind::numerical,
                "degenerate-data: truncation selection needs at least 3 singular values");
  }
  if (n_dominant_modes < 1) {
    throw Error(ErrorKind::config, "configuration: dominant mode count must be >= 1");
  }
  if (override_r) {
    if (*override_r < 1 || *override_r > n) {
      throw Error(ErrorKind::config, "configuration: truncation override " +
                                         std::to_string(*override_r) + " outside [1, " +
                                         std::to_string(n) + "]");
    }
    return *override_r;
  }

  // Curvature sign of the singular-value profile at each interior index;
  // values at machine scale relative to sigma_1 count as flat.
  const double tol = 1e-12 * singular_values[0];
  std::vector<int> signs;
  signs.reserve(static_cast<std::size_t>(n) - 2);
  for (int k = 1; k + 1 < n; ++k) {
    const double d2 =
        singular_values[static_cast<std::size_t>(k) + 1] - 2.0 * singular_values[static_cast<std::size_t>(k)] +
        singular_values[static_cast<std::size_t>(k) - 1];
    signs.push_back(curvature_sign(d2, tol));
  }

  int r = 2 * n_dominant_modes;  // fallback when the profile never flips
  for (std::size_t j = 0; j + 1 < signs.size(); ++j) {
    if (signs[j] * signs[j + 1] < 0) {
      // Interior index j corresponds to sigma index j+1; keep everything
      // through the last point before the curvature flips.
      r = std::max(static_cast<int>(j) + 2, 2 * n_dominant_modes);
      break;
    }
  }
  return std::clamp(r, 2, n);
}

KoopmanDecomposition reduce_and_decompose(const KoopmanOperator& op, int r) {
  const Eigen::Index n = op.g.rows();
  if (r < 1 || r > n) {
    throw Error(ErrorKind::config,
                "configuration: truncation order " + std::to_string(r) + " outside [1, " +
                    std::to_string(n) + "]");
  }
  const double sigma1 = op.singular_values(0);
  if (!(sigma1 > 0.0) || op.singular_values(r - 1) < kRankCutoff * sigma1) {
    throw Error(ErrorKind::numerical,
                "ill-conditioned-truncation: sigma_" + std::to_string(r) +
                    " is at machine scale; choose a smaller truncation order");
  }

  const Eigen::MatrixXd u_r = op.u.leftCols(r);
  const Eigen::MatrixXd r_r = op.r_fac.leftCols(r);
  const Eigen::VectorXd inv_sigma = op.singular_values.head(r).cwiseInverse();
  const Eigen::MatrixXd m_tilde = u_r.transpose() * op.h * r_r * inv_sigma.asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> es(m_tilde);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, "numerical: eigensolver failed on the reduced operator");
  }
  const Eigen::VectorXcd mu_raw = es.eigenvalues();
  const Eigen::MatrixXcd phi_raw = es.eigenvectors();

  // Descending |mu|; conjugate partners stay adjacent with the
  // positive-imaginary member first.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(mu_raw(a)), mb = std::abs(mu_raw(b));
    if (ma != mb) return ma > mb;
    if (mu_raw(a).real() != mu_raw(b).real()) return mu_raw(a).real() > mu_raw(b).real();
    return mu_raw(a).imag() > mu_raw(b).imag();
  });

  KoopmanDecomposition dec;
  dec.dt = op.dt;
  dec.channel_labels = op.channel_labels;
  dec.r = r;
  dec.m_tilde = m_tilde;
  dec.mu.resize(r);
  Eigen::MatrixXcd phi_tilde(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    dec.mu(i) = mu_raw(order[static_cast<std::size_t>(i)]);
    phi_tilde.col(i) = phi_raw.col(order[static_cast<std::size_t>(i)]);
  }
  dec.phi_hat = u_r.cast<std::complex<double>>() * phi_tilde;
  dec.xi_hat = pinv_complex(dec.phi_hat);
  return dec;
}

ContinuousMode to_continuous(std::complex<double> mu, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::config, "configuration: dt must be positive");
  if (std::abs(mu) == 0.0) {
    throw Error(ErrorKind::numerical,
                "undefined-eigenvalue: discrete eigenvalue at the origin has no continuous image");
  }
  ContinuousMode cm;
  cm.lambda = std::log(mu) / dt;
  const double sigma = cm.lambda.real();
  const double omega = cm.lambda.imag();
  cm.freq_hz = std::fabs(omega) / (2.0 * std::numbers::pi);
  const double norm = std::hypot(sigma, omega);
  cm.damping_ratio = norm > 0.0 ? -sigma / norm : 0.0;  // unit eigenvalue: marginal
  return cm;
}

}  // namespace oscroot
