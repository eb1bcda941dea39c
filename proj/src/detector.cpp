#include "hapsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hapsim/errors.hpp"

namespace hapsim {

void DetectorConfig::validate() const {
  if (activity_threshold < 0.0 || activity_threshold > 1.0)
    throw ConfigError("activity_threshold must lie in [0, 1]");
  if (reliability_threshold < activity_threshold)
    throw ConfigError("reliability_threshold must be >= activity_threshold");
  if (reliability_threshold > 1.0)
    throw ConfigError("reliability_threshold must be <= 1");
  if (max_sic_rounds < 1) throw ConfigError("max_sic_rounds must be >= 1");
  if (inner_iterations < 1) throw ConfigError("inner_iterations must be >= 1");
  if (damping <= 0.0 || damping > 1.0)
    throw ConfigError("damping must lie in (0, 1]");
  if (angular_keep_ratio < 0.0 || angular_keep_ratio > 1.0)
    throw ConfigError("angular_keep_ratio must lie in [0, 1]");
  if (somp_plateau_tol <= 0.0 || somp_plateau_tol >= 1.0)
    throw ConfigError("somp_plateau_tol must lie in (0, 1)");
  if (convergence_tol <= 0.0) throw ConfigError("convergence_tol must be > 0");
}

namespace {

// Blocks sorted by the HAP id behind them. Every reduction that mixes
// columns of different blocks walks this order, so an anchor's results do
// not depend on how its cooperation set happened to order the blocks.
std::vector<int> sorted_block_order(const std::vector<int>& hap_ids) {
  std::vector<int> order(hap_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (hap_ids[a] != hap_ids[b]) return hap_ids[a] < hap_ids[b];
    return a < b;
  });
  return order;
}

double block_ordered_energy(const std::vector<Eigen::MatrixXcd>& mats,
                            const std::vector<int>& order, int n_r) {
  double total = 0.0;
  for (int blk : order) {
    for (const auto& mat : mats) {
      total += mat.middleCols(blk * n_r, n_r).squaredNorm();
    }
  }
  return total;
}

std::vector<Eigen::MatrixXcd> submatrix_cols(
    const std::vector<Eigen::MatrixXcd>& s, const std::vector<int>& cols) {
  std::vector<Eigen::MatrixXcd> out(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) {
    out[p].resize(s[p].rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out[p].col(j) = s[p].col(cols[j]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bernoulli-Gaussian AMP with EM hyperparameter learning.
//
// The anchor's antennas and subcarriers form M*P measurement vectors that
// share one activity probability lambda_k per device; the slab variance is
// learned per (device, HAP block) to absorb the heterogeneous path loss.
// Output variances are uniformized over measurements (scalar per column),
// the standard simplification for i.i.d. Gaussian dictionaries.
// ---------------------------------------------------------------------------
ModuleAResult amp_em(const std::vector<Eigen::MatrixXcd>& y,
                     const std::vector<Eigen::MatrixXcd>& s,
                     const std::vector<int>& block_hap_ids, int n_r,
                     const DetectorConfig& cfg) {
  const int n_p = static_cast<int>(y.size());
  const int t_p = static_cast<int>(y[0].rows());
  const int m_cols = static_cast<int>(y[0].cols());
  const int k = static_cast<int>(s[0].cols());
  const int n_blocks = static_cast<int>(block_hap_ids.size());
  const auto order = sorted_block_order(block_hap_ids);

  ModuleAResult result;
  result.lambda = Eigen::VectorXd::Zero(k);
  result.xhat.assign(n_p, Eigen::MatrixXcd::Zero(k, m_cols));
  if (k == 0) return result;

  const double total_energy = block_ordered_energy(y, order, n_r);
  const double mean_abs2 =
      total_energy / (static_cast<double>(t_p) * m_cols * n_p);
  if (!(mean_abs2 > 0.0) || !std::isfinite(mean_abs2)) return result;
  const double scale = std::sqrt(mean_abs2);

  std::vector<Eigen::MatrixXcd> yw(n_p);
  for (int p = 0; p < n_p; ++p) yw[p] = y[p] / scale;

  std::vector<Eigen::VectorXd> cn2(n_p), cn2inv(n_p);
  double cn2_sum = 0.0;
  for (int p = 0; p < n_p; ++p) {
    cn2[p] = s[p].colwise().squaredNorm().transpose().cwiseMax(1e-30);
    cn2inv[p] = cn2[p].cwiseInverse();
    cn2_sum += cn2[p].sum();
  }
  const double cn2_sum_avg = cn2_sum / n_p;

  // EM initialisation: 20 dB working-SNR guess for the noise, a loose
  // activity prior, slab variances from per-block observation energy.
  constexpr double kSigmaFloor = 1e-13;
  constexpr double kLambdaInit = 0.2;
  double sigma2 = std::max(1.0 / 101.0, kSigmaFloor);
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(k, kLambdaInit);
  Eigen::MatrixXd phi(k, n_blocks);
  for (int blk = 0; blk < n_blocks; ++blk) {
    double be = 0.0;
    for (int p = 0; p < n_p; ++p) {
      be += yw[p].middleCols(blk * n_r, n_r).squaredNorm();
    }
    be /= static_cast<double>(t_p) * n_r * n_p;
    const double init =
        t_p * std::max(be - sigma2, 1e-3 * be + 1e-12) /
        (kLambdaInit * cn2_sum_avg);
    phi.col(blk).setConstant(std::max(init, 1e-12));
  }

  std::vector<Eigen::MatrixXcd> xhat(n_p, Eigen::MatrixXcd::Zero(k, m_cols));
  std::vector<Eigen::MatrixXd> vx(n_p);
  for (int p = 0; p < n_p; ++p) {
    vx[p].resize(k, m_cols);
    for (int m = 0; m < m_cols; ++m) {
      vx[p].col(m) = kLambdaInit * phi.col(m / n_r);
    }
  }
  std::vector<Eigen::MatrixXcd> g_prev(n_p,
                                       Eigen::MatrixXcd::Zero(t_p, m_cols));

  Eigen::MatrixXcd pmat(t_p, m_cols), dmat(t_p, m_cols), corr(k, m_cols);
  Eigen::VectorXd lambda_logit(k);

  const double beta = cfg.damping;
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= cfg.inner_iterations; ++iter) {
    for (int i = 0; i < k; ++i) {
      lambda_logit(i) = std::log(lambda(i) / (1.0 - lambda(i)));
    }

    Eigen::MatrixXd lam_acc = Eigen::MatrixXd::Zero(k, n_blocks);
    Eigen::MatrixXd phi_num = Eigen::MatrixXd::Zero(k, n_blocks);
    Eigen::VectorXd sig_acc = Eigen::VectorXd::Zero(n_blocks);
    Eigen::VectorXd diff_acc = Eigen::VectorXd::Zero(n_blocks);
    Eigen::VectorXd norm_acc = Eigen::VectorXd::Zero(n_blocks);

    for (int p = 0; p < n_p; ++p) {
      const Eigen::VectorXd vp = (vx[p].transpose() * cn2[p]) / t_p;

      pmat.noalias() = s[p] * xhat[p];
      pmat.noalias() -= g_prev[p] * vp.asDiagonal();  // Onsager correction
      dmat = yw[p] - pmat;
      corr.noalias() = s[p].adjoint() * dmat;

      for (int m = 0; m < m_cols; ++m) {
        const int blk = m / n_r;
        const double tau = sigma2 + vp(m);
        double dsum = 0.0, nsum = 0.0;
        for (int i = 0; i < k; ++i) {
          const double sig = tau * cn2inv[p](i);
          const std::complex<double> r_val =
              xhat[p](i, m) + corr(i, m) * cn2inv[p](i);
          const double pv = phi(i, blk);
          const double denom = pv + sig;
          const double ratio = pv / denom;
          const double r2 = std::norm(r_val);
          const double t_logit = std::log(sig / denom) +
                                 r2 * pv / (sig * denom) + lambda_logit(i);
          double pi;
          if (t_logit > 40.0) {
            pi = 1.0;
          } else if (t_logit < -40.0) {
            pi = 0.0;
          } else {
            pi = 1.0 / (1.0 + std::exp(-t_logit));
          }
          const std::complex<double> mhat = ratio * r_val;
          const double q = ratio * sig;
          const double second = q + std::norm(mhat);
          const std::complex<double> x_post = pi * mhat;
          const double v_post = pi * second - std::norm(x_post);

          lam_acc(i, blk) += pi;
          phi_num(i, blk) += pi * second;

          const std::complex<double> x_old = xhat[p](i, m);
          const std::complex<double> x_new =
              beta * x_post + (1.0 - beta) * x_old;
          const double v_new = beta * v_post + (1.0 - beta) * vx[p](i, m);
          dsum += std::norm(x_new - x_old);
          nsum += std::norm(x_new);
          xhat[p](i, m) = x_new;
          vx[p](i, m) = v_new;
        }
        diff_acc(blk) += dsum;
        norm_acc(blk) += nsum;

        const double a = sigma2 / tau;
        sig_acc(blk) += dmat.col(m).squaredNorm() * a * a + t_p * vp(m) * a;
        g_prev[p].col(m) = dmat.col(m) / tau;
      }
    }

    // EM updates, reduced over blocks in canonical order
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int blk : order) acc += lam_acc(i, blk);
      lambda(i) = std::clamp(acc / (static_cast<double>(m_cols) * n_p), 1e-8,
                             1.0 - 1e-8);
    }
    for (int blk = 0; blk < n_blocks; ++blk) {
      for (int i = 0; i < k; ++i) {
        if (lam_acc(i, blk) > 1e-12) {
          phi(i, blk) = std::max(phi_num(i, blk) / lam_acc(i, blk), 1e-300);
        }
      }
    }
    double sig_total = 0.0;
    for (int blk : order) sig_total += sig_acc(blk);
    sigma2 = std::max(sig_total / (static_cast<double>(t_p) * m_cols * n_p),
                      kSigmaFloor);

    double diff_total = 0.0, norm_total = 0.0;
    for (int blk : order) {
      diff_total += diff_acc(blk);
      norm_total += norm_acc(blk);
    }
    if (diff_total <=
        cfg.convergence_tol * cfg.convergence_tol * std::max(norm_total, 1e-300)) {
      converged = true;
      break;
    }
  }

  result.lambda = lambda;
  for (int p = 0; p < n_p; ++p) result.xhat[p] = xhat[p] * scale;
  result.converged = converged;
  result.iterations = std::min(iter, cfg.inner_iterations);
  return result;
}

// ---------------------------------------------------------------------------
// Simultaneous OMP over all measurement vectors, with joint least-squares
// re-projection after each selection.
// ---------------------------------------------------------------------------
ModuleAResult somp(const std::vector<Eigen::MatrixXcd>& y,
                   const std::vector<Eigen::MatrixXcd>& s,
                   const std::vector<int>& block_hap_ids, int n_r,
                   const DetectorConfig& cfg) {
  const int n_p = static_cast<int>(y.size());
  const int t_p = static_cast<int>(y[0].rows());
  const int m_cols = static_cast<int>(y[0].cols());
  const int k = static_cast<int>(s[0].cols());
  const auto order = sorted_block_order(block_hap_ids);

  ModuleAResult result;
  result.lambda = Eigen::VectorXd::Zero(k);
  result.xhat.assign(n_p, Eigen::MatrixXcd::Zero(k, m_cols));
  result.converged = true;
  if (k == 0) return result;

  std::vector<Eigen::VectorXd> cn2inv(n_p);
  for (int p = 0; p < n_p; ++p) {
    cn2inv[p] = s[p]
                    .colwise()
                    .squaredNorm()
                    .transpose()
                    .cwiseMax(1e-30)
                    .cwiseInverse();
  }

  const double e_init = block_ordered_energy(y, order, n_r);
  if (!(e_init > 0.0)) return result;

  std::vector<Eigen::MatrixXcd> residual = y;
  std::vector<Eigen::MatrixXcd> solution(
      n_p);  // rows follow `support` order
  std::vector<int> support;
  std::vector<bool> in_support(k, false);
  const int max_support = std::min(k, t_p);
  double e_prev = e_init;

  while (static_cast<int>(support.size()) < max_support) {
    // aggregate residual correlation per device, canonical block order
    Eigen::VectorXd metric = Eigen::VectorXd::Zero(k);
    for (int p = 0; p < n_p; ++p) {
      const Eigen::MatrixXcd corr = s[p].adjoint() * residual[p];
      for (int blk : order) {
        metric += corr.middleCols(blk * n_r, n_r)
                      .rowwise()
                      .squaredNorm()
                      .cwiseProduct(cn2inv[p]);
      }
    }
    int pick = -1;
    double best = 0.0;
    for (int i = 0; i < k; ++i) {
      if (in_support[i]) continue;
      if (metric(i) > best) {
        best = metric(i);
        pick = i;
      }
    }
    if (pick < 0) break;

    std::vector<int> trial_support = support;
    trial_support.push_back(pick);

    std::vector<Eigen::MatrixXcd> trial_solution(n_p);
    std::vector<Eigen::MatrixXcd> trial_residual(n_p);
    for (int p = 0; p < n_p; ++p) {
      Eigen::MatrixXcd a(t_p, trial_support.size());
      for (std::size_t j = 0; j < trial_support.size(); ++j) {
        a.col(j) = s[p].col(trial_support[j]);
      }
      trial_solution[p] = a.colPivHouseholderQr().solve(y[p]);
      trial_residual[p] = y[p] - a * trial_solution[p];
    }
    const double e_new = block_ordered_energy(trial_residual, order, n_r);
    if (e_prev - e_new < cfg.somp_plateau_tol * e_prev) break;

    support = std::move(trial_support);
    in_support[pick] = true;
    solution = std::move(trial_solution);
    residual = std::move(trial_residual);
    e_prev = e_new;
    if (e_new <= 1e-20 * e_init) break;  // residual exhausted
  }

  for (std::size_t j = 0; j < support.size(); ++j) {
    result.lambda(support[j]) = 1.0;
    for (int p = 0; p < n_p; ++p) {
      result.xhat[p].row(support[j]) = solution[p].row(j);
    }
  }
  return result;
}

}  // namespace

ModuleAResult module_a_spatial(const std::vector<Eigen::MatrixXcd>& y,
                               const std::vector<Eigen::MatrixXcd>& s,
                               const std::vector<int>& block_hap_ids,
                               int n_antennas, const DetectorConfig& config) {
  if (y.empty() || s.size() != y.size())
    throw DimensionError("observations and pilots disagree on p_pilot");
  for (std::size_t p = 0; p < y.size(); ++p) {
    if (y[p].rows() != s[p].rows())
      throw DimensionError("observation and pilot row counts differ");
    if (y[p].cols() !=
        static_cast<Eigen::Index>(block_hap_ids.size()) * n_antennas)
      throw DimensionError("observation columns do not match block layout");
  }
  switch (config.algorithm) {
    case Algorithm::kAmpEm:
      return amp_em(y, s, block_hap_ids, n_antennas, config);
    case Algorithm::kSomp:
      return somp(y, s, block_hap_ids, n_antennas, config);
    case Algorithm::kOracleLs:
      throw ConfigError(
          "oracle-ls needs ground truth and is resolved by the caller");
  }
  throw ConfigError("unknown detector algorithm");
}

std::vector<Eigen::MatrixXcd> oracle_ls(const std::vector<Eigen::MatrixXcd>& y,
                                        const std::vector<Eigen::MatrixXcd>& s,
                                        const std::vector<int>& active_cols,
                                        bool* rank_deficient) {
  if (rank_deficient) *rank_deficient = false;
  std::vector<Eigen::MatrixXcd> estimates(y.size());
  const int n_active = static_cast<int>(active_cols.size());
  for (std::size_t p = 0; p < y.size(); ++p) {
    const int k = static_cast<int>(s[p].cols());
    estimates[p] = Eigen::MatrixXcd::Zero(k, y[p].cols());
    if (n_active == 0) continue;
    if (static_cast<int>(y[p].rows()) < n_active)
      throw DimensionError("oracle LS needs t_p >= |active set|");

    Eigen::MatrixXcd a(y[p].rows(), n_active);
    for (int j = 0; j < n_active; ++j) a.col(j) = s[p].col(active_cols[j]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd x;
    if (qr.rank() < n_active) {
      // degenerate pilot submatrix: fall back to a ridge solve
      if (rank_deficient) *rank_deficient = true;
      Eigen::MatrixXcd gram = a.adjoint() * a;
      const double ridge = 1e-12 * gram.real().trace() / n_active + 1e-300;
      gram.diagonal().array() += ridge;
      x = gram.ldlt().solve(a.adjoint() * y[p]);
    } else {
      x = qr.solve(y[p]);
    }
    for (int j = 0; j < n_active; ++j) {
      estimates[p].row(active_cols[j]) = x.row(j);
    }
  }
  return estimates;
}

void module_b_angular_refine(std::vector<Eigen::MatrixXcd>& xhat,
                             const std::vector<int>& rows, int n_antennas,
                             double keep_ratio) {
  if (keep_ratio <= 0.0) return;  // nothing can fall below the threshold
  const Eigen::MatrixXcd& f = dft_matrix(n_antennas);
  for (auto& block : xhat) {
    const int n_blocks = static_cast<int>(block.cols()) / n_antennas;
    for (int row : rows) {
      for (int blk = 0; blk < n_blocks; ++blk) {
        Eigen::RowVectorXcd seg =
            block.row(row).segment(blk * n_antennas, n_antennas);
        Eigen::RowVectorXcd ang = seg * f;
        const double threshold = keep_ratio * ang.cwiseAbs().maxCoeff();
        for (int q = 0; q < n_antennas; ++q) {
          if (std::abs(ang(q)) < threshold) ang(q) = 0.0;
        }
        block.row(row).segment(blk * n_antennas, n_antennas) =
            ang * f.adjoint();
      }
    }
  }
}

void module_c_sic(DetectionState& state,
                  const std::vector<Eigen::MatrixXcd>& s_cand,
                  const std::vector<int>& reliable,
                  const std::vector<Eigen::MatrixXcd>& reliable_rows) {
  if (reliable.empty()) return;
  for (int idx : reliable) {
    if (!std::binary_search(state.remaining.begin(), state.remaining.end(),
                            idx)) {
      throw DimensionError("reliable device is not in the remaining mask");
    }
  }
  for (std::size_t p = 0; p < state.residual.size(); ++p) {
    Eigen::MatrixXcd a(s_cand[p].rows(), reliable.size());
    for (std::size_t j = 0; j < reliable.size(); ++j) {
      a.col(j) = s_cand[p].col(reliable[j]);
    }
    state.residual[p].noalias() -= a * reliable_rows[p];
    for (std::size_t j = 0; j < reliable.size(); ++j) {
      state.xhat[p].row(reliable[j]) = reliable_rows[p].row(j);
    }
  }
  std::vector<int> still;
  still.reserve(state.remaining.size() - reliable.size());
  std::size_t r = 0;
  for (int idx : state.remaining) {
    if (r < reliable.size() && reliable[r] == idx) {
      ++r;
      continue;
    }
    still.push_back(idx);
  }
  state.remaining = std::move(still);
  state.detected.insert(state.detected.end(), reliable.begin(),
                        reliable.end());
  std::sort(state.detected.begin(), state.detected.end());
}

AnchorDetection run_sic_anchor(const std::vector<Eigen::MatrixXcd>& y_anchor,
                               const PilotBook& pilots,
                               const std::vector<int>& candidates,
                               const CooperationSet& coop, int n_antennas,
                               const DetectorConfig& config) {
  config.validate();
  const int n_p = static_cast<int>(pilots.s.size());
  const int n_cand = static_cast<int>(candidates.size());
  const int m_cols = static_cast<int>(coop.members.size()) * n_antennas;

  AnchorDetection out;
  out.anchor = coop.anchor;
  out.candidates = candidates;
  out.block_hap_ids = coop.members;
  out.lambda = Eigen::VectorXd::Zero(n_cand);
  out.verdict.assign(n_cand, false);
  out.xhat.assign(n_p, Eigen::MatrixXcd::Zero(n_cand, m_cols));
  if (n_cand == 0) return out;

  auto s_cand = submatrix_cols(pilots.s, candidates);
  const auto order = sorted_block_order(coop.members);

  if (!config.enable_sic) {
    // single spatial pass: this is the plain joint detection baseline
    auto pass = module_a_spatial(y_anchor, s_cand, coop.members, n_antennas,
                                 config);
    out.lambda = pass.lambda;
    out.converged = pass.converged;
    out.rounds_used = 1;
    std::vector<int> detected;
    for (int i = 0; i < n_cand; ++i) {
      if (pass.lambda(i) >= config.activity_threshold) detected.push_back(i);
    }
    if (config.enable_angular_refine) {
      module_b_angular_refine(pass.xhat, detected, n_antennas,
                              config.angular_keep_ratio);
    }
    for (int i : detected) {
      out.verdict[i] = true;
      for (int p = 0; p < n_p; ++p) out.xhat[p].row(i) = pass.xhat[p].row(i);
    }
    return out;
  }

  DetectionState state;
  state.residual = y_anchor;
  state.remaining.resize(n_cand);
  std::iota(state.remaining.begin(), state.remaining.end(), 0);
  state.xhat.assign(n_p, Eigen::MatrixXcd::Zero(n_cand, m_cols));

  Eigen::VectorXd last_lambda = Eigen::VectorXd::Zero(n_cand);
  std::vector<int> last_remaining;
  ModuleAResult last_pass;
  bool hit_round_limit = false;
  int round = 0;

  while (round < config.max_sic_rounds && !state.remaining.empty()) {
    ++round;
    auto s_rem = submatrix_cols(s_cand, state.remaining);
    last_pass = module_a_spatial(state.residual, s_rem, coop.members,
                                 n_antennas, config);
    last_remaining = state.remaining;
    if (!last_pass.converged) out.converged = false;
    for (std::size_t j = 0; j < state.remaining.size(); ++j) {
      last_lambda(state.remaining[j]) = last_pass.lambda(j);
    }

    std::vector<int> reliable_local;
    for (std::size_t j = 0; j < state.remaining.size(); ++j) {
      if (last_pass.lambda(j) >= config.reliability_threshold) {
        reliable_local.push_back(static_cast<int>(j));
      }
    }
    if (reliable_local.empty()) break;
    if (round == config.max_sic_rounds &&
        reliable_local.size() < state.remaining.size()) {
      hit_round_limit = true;
    }

    std::vector<int> local_rows(reliable_local.begin(), reliable_local.end());
    if (config.enable_angular_refine) {
      module_b_angular_refine(last_pass.xhat, local_rows, n_antennas,
                              config.angular_keep_ratio);
    }
    std::vector<Eigen::MatrixXcd> rows(n_p);
    std::vector<int> reliable_cand;
    reliable_cand.reserve(reliable_local.size());
    for (int j : reliable_local) reliable_cand.push_back(state.remaining[j]);
    for (int p = 0; p < n_p; ++p) {
      rows[p].resize(reliable_local.size(), m_cols);
      for (std::size_t j = 0; j < reliable_local.size(); ++j) {
        rows[p].row(j) = last_pass.xhat[p].row(reliable_local[j]);
      }
    }
    module_c_sic(state, s_cand, reliable_cand, rows);
    state.rounds.push_back(
        {round, reliable_cand,
         block_ordered_energy(state.residual, order, n_antennas)});
  }
  if (hit_round_limit) out.converged = false;

  // final verdict: everything cancelled plus remaining devices whose last
  // activity metric clears the detection threshold
  std::vector<int> extra_local;  // indices into last_remaining
  for (std::size_t j = 0; j < last_remaining.size(); ++j) {
    const int cand = last_remaining[j];
    const bool still_remaining =
        std::binary_search(state.remaining.begin(), state.remaining.end(),
                           cand);
    if (still_remaining &&
        last_lambda(cand) >= config.activity_threshold) {
      extra_local.push_back(static_cast<int>(j));
    }
  }
  if (!extra_local.empty() && config.enable_angular_refine) {
    module_b_angular_refine(last_pass.xhat, extra_local, n_antennas,
                            config.angular_keep_ratio);
  }
  for (int p = 0; p < n_p; ++p) out.xhat[p] = state.xhat[p];
  for (int cand : state.detected) out.verdict[cand] = true;
  for (int j : extra_local) {
    const int cand = last_remaining[j];
    out.verdict[cand] = true;
    for (int p = 0; p < n_p; ++p) {
      out.xhat[p].row(cand) = last_pass.xhat[p].row(j);
    }
  }
  out.lambda = last_lambda;
  out.rounds = state.rounds;
  out.rounds_used = round;
  return out;
}

std::vector<AnchorDetection> run_sic_detector(
    const ReceivedFrame& frame, const PilotBook& pilots,
    const std::vector<CooperationSet>& anchors, int n_antennas,
    const DetectorConfig& config) {
  const int n_p = frame.n_subcarriers();
  std::vector<int> all_devices(
      pilots.s.empty() ? 0 : static_cast<int>(pilots.s[0].cols()));
  std::iota(all_devices.begin(), all_devices.end(), 0);

  std::vector<AnchorDetection> results;
  results.reserve(anchors.size());
  for (const auto& coop : anchors) {
    std::vector<Eigen::MatrixXcd> y(n_p);
    for (int p = 0; p < n_p; ++p) y[p] = anchor_observation(frame, coop, p);
    results.push_back(
        run_sic_anchor(y, pilots, all_devices, coop, n_antennas, config));
  }
  return results;
}

std::vector<AnchorDetection> run_cellular_baseline(
    const ReceivedFrame& frame, const PilotBook& pilots,
    const NetworkTopology& topology, const DetectorConfig& config) {
  const int n_p = frame.n_subcarriers();
  std::vector<std::vector<int>> cell_devices(topology.n_haps());
  for (int d = 0; d < topology.n_devices(); ++d) {
    cell_devices[topology.cell_assignment[d]].push_back(d);
  }

  std::vector<AnchorDetection> results;
  results.reserve(topology.n_haps());
  for (const auto& hap : topology.haps) {
    CooperationSet own{hap.id, {hap.id}};
    std::vector<Eigen::MatrixXcd> y(n_p);
    for (int p = 0; p < n_p; ++p) y[p] = anchor_observation(frame, own, p);
    results.push_back(run_sic_anchor(y, pilots, cell_devices[hap.id], own,
                                     hap.n_antennas, config));
  }
  return results;
}

NetworkDetection aggregate_network_verdict(
    const std::vector<AnchorDetection>& anchors,
    const NetworkTopology& topology, int p_pilot, int n_antennas) {
  if (anchors.empty())
    throw DimensionError("aggregation needs at least one anchor result");

  const int k = topology.n_devices();
  const int b = topology.n_haps();
  NetworkDetection net;
  net.verdict.assign(k, false);
  net.hhat.assign(p_pilot, std::vector<Eigen::MatrixXcd>(
                               b, Eigen::MatrixXcd::Zero(k, n_antennas)));
  for (const auto& anchor : anchors) {
    net.max_rounds = std::max(net.max_rounds, anchor.rounds_used);
    net.converged = net.converged && anchor.converged;
  }

  // per-anchor candidate lookup
  std::vector<std::vector<int>> cand_index(anchors.size(),
                                           std::vector<int>(k, -1));
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (std::size_t j = 0; j < anchors[a].candidates.size(); ++j) {
      cand_index[a][anchors[a].candidates[j]] = static_cast<int>(j);
    }
  }

  for (int d = 0; d < k; ++d) {
    int best_anchor = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      if (cand_index[a][d] < 0) continue;
      const double dist = horizontal_distance(
          topology.device_positions[d], topology.haps[anchors[a].anchor]);
      if (dist < best_dist ||
          (dist == best_dist && best_anchor >= 0 &&
           anchors[a].anchor < anchors[best_anchor].anchor)) {
        best_dist = dist;
        best_anchor = static_cast<int>(a);
      }
    }
    if (best_anchor < 0) continue;

    const auto& res = anchors[best_anchor];
    const int j = cand_index[best_anchor][d];
    net.verdict[d] = res.verdict[j];
    if (!res.verdict[j]) continue;
    for (int p = 0; p < p_pilot; ++p) {
      for (std::size_t blk = 0; blk < res.block_hap_ids.size(); ++blk) {
        net.hhat[p][res.block_hap_ids[blk]].row(d) =
            res.xhat[p].row(j).segment(static_cast<int>(blk) * n_antennas,
                                       n_antennas);
      }
    }
  }
  return net;
}

}  // namespace hapsim
