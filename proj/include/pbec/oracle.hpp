#ifndef PBEC_ORACLE_HPP
#define PBEC_ORACLE_HPP

#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "pbec/model.hpp"
#include "pbec/moments.hpp"
#include "pbec/types.hpp"

namespace pbec::oracle {

/// Probability vector on the (n, m) lattice, n in [0, n_max], m in [0, M].
struct DistributionGrid {
  int n_max = 0;
  int M = 0;
  std::vector<double> p;  // size (n_max+1)*(M+1), index n*(M+1)+m
  int index(int n, int m) const { return n * (M + 1) + m; }
  double at(int n, int m) const { return p[index(n, m)]; }
  /// probability mass on the truncation boundary n = n_max
  double tail_mass() const;
};

/// Sparse transition-rate operator of the incoherent (diagonal) master
/// equation: d p/dt = G p, columns sum to zero. Five jump channels:
///   loss        (n,m) -> (n-1,m)    rate kappa n
///   pump        (n,m) -> (n,m+1)    rate Gamma_up (M-m)
///   nonrad      (n,m) -> (n,m-1)    rate Gamma_down m
///   absorption  (n,m) -> (n-1,m+1)  rate B_abs n (M-m)
///   emission    (n,m) -> (n+1,m-1)  rate B_em (n+1) m   (zero out of n = n_max)
struct Generator {
  int n_max = 0;
  int M = 0;
  ModelParams params;
  Eigen::SparseMatrix<double> rates;  // (N x N), N = (n_max+1)*(M+1)
  int size() const { return (n_max + 1) * (M + 1); }
};

Generator build_generator(const ModelParams& p, int n_max, std::size_t state_cap = 500000);

/// Photon truncation estimate ceil(mean + 12 sqrt(variance)) from the moment
/// closure; callers double it until the steady-state tail mass is < 1e-10.
int suggest_n_max(const ModelParams& p);

/// Null vector of the generator, normalized: ||G p||_inf < 1e-12. Sparse LU
/// with one row replaced by normalization below 2e5 states, preconditioned
/// BiCGSTAB above.
DistributionGrid oracle_steady_state(const Generator& gen);

/// Convenience: build at suggest_n_max, solve, double n_max until tail < 1e-10.
std::pair<Generator, DistributionGrid> build_and_solve(const ModelParams& p,
                                                       std::size_t state_cap = 500000);

/// Moments of a distribution grid (exact sums).
moments::MomentState grid_moments(const DistributionGrid& g);

/// Quantum-regression g2: weight the steady state by n (direct) or by the
/// photon-lowering map a rho a^dag (normal), propagate under the generator by
/// uniformization, read out <n>, normalize by <n>_inf^2.
G2Curve oracle_g2(const Generator& gen, const DistributionGrid& p_inf,
                  const std::vector<double>& tau_grid, Ordering ordering = Ordering::normal);

enum class JumpChannel : std::uint8_t { loss = 0, pump, nonradiative, absorption, emission };

/// Stochastic sample path; entry 0 is the initial state at t = 0 (channel 255).
struct Trajectory {
  std::vector<double> times;
  std::vector<int> n;
  std::vector<int> m;
  std::vector<std::uint8_t> channel;
  double t_end = 0;
};

/// Exact stochastic unraveling (direct Gillespie). Fully determined by
/// (seed, params, initial).
Trajectory gillespie_simulate(const ModelParams& p, std::uint64_t seed, double t_end, int n0,
                              int m0);

/// Independent trajectories with per-trajectory streams seeded by
/// (master_seed, index), computed in parallel and merged by index.
std::vector<Trajectory> gillespie_ensemble(const ModelParams& p, std::uint64_t master_seed,
                                           int count, double t_end, int n0, int m0,
                                           int threads = 0);

/// Binned intensity-product estimator of <n(t+tau) n(t)>/<n>^2 with jackknife
/// standard errors over trajectories. The tau = 0 point uses exact in-window
/// time averages of n and n^2 (no binning bias); normal ordering subtracts the
/// tau = 0 self-term. Requested lags are snapped to multiples of bin_width.
G2Curve trajectory_g2(const std::vector<Trajectory>& trajs, const std::vector<double>& tau_grid,
                      double bin_width, double burn_in, Ordering ordering = Ordering::normal);

/// Time-averaged first/second photon moments over [burn_in, t_end], pooled.
struct EnsembleMoments {
  double mean_n = 0;
  double mean_n2 = 0;
  double se_mean_n = 0;  // jackknife
};
EnsembleMoments ensemble_photon_moments(const std::vector<Trajectory>& trajs, double burn_in);

/// Permutation-symmetry identity and cluster-closure residuals evaluated on a
/// distribution. The four-Pauli identity M(M-1)<s+ s- s~+ s~-> = <m^2> - <m>
/// holds exactly; the closure residuals measure truncation quality:
///   <n m^2> vs 2<m><nm> + <n><m^2> - 2<n><m>^2
///   <n^2 m> vs 2<n><nm> + <m><n^2> - 2<m><n>^2
struct TruncationReport {
  double pauli_identity_residual;  // relative
  double closure_nm2_rel;
  double closure_n2m_rel;
};
TruncationReport verify_truncation_identity(const DistributionGrid& g);

}  // namespace pbec::oracle

#endif
