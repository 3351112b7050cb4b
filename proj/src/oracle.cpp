#include "pbec/oracle.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "pbec/errors.hpp"
#include "pbec/meanfield.hpp"

namespace pbec::oracle {

double DistributionGrid::tail_mass() const {
  double s = 0;
  for (int m = 0; m <= M; ++m) s += at(n_max, m);
  return s;
}

Generator build_generator(const ModelParams& p, int n_max, std::size_t state_cap) {
  if (n_max < 1) throw ValidationError("n_max", "must be >= 1");
  int Mi = (int)std::llround(p.M);
  if (Mi < 1 || std::abs(p.M - Mi) > 1e-9)
    throw ValidationError("M", "oracle requires integer molecule count");
  std::size_t N = (std::size_t)(n_max + 1) * (Mi + 1);
  if (N > state_cap)
    throw ValidationError("state_cap", "state count " + std::to_string(N) + " exceeds cap " +
                                           std::to_string(state_cap));

  Generator gen;
  gen.n_max = n_max;
  gen.M = Mi;
  gen.params = p;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(6 * N);
  std::vector<double> diag(N, 0.0);
  auto idx = [&](int n, int m) { return n * (Mi + 1) + m; };
  auto add = [&](int from, int to, double rate) {
    if (rate <= 0) return;
    trip.emplace_back(to, from, rate);
    diag[from] -= rate;
  };
  for (int n = 0; n <= n_max; ++n) {
    for (int m = 0; m <= Mi; ++m) {
      int s = idx(n, m);
      if (n > 0) add(s, idx(n - 1, m), p.kappa * n);
      if (m < Mi) add(s, idx(n, m + 1), p.gamma_up * (Mi - m));
      if (m > 0) add(s, idx(n, m - 1), p.gamma_down * m);
      if (n > 0 && m < Mi) add(s, idx(n - 1, m + 1), p.B_abs * n * (Mi - m));
      // reflecting truncation: emission out of n = n_max is dropped
      if (n < n_max && m > 0) add(s, idx(n + 1, m - 1), p.B_em * (n + 1.0) * m);
    }
  }
  for (std::size_t s = 0; s < N; ++s)
    if (diag[s] != 0) trip.emplace_back((int)s, (int)s, diag[s]);
  gen.rates.resize((int)N, (int)N);
  gen.rates.setFromTriplets(trip.begin(), trip.end());
  gen.rates.makeCompressed();
  return gen;
}

int suggest_n_max(const ModelParams& p) {
  double mean, var;
  try {
    auto sol = moments::moment_steady_state(p);
    mean = sol.moments.n;
    var = std::max(sol.moments.n2 - mean * mean, mean);
  } catch (const std::exception&) {
    auto mf = meanfield::steady_state(p);
    mean = mf.n;
    var = 2 * mean * mean + mean;  // thermal-scale guess
  }
  return std::max(8, (int)std::ceil(mean + 12.0 * std::sqrt(var)));
}

namespace {

Eigen::VectorXd solve_with_normalization(const Generator& gen, int norm_row) {
  const int N = gen.size();
  // A = G with row norm_row replaced by ones; b = e_norm_row
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(gen.rates.nonZeros() + N);
  for (int k = 0; k < gen.rates.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(gen.rates, k); it; ++it)
      if (it.row() != norm_row) trip.emplace_back((int)it.row(), (int)it.col(), it.value());
  for (int j = 0; j < N; ++j) trip.emplace_back(norm_row, j, 1.0);
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  b[norm_row] = 1.0;

  Eigen::VectorXd p;
  if (N < 200000) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw ConvergenceError("oracle steady state: LU failed");
    p = lu.solve(b);
    for (int it = 0; it < 3; ++it) {
      Eigen::VectorXd r = b - A * p;
      p += lu.solve(r);
    }
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
    solver.setTolerance(1e-14);
    solver.setMaxIterations(20000);
    solver.compute(A);
    p = solver.solve(b);
    if (solver.info() != Eigen::Success)
      throw ConvergenceError("oracle steady state: BiCGSTAB did not converge");
  }
  return p;
}

}  // namespace

DistributionGrid oracle_steady_state(const Generator& gen) {
  const int N = gen.size();
  // normalization row at the modal state estimate
  int norm_row = 0;
  {
    ModelParams p = gen.params;
    try {
      auto mf = meanfield::steady_state(p);
      int n0 = std::clamp((int)std::llround(mf.n), 0, gen.n_max);
      int m0 = std::clamp((int)std::llround(mf.m_up), 0, gen.M);
      norm_row = n0 * (gen.M + 1) + m0;
    } catch (const std::exception&) {
      norm_row = 0;
    }
  }
  Eigen::VectorXd p = solve_with_normalization(gen, norm_row);

  double neg = 0, sum = 0;
  for (int i = 0; i < N; ++i) {
    neg = std::min(neg, p[i]);
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > 1e-8) throw ConvergenceError("oracle steady state: normalization lost");
  if (neg < -1e-10) throw ConvergenceError("oracle steady state: negative probability");
  for (int i = 0; i < N; ++i) p[i] = std::max(p[i], 0.0);
  p /= p.sum();

  double resid = (gen.rates * p).lpNorm<Eigen::Infinity>();
  if (resid > 1e-12)
    throw ConvergenceError("oracle steady state: residual " + std::to_string(resid) + " > 1e-12");

  DistributionGrid g;
  g.n_max = gen.n_max;
  g.M = gen.M;
  g.p.assign(p.data(), p.data() + N);
  return g;
}

std::pair<Generator, DistributionGrid> build_and_solve(const ModelParams& p,
                                                       std::size_t state_cap) {
  int n_max = suggest_n_max(p);
  for (;;) {
    Generator gen = build_generator(p, n_max, state_cap);
    DistributionGrid grid = oracle_steady_state(gen);
    if (grid.tail_mass() < 1e-10) return {std::move(gen), std::move(grid)};
    n_max *= 2;
  }
}

moments::MomentState grid_moments(const DistributionGrid& g) {
  moments::MomentState s{};
  for (int n = 0; n <= g.n_max; ++n) {
    for (int m = 0; m <= g.M; ++m) {
      double w = g.at(n, m);
      s.n += w * n;
      s.m_up += w * m;
      s.n2 += w * (double)n * n;
      s.nm += w * (double)n * m;
      s.m2 += w * (double)m * m;
    }
  }
  return s;
}

namespace {

/// w <- exp(G dt) w by uniformization with P = I + G/Lambda; Poisson weights in
/// log space, explicitly normalized, right-truncated with tail < 1e-13.
void propagate_uniformized(const Eigen::SparseMatrix<double>& G, double Lambda, double dt,
                           Eigen::VectorXd& w) {
  double s = Lambda * dt;
  if (s <= 0) return;
  int K = (int)std::ceil(s + 12.0 * std::sqrt(s) + 30.0);
  std::vector<double> lw((std::size_t)K + 1);
  for (int k = 0; k <= K; ++k) lw[k] = k * std::log(s) - std::lgamma(k + 1.0) - s;
  double total = 0;
  for (double v : lw) total += std::exp(v);
  if (total < 1.0 - 1e-13)
    throw ConvergenceError("uniformization: Poisson weight truncation too aggressive");

  Eigen::VectorXd v = w;
  Eigen::VectorXd acc = std::exp(lw[0]) * v;
  for (int k = 1; k <= K; ++k) {
    v += (G * v) / Lambda;
    acc.noalias() += std::exp(lw[k]) * v;
  }
  w = acc / total;
}

double max_exit_rate(const Eigen::SparseMatrix<double>& G) {
  double lam = 0;
  for (int k = 0; k < G.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(G, k); it; ++it)
      if (it.row() == it.col()) lam = std::max(lam, -it.value());
  return lam;
}

}  // namespace

G2Curve oracle_g2(const Generator& gen, const DistributionGrid& p_inf,
                  const std::vector<double>& tau_grid, Ordering ordering) {
  if (tau_grid.empty() || tau_grid.front() != 0.0)
    throw ValidationError("tau_grid", "must start at 0");
  const int N = gen.size();
  if ((int)p_inf.p.size() != N) throw ValidationError("p_inf", "grid size mismatch");

  Eigen::VectorXd nvec(N);
  double nbar = 0;
  for (int n = 0; n <= gen.n_max; ++n)
    for (int m = 0; m <= gen.M; ++m) {
      nvec[p_inf.index(n, m)] = n;
      nbar += p_inf.at(n, m) * n;
    }
  if (!(nbar > 0)) throw ValidationError("p_inf", "zero mean photon number");

  Eigen::VectorXd w(N);
  if (ordering == Ordering::direct) {
    for (int i = 0; i < N; ++i) w[i] = p_inf.p[i] * nvec[i];
  } else {
    // a rho a^dag: weight (n+1) p(n+1, m) lands on (n, m)
    w.setZero();
    for (int n = 0; n < gen.n_max; ++n)
      for (int m = 0; m <= gen.M; ++m)
        w[p_inf.index(n, m)] = (n + 1.0) * p_inf.at(n + 1, m);
  }

  const double Lambda = 1.02 * max_exit_rate(gen.rates) + 1e-12;
  G2Curve out;
  out.ordering = ordering;
  out.tau = tau_grid;
  out.g2.reserve(tau_grid.size());
  out.g2.push_back(nvec.dot(w) / (nbar * nbar));
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    double dt = tau_grid[i] - tau_grid[i - 1];
    if (!(dt > 0)) throw ValidationError("tau_grid", "must be increasing");
    propagate_uniformized(gen.rates, Lambda, dt, w);
    out.g2.push_back(nvec.dot(w) / (nbar * nbar));
  }
  return out;
}

// ---------------------------------------------------------------------------
// stochastic unraveling

namespace {

inline double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa in [0, 1); implementation-independent
  return (double)(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Trajectory gillespie_simulate(const ModelParams& p, std::uint64_t seed, double t_end, int n0,
                              int m0) {
  if (!(t_end > 0)) throw ValidationError("t_end", "must be > 0");
  int Mi = (int)std::llround(p.M);
  if (n0 < 0 || m0 < 0 || m0 > Mi) throw ValidationError("initial", "outside lattice");

  std::seed_seq sseq{(std::uint32_t)(seed & 0xffffffffu), (std::uint32_t)(seed >> 32),
                     0x9e3779b9u};
  std::mt19937_64 rng(sseq);

  Trajectory tr;
  tr.t_end = t_end;
  tr.times.push_back(0.0);
  tr.n.push_back(n0);
  tr.m.push_back(m0);
  tr.channel.push_back(255);

  double t = 0;
  int n = n0, m = m0;
  for (;;) {
    double r_loss = p.kappa * n;
    double r_pump = p.gamma_up * (Mi - m);
    double r_nr = p.gamma_down * m;
    double r_abs = p.B_abs * (double)n * (Mi - m);
    double r_em = p.B_em * (n + 1.0) * m;
    double total = r_loss + r_pump + r_nr + r_abs + r_em;
    if (total <= 0) break;
    t += -std::log1p(-uniform01(rng)) / total;
    if (t >= t_end) break;
    double u = uniform01(rng) * total;
    JumpChannel ch;
    if (u < r_loss) {
      --n;
      ch = JumpChannel::loss;
    } else if (u < r_loss + r_pump) {
      ++m;
      ch = JumpChannel::pump;
    } else if (u < r_loss + r_pump + r_nr) {
      --m;
      ch = JumpChannel::nonradiative;
    } else if (u < r_loss + r_pump + r_nr + r_abs) {
      --n;
      ++m;
      ch = JumpChannel::absorption;
    } else {
      ++n;
      --m;
      ch = JumpChannel::emission;
    }
    tr.times.push_back(t);
    tr.n.push_back(n);
    tr.m.push_back(m);
    tr.channel.push_back((std::uint8_t)ch);
  }
  return tr;
}

std::vector<Trajectory> gillespie_ensemble(const ModelParams& p, std::uint64_t master_seed,
                                           int count, double t_end, int n0, int m0, int threads) {
  if (count <= 0) throw ValidationError("count", "must be > 0");
  if (threads <= 0) threads = (int)std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);

  std::vector<Trajectory> out((std::size_t)count);
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      // per-trajectory stream from (master_seed, index)
      std::uint64_t seed = master_seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t)(i + 1));
      out[(std::size_t)i] = gillespie_simulate(p, seed, t_end, n0, m0);
    }
  };
  std::vector<std::future<void>> futs;
  int chunk = (count + threads - 1) / threads;
  for (int b = 0; b < count; b += chunk)
    futs.push_back(std::async(std::launch::async, worker, b, std::min(b + chunk, count)));
  for (auto& f : futs) f.get();
  return out;
}

// ---------------------------------------------------------------------------
// trajectory estimator

namespace {

struct TrajPartial {
  double T = 0, S1 = 0, S2 = 0;       // exact window integrals of 1, n, n^2
  std::vector<double> lag_sum;        // sum of N_b N_{b+k} per lag
  std::vector<double> lag_cnt;        // pair counts per lag
  double bin_sum = 0, bin_cnt = 0;    // bin-mean accumulation
};

TrajPartial partial_for(const Trajectory& tr, double burn_in, double bin_width,
                        const std::vector<int>& lags) {
  TrajPartial pt;
  const double t0 = burn_in, t1 = tr.t_end;
  int nbins = (int)std::floor((t1 - t0) / bin_width);
  std::vector<double> bins((std::size_t)std::max(nbins, 0), 0.0);

  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    double a = tr.times[i];
    double b = (i + 1 < tr.times.size()) ? tr.times[i + 1] : tr.t_end;
    double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo) continue;
    double nn = tr.n[i];
    pt.T += hi - lo;
    pt.S1 += (hi - lo) * nn;
    pt.S2 += (hi - lo) * nn * nn;
    // overlap-weighted bin accumulation
    if (nbins > 0) {
      int b0 = std::min((int)((lo - t0) / bin_width), nbins - 1);
      int b1 = std::min((int)((hi - t0) / bin_width), nbins - 1);
      for (int bi = b0; bi <= b1; ++bi) {
        double blo = t0 + bi * bin_width, bhi = blo + bin_width;
        double ov = std::min(hi, bhi) - std::max(lo, blo);
        if (ov > 0) bins[(std::size_t)bi] += ov * nn;
      }
    }
  }
  for (auto& v : bins) v /= bin_width;

  pt.bin_cnt = (double)bins.size();
  for (double v : bins) pt.bin_sum += v;
  pt.lag_sum.assign(lags.size(), 0.0);
  pt.lag_cnt.assign(lags.size(), 0.0);
  for (std::size_t li = 0; li < lags.size(); ++li) {
    int k = lags[li];
    for (int b = 0; b + k < (int)bins.size(); ++b) {
      pt.lag_sum[li] += bins[(std::size_t)b] * bins[(std::size_t)(b + k)];
      pt.lag_cnt[li] += 1;
    }
  }
  return pt;
}

}  // namespace

G2Curve trajectory_g2(const std::vector<Trajectory>& trajs, const std::vector<double>& tau_grid,
                      double bin_width, double burn_in, Ordering ordering) {
  if (trajs.size() < 2) throw ValidationError("trajectories", "need at least 2");
  if (!(bin_width > 0)) throw ValidationError("bin_width", "must be > 0");
  double max_tau = tau_grid.empty() ? 0.0 : tau_grid.back();
  for (const auto& tr : trajs)
    if (tr.t_end < burn_in + max_tau + bin_width)
      throw ValidationError("trajectories", "shorter than burn-in + max(tau): insufficient data");

  std::vector<int> lags;
  lags.reserve(tau_grid.size());
  for (double t : tau_grid) lags.push_back((int)std::llround(t / bin_width));

  const std::size_t R = trajs.size(), L = lags.size();
  std::vector<TrajPartial> parts(R);
  for (std::size_t i = 0; i < R; ++i) parts[i] = partial_for(trajs[i], burn_in, bin_width, lags);

  // pooled estimator, optionally leaving one trajectory out
  auto estimate = [&](std::ptrdiff_t skip, std::vector<double>& g2) {
    double T = 0, S1 = 0, S2 = 0, bs = 0, bc = 0;
    std::vector<double> ls(L, 0.0), lc(L, 0.0);
    for (std::size_t i = 0; i < R; ++i) {
      if ((std::ptrdiff_t)i == skip) continue;
      T += parts[i].T;
      S1 += parts[i].S1;
      S2 += parts[i].S2;
      bs += parts[i].bin_sum;
      bc += parts[i].bin_cnt;
      for (std::size_t l = 0; l < L; ++l) {
        ls[l] += parts[i].lag_sum[l];
        lc[l] += parts[i].lag_cnt[l];
      }
    }
    double mean_ex = S1 / T;
    double mean_bin = (bc > 0) ? bs / bc : mean_ex;
    g2.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      if (lags[l] == 0) {
        double num = S2 / T - (ordering == Ordering::normal ? mean_ex : 0.0);
        g2[l] = num / (mean_ex * mean_ex);
      } else {
        if (lc[l] <= 0) throw ValidationError("tau_grid", "insufficient data for lag");
        g2[l] = (ls[l] / lc[l]) / (mean_bin * mean_bin);
      }
    }
  };

  G2Curve out;
  out.ordering = ordering;
  out.tau.resize(L);
  for (std::size_t l = 0; l < L; ++l) out.tau[l] = lags[l] * bin_width;
  estimate(-1, out.g2);

  // jackknife standard errors
  std::vector<std::vector<double>> loo(R);
  for (std::size_t i = 0; i < R; ++i) estimate((std::ptrdiff_t)i, loo[i]);
  out.std_err.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0;
    for (std::size_t i = 0; i < R; ++i) mean += loo[i][l];
    mean /= (double)R;
    double ss = 0;
    for (std::size_t i = 0; i < R; ++i) ss += (loo[i][l] - mean) * (loo[i][l] - mean);
    out.std_err[l] = std::sqrt((double)(R - 1) / (double)R * ss);
  }
  return out;
}

EnsembleMoments ensemble_photon_moments(const std::vector<Trajectory>& trajs, double burn_in) {
  if (trajs.size() < 2) throw ValidationError("trajectories", "need at least 2");
  std::vector<double> T(trajs.size()), S1(trajs.size()), S2(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = trajs[i];
    if (tr.t_end <= burn_in) throw ValidationError("trajectories", "shorter than burn-in");
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
      double a = tr.times[j];
      double b = (j + 1 < tr.times.size()) ? tr.times[j + 1] : tr.t_end;
      double lo = std::max(a, burn_in), hi = std::min(b, tr.t_end);
      if (hi <= lo) continue;
      T[i] += hi - lo;
      S1[i] += (hi - lo) * tr.n[j];
      S2[i] += (hi - lo) * (double)tr.n[j] * tr.n[j];
    }
  }
  double sT = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    sT += T[i];
    s1 += S1[i];
    s2 += S2[i];
  }
  EnsembleMoments em;
  em.mean_n = s1 / sT;
  em.mean_n2 = s2 / sT;
  std::vector<double> loo(trajs.size());
  double mean = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    loo[i] = (s1 - S1[i]) / (sT - T[i]);
    mean += loo[i];
  }
  mean /= (double)trajs.size();
  double ss = 0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  em.se_mean_n = std::sqrt((double)(trajs.size() - 1) / (double)trajs.size() * ss);
  return em;
}

TruncationReport verify_truncation_identity(const DistributionGrid& g) {
  double sum = 0;
  for (double v : g.p) sum += v;
  if (std::abs(sum - 1.0) > 1e-8) throw ValidationError("p", "distribution not normalized");

  double n1 = 0, m1 = 0, n2 = 0, m2 = 0, nm = 0, mm1 = 0, nm2 = 0, n2m = 0;
  for (int n = 0; n <= g.n_max; ++n) {
    for (int m = 0; m <= g.M; ++m) {
      double w = g.at(n, m);
      n1 += w * n;
      m1 += w * m;
      n2 += w * (double)n * n;
      m2 += w * (double)m * m;
      nm += w * (double)n * m;
      mm1 += w * (double)m * (m - 1.0);           // M(M-1) <s+ s- s~+ s~->
      nm2 += w * (double)n * m * m;
      n2m += w * (double)n * n * m;
    }
  }
  TruncationReport rep;
  double scale = std::max(std::abs(m2 - m1), 1e-300);
  rep.pauli_identity_residual = std::abs(mm1 - (m2 - m1)) / scale;
  double cl_nm2 = 2 * m1 * nm + n1 * m2 - 2 * n1 * m1 * m1;
  double cl_n2m = 2 * n1 * nm + m1 * n2 - 2 * m1 * n1 * n1;
  rep.closure_nm2_rel = std::abs(cl_nm2 - nm2) / std::max(std::abs(nm2), 1e-300);
  rep.closure_n2m_rel = std::abs(cl_n2m - n2m) / std::max(std::abs(n2m), 1e-300);
  return rep;
}

}  // namespace pbec::oracle
