// Monte Carlo experiment runners.  Each runner draws replications on
// independent RNG streams, gathers per-replication statistics by index (so
// reports are bit-reproducible for a given config and seed regardless of
// thread count), computes bootstrap standard errors, and emits a report whose
// theoretical targets all come from the limits or moments-oracle modules.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fbsvar/config.hpp"
#include "fbsvar/diagrams.hpp"
#include "fbsvar/errors.hpp"
#include "fbsvar/fgn.hpp"
#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/limits.hpp"
#include "fbsvar/stats.hpp"
#include "fbsvar/variations.hpp"

#ifndef FBSVAR_VERSION
#define FBSVAR_VERSION "untracked"
#endif

namespace fbsvar {

namespace detail {

template <class Fn>
void parallel_for(std::int64_t n, int threads, Fn&& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(threads, n));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::string point_label(std::span<const double> t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ",";
    s += format_full(t[i]);
  }
  return s + ")";
}

inline std::string extents_label(std::span<const std::int64_t> e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(e[i]);
  }
  return s;
}

// Statistic builders --------------------------------------------------------

inline Statistic stat_z(std::string name, double emp, double target, double se,
                        double zmax) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = target;
  s.se = se;
  s.z = (se > 0.0) ? (emp - target) / se : 0.0;
  s.mode = "z";
  s.threshold = zmax;
  s.pass = std::abs(s.z) <= zmax;
  return s;
}

inline Statistic stat_rel(std::string name, double emp, double target,
                          double se, double rel_tol) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = target;
  s.se = se;
  s.z = (se > 0.0) ? (emp - target) / se : 0.0;
  s.mode = "rel";
  s.threshold = rel_tol;
  s.pass = std::abs(emp - target) <= rel_tol * std::abs(target);
  return s;
}

inline Statistic stat_abs(std::string name, double emp, double target,
                          double tol) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = target;
  s.mode = "abs";
  s.threshold = tol;
  s.pass = std::abs(emp - target) <= tol;
  return s;
}

inline Statistic stat_lower(std::string name, double emp, double floor) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = floor;
  s.mode = "lower";
  s.threshold = floor;
  s.pass = emp >= floor;
  return s;
}

inline Statistic stat_upper(std::string name, double emp, double ceil) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = ceil;
  s.mode = "upper";
  s.threshold = ceil;
  s.pass = emp <= ceil;
  return s;
}

inline Statistic stat_info(std::string name, double emp, double target = 0.0) {
  Statistic s;
  s.name = std::move(name);
  s.empirical = emp;
  s.target = target;
  s.mode = "info";
  s.pass = true;
  return s;
}

// Bootstrap helper bound to one experiment run; statistics are numbered in
// creation order so that resampling streams are reproducible.
class Bootstrapper {
 public:
  Bootstrapper(const ExperimentConfig& cfg)
      : seed_(cfg.seed),
        tag_(fnv1a64(cfg.hash() + ":bootstrap")),
        resamples_(cfg.bootstrap_resamples) {}

  BootstrapResult run(
      std::int64_t n,
      const std::function<double(std::span<const std::int64_t>)>& fn) {
    return bootstrap(n, resamples_, SeedSpec{seed_, stream_for(tag_, index_++)},
                     fn);
  }

  /// SE of the mean of `data` under resampling.
  BootstrapResult of_mean(const std::vector<double>& data) {
    std::vector<double> tmp(data.size());
    return run(static_cast<std::int64_t>(data.size()),
               [&](std::span<const std::int64_t> idx) {
                 for (std::size_t k = 0; k < idx.size(); ++k)
                   tmp[k] = data[idx[k]];
                 return sample_mean(tmp);
               });
  }

  BootstrapResult of(const std::vector<double>& data,
                     double (*statistic)(std::span<const double>)) {
    std::vector<double> tmp(data.size());
    return run(static_cast<std::int64_t>(data.size()),
               [&](std::span<const std::int64_t> idx) {
                 for (std::size_t k = 0; k < idx.size(); ++k)
                   tmp[k] = data[idx[k]];
                 return statistic(tmp);
               });
  }

  BootstrapResult of_pair(const std::vector<double>& x,
                          const std::vector<double>& y,
                          double (*statistic)(std::span<const double>,
                                              std::span<const double>)) {
    std::vector<double> tx(x.size()), ty(y.size());
    return run(static_cast<std::int64_t>(x.size()),
               [&](std::span<const std::int64_t> idx) {
                 for (std::size_t k = 0; k < idx.size(); ++k) {
                   tx[k] = x[idx[k]];
                   ty[k] = y[idx[k]];
                 }
                 return statistic(tx, ty);
               });
  }

 private:
  std::uint64_t seed_;
  std::uint64_t tag_;
  int resamples_;
  std::uint64_t index_ = 0;
};

inline double mean_of_products(std::span<const double> x,
                               std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc / static_cast<double>(x.size());
}

inline SeedSpec rep_seed(const ExperimentConfig& cfg, std::uint64_t r) {
  return SeedSpec{cfg.seed,
                  stream_for(fnv1a64(cfg.hash() + ":rep"), r)};
}

}  // namespace detail

// --- covariance -------------------------------------------------------------

/// Verifies the sampler against the closed-form sheet covariance and the
/// product correlation structure of the increments.
inline void run_covariance(const ExperimentConfig& cfg, int threads,
                           ExperimentReport& report) {
  const LatticeShape m{cfg.shape};
  const IncrementFieldSampler sampler(cfg.hurst, m, FactorOptions{});
  const std::int64_t N = cfg.replications;
  const double zmax = cfg.tol("z", 4.0);

  // t points must be lattice points i/m
  std::vector<std::int64_t> t_flat;
  const LatticeShape points = m.grown(1);
  for (const auto& t : cfg.t_points) {
    MultiIndex idx(t.size());
    for (std::size_t nu = 0; nu < t.size(); ++nu) {
      const double mt = t[nu] * static_cast<double>(m.extent(nu));
      idx[nu] = static_cast<std::int64_t>(std::llround(mt));
      if (std::abs(mt - static_cast<double>(idx[nu])) > 1e-12)
        throw config_error("/t_points", "covariance t must lie on the lattice");
    }
    t_flat.push_back(points.flatten(idx));
  }

  double scale = 1.0;
  for (int nu = 0; nu < m.dim(); ++nu)
    scale *= std::pow(static_cast<double>(m.extent(nu)), -cfg.hurst[nu]);

  const std::size_t T = cfg.t_points.size();
  std::vector<std::vector<double>> zvals(T, std::vector<double>(N));
  std::vector<std::vector<double>> lag_avg(cfg.lags.size(),
                                           std::vector<double>(N));

  detail::parallel_for(N, threads, [&](std::int64_t r) {
    LatticeField incr = sampler.sample(detail::rep_seed(cfg, r));
    // lag products over the increment field
    for (std::size_t li = 0; li < cfg.lags.size(); ++li) {
      const auto& lag = cfg.lags[li];
      double acc = 0.0;
      std::int64_t count = 0;
      for_each_index(incr.shape(), [&](const MultiIndex& i, std::int64_t flat) {
        MultiIndex j(i);
        for (int nu = 0; nu < m.dim(); ++nu) j[nu] += lag[nu];
        if (!incr.shape().contains(j)) return;
        acc += incr[flat] * incr.at(j);
        ++count;
      });
      lag_avg[li][r] = count > 0 ? acc / static_cast<double>(count) : 0.0;
    }
    for (auto& v : incr.values()) v *= scale;
    const LatticeField field = cumulative_field(incr);
    for (std::size_t ti = 0; ti < T; ++ti) zvals[ti][r] = field[t_flat[ti]];
  });

  detail::Bootstrapper boot(cfg);
  for (std::size_t a = 0; a < T; ++a) {
    for (std::size_t b = a; b < T; ++b) {
      std::vector<double> prod(N);
      for (std::int64_t r = 0; r < N; ++r) prod[r] = zvals[a][r] * zvals[b][r];
      const double emp = sample_mean(prod);
      const double target = fbs_covariance(cfg.hurst, cfg.t_points[a],
                                           cfg.t_points[b]);
      const auto bs = boot.of_mean(prod);
      report.statistics.push_back(detail::stat_z(
          "cov_Z" + detail::point_label(cfg.t_points[a]) +
              detail::point_label(cfg.t_points[b]),
          emp, target, bs.se, zmax));
    }
  }
  for (std::size_t li = 0; li < cfg.lags.size(); ++li) {
    double target = 1.0;
    for (int nu = 0; nu < m.dim(); ++nu)
      target *= fgn_autocovariance(cfg.hurst[nu], cfg.lags[li][nu]);
    const double emp = sample_mean(lag_avg[li]);
    const auto bs = boot.of_mean(lag_avg[li]);
    std::vector<std::int64_t> lag64(cfg.lags[li].begin(), cfg.lags[li].end());
    report.statistics.push_back(detail::stat_z(
        "incr_corr[" + detail::extents_label(lag64) + "]", emp, target, bs.se,
        zmax));
  }
}

// --- central limit ----------------------------------------------------------

/// Central-regime checks: rescaled-variation covariances against
/// Lambda R_{H~}, moment-based normality, and asymptotic independence from
/// the driving sheet.
inline void run_clt(const ExperimentConfig& cfg, int threads,
                    ExperimentReport& report) {
  const HermiteExpansion& e = cfg.functional->expansion;
  const RegimeReport regime = classify_regime(cfg.hurst, e.rank);
  if (regime.regime != Regime::CLT)
    throw inconsistency_error("clt experiment requires the central regime");

  const LatticeShape m{cfg.shape};
  const IncrementFieldSampler sampler(cfg.hurst, m, FactorOptions{});
  const std::int64_t N = cfg.replications;
  const double zmax = cfg.tol("z", 4.0);
  const double var_rel = cfg.tol("var_rel", 0.10);

  const double lambda = lambda_constant(cfg.hurst, e, cfg.tol("tail_tol", 1e-10));
  const RealVec h_shift = hurst_shift(cfg.hurst, e.rank);
  const double c_prod = scaling_factor(cfg.hurst, e.rank, m).product;
  const double inv_sqrt_c = 1.0 / std::sqrt(c_prod);

  double z_scale = 1.0;
  for (int nu = 0; nu < m.dim(); ++nu)
    z_scale *= std::pow(static_cast<double>(m.extent(nu)), -cfg.hurst[nu]);

  const std::size_t T = cfg.t_points.size();
  std::vector<std::vector<double>> ubar(T, std::vector<double>(N));
  std::vector<std::vector<double>> zval(T, std::vector<double>(N));

  detail::parallel_for(N, threads, [&](std::int64_t r) {
    LatticeField incr = sampler.sample(detail::rep_seed(cfg, r));
    const VariationProcess u = generalized_variation(incr, e);
    for (std::size_t ti = 0; ti < T; ++ti)
      ubar[ti][r] =
          u.value_at(cfg.t_points[ti], EvalMode::PiecewiseConstant) * inv_sqrt_c;
    for (auto& v : incr.values()) v *= z_scale;
    const LatticeField field = cumulative_field(incr);
    for (std::size_t ti = 0; ti < T; ++ti) {
      const MultiIndex i = floor_scale(cfg.t_points[ti], m);
      zval[ti][r] = field.at(i);
    }
  });

  detail::Bootstrapper boot(cfg);
  const double normality_z = cfg.tol("normality_z", zmax);
  for (std::size_t ti = 0; ti < T; ++ti) {
    const std::string at = detail::point_label(cfg.t_points[ti]);
    const double target =
        lambda * limit_covariance(h_shift, cfg.t_points[ti], cfg.t_points[ti]);
    const double emp_var = sample_variance(ubar[ti]);
    const auto bs_var = boot.of(ubar[ti], sample_variance);
    bool at_one = true;
    for (double tv : cfg.t_points[ti]) at_one &= (tv == 1.0);
    // the relative band is pinned at the corner point; interior points get
    // the 4-SE consistency check
    if (at_one)
      report.statistics.push_back(detail::stat_rel("var_Ubar" + at, emp_var,
                                                   target, bs_var.se, var_rel));
    else
      report.statistics.push_back(
          detail::stat_z("var_Ubar" + at, emp_var, target, bs_var.se, zmax));

    if (at_one) {
      // exact finite-lattice variance validates the sampler/estimator chain
      // independently of how far the asymptotic constant still is
      const double exact = exact_rescaled_cross_moment(cfg.hurst, e, m, m);
      report.statistics.push_back(
          detail::stat_info("exact_var_Ubar" + at, exact, target));
      report.statistics.push_back(detail::stat_z(
          "var_Ubar_vs_exact" + at, emp_var, exact, bs_var.se, zmax));
    }

    const double emp_skew = sample_skewness(ubar[ti]);
    const auto bs_skew = boot.of(ubar[ti], sample_skewness);
    report.statistics.push_back(detail::stat_z("skew_Ubar" + at, emp_skew, 0.0,
                                               bs_skew.se, normality_z));

    const double emp_kurt = sample_excess_kurtosis(ubar[ti]);
    const auto bs_kurt = boot.of(ubar[ti], sample_excess_kurtosis);
    report.statistics.push_back(detail::stat_z("kurt_Ubar" + at, emp_kurt, 0.0,
                                               bs_kurt.se, normality_z));

    const double emp_corr =
        std::abs(sample_correlation(zval[ti], ubar[ti]));
    report.statistics.push_back(detail::stat_abs(
        "abs_corr_Z_Ubar" + at, emp_corr, 0.0,
        cfg.tol("corr_bound", 4.0 / std::sqrt(static_cast<double>(N)))));
  }
  for (std::size_t a = 0; a < T; ++a) {
    for (std::size_t b = a + 1; b < T; ++b) {
      const double target =
          lambda * limit_covariance(h_shift, cfg.t_points[a], cfg.t_points[b]);
      const double emp = sample_covariance(ubar[a], ubar[b]);
      const auto bs = boot.of_pair(ubar[a], ubar[b], sample_covariance);
      report.statistics.push_back(detail::stat_z(
          "cov_Ubar" + detail::point_label(cfg.t_points[a]) +
              detail::point_label(cfg.t_points[b]),
          emp, target, bs.se, zmax));
    }
  }
}

// --- non-central limit --------------------------------------------------------

/// Non-central-regime checks at t = (1,...,1): limiting variance, positive
/// excess kurtosis (non-Gaussianity), and the nested-lattice L2 Cauchy
/// statistic, all against exact finite-lattice oracles.  The "control"
/// variant runs the same coupling statistic in the central regime, where it
/// must stay bounded away from zero.
inline void run_nclt(const ExperimentConfig& cfg, int threads,
                     ExperimentReport& report) {
  const HermiteExpansion& e = cfg.functional->expansion;
  const RegimeReport regime = classify_regime(cfg.hurst, e.rank);
  const bool control = cfg.variant == "control";
  if (!control && regime.regime != Regime::NCLT)
    throw inconsistency_error("nclt experiment requires the non-central regime");
  if (control && regime.regime != Regime::CLT)
    throw inconsistency_error("nclt control variant requires the central regime");

  const int d = static_cast<int>(cfg.hurst.size());
  const std::size_t L = cfg.shape_grid.size();
  std::vector<LatticeShape> levels;
  for (const auto& s : cfg.shape_grid) levels.emplace_back(s);
  for (std::size_t l = 0; l + 1 < L; ++l)
    for (int nu = 0; nu < d; ++nu)
      if (levels[l + 1].extent(nu) % levels[l].extent(nu) != 0)
        throw config_error("/shape_grid", "levels must nest (integer ratios)");

  const LatticeShape& fine = levels.back();
  const IncrementFieldSampler sampler(cfg.hurst, fine, FactorOptions{});
  const std::int64_t N = cfg.replications;
  const double zmax = cfg.tol("z", 4.0);

  std::vector<double> inv_sqrt_c(L);
  for (std::size_t l = 0; l < L; ++l)
    inv_sqrt_c[l] =
        1.0 / std::sqrt(scaling_factor(cfg.hurst, e.rank, levels[l]).product);

  double z_scale = 1.0;
  for (int nu = 0; nu < d; ++nu)
    z_scale *= std::pow(static_cast<double>(fine.extent(nu)), -cfg.hurst[nu]);

  std::vector<std::vector<double>> ubar(L, std::vector<double>(N));
  std::vector<double> z_at_one(N);

  detail::parallel_for(N, threads, [&](std::int64_t r) {
    const LatticeField incr = sampler.sample(detail::rep_seed(cfg, r));
    double total = 0.0;
    for (double v : incr.values()) total += v;
    z_at_one[r] = total * z_scale;
    for (std::size_t l = 0; l < L; ++l) {
      const LatticeShape& coarse = levels[l];
      double block_scale = 1.0;
      std::vector<std::int64_t> q(d);
      for (int nu = 0; nu < d; ++nu) {
        q[nu] = fine.extent(nu) / coarse.extent(nu);
        block_scale *= std::pow(static_cast<double>(q[nu]), -cfg.hurst[nu]);
      }
      std::vector<double> agg(static_cast<std::size_t>(coarse.total()), 0.0);
      for_each_index(incr.shape(), [&](const MultiIndex& i, std::int64_t flat) {
        std::int64_t target = 0;
        for (int nu = 0; nu < d; ++nu)
          target += (i[nu] / q[nu]) * coarse.stride(nu);
        agg[target] += incr[flat];
      });
      double u = 0.0;
      for (double v : agg) u += e.evaluate(v * block_scale);
      ubar[l][r] = u * inv_sqrt_c[l];
    }
  });

  detail::Bootstrapper boot(cfg);
  const double lambda = lambda_constant(cfg.hurst, e, cfg.tol("tail_tol", 1e-10));
  const RealVec h_shift = hurst_shift(cfg.hurst, e.rank);
  const RealVec one(d, 1.0);

  const double var_target = lambda * limit_covariance(h_shift, one, one);
  const double emp_var = sample_variance(ubar[L - 1]);
  const auto bs_var = boot.of(ubar[L - 1], sample_variance);
  report.statistics.push_back(detail::stat_rel("var_Ubar(1)", emp_var,
                                               var_target, bs_var.se,
                                               cfg.tol("var_rel", 0.10)));
  report.statistics.push_back(detail::stat_info(
      "exact_var_Ubar(1)",
      exact_rescaled_cross_moment(cfg.hurst, e, fine, fine), var_target));

  if (!control) {
    const double emp_skew = sample_skewness(ubar[L - 1]);
    report.statistics.push_back(detail::stat_info("skew_Ubar(1)", emp_skew));
    if (e.rank >= 2) {
      const double emp_kurt = sample_excess_kurtosis(ubar[L - 1]);
      const auto bs_kurt = boot.of(ubar[L - 1], sample_excess_kurtosis);
      report.statistics.push_back(detail::stat_lower(
          "excess_kurt_Ubar(1)", emp_kurt, cfg.tol("kurt_floor", 0.5)));
      report.statistics.push_back(
          detail::stat_lower("excess_kurt_lcb", bs_kurt.lo, 0.0));
    } else {
      // rank 1: the limit is the driving sheet itself
      const double emp_corr = sample_correlation(ubar[L - 1], z_at_one);
      report.statistics.push_back(detail::stat_lower(
          "corr_Ubar_Z(1)", std::abs(emp_corr), cfg.tol("corr_floor", 0.9)));
    }
  }

  // nested-coupling Cauchy statistic E[(Ubar_{2n} - Ubar_n)^2(1)]; when the
  // coupling is exactly degenerate (rank-one linear case) both sides are
  // rounding-level zeros, so comparisons switch to an absolute floor
  const double cauchy_eps = 1e-10 * std::max(1.0, var_target);
  std::vector<double> cauchy_emp(L > 0 ? L - 1 : 0);
  bool degenerate = true;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    std::vector<double> d2(N);
    for (std::int64_t r = 0; r < N; ++r) {
      const double diff = ubar[l + 1][r] - ubar[l][r];
      d2[r] = diff * diff;
    }
    const double emp = sample_mean(d2);
    cauchy_emp[l] = emp;
    const double target =
        exact_rescaled_cross_moment(cfg.hurst, e, levels[l], levels[l]) +
        exact_rescaled_cross_moment(cfg.hurst, e, levels[l + 1], levels[l + 1]) -
        2.0 * exact_rescaled_cross_moment(cfg.hurst, e, levels[l], levels[l + 1]);
    const std::string name =
        "cauchy[" + detail::extents_label(cfg.shape_grid[l]) + "]";
    if (std::abs(emp) <= cauchy_eps && std::abs(target) <= cauchy_eps) {
      report.statistics.push_back(detail::stat_abs(name, emp, 0.0, cauchy_eps));
    } else {
      degenerate = false;
      const auto bs = boot.of_mean(d2);
      report.statistics.push_back(detail::stat_z(name, emp, target, bs.se, zmax));
    }
  }
  if (cauchy_emp.size() >= 2 && !degenerate) {
    double max_ratio = 0.0;
    for (std::size_t l = 0; l + 1 < cauchy_emp.size(); ++l)
      max_ratio = std::max(max_ratio, cauchy_emp[l + 1] / cauchy_emp[l]);
    if (!control) {
      report.statistics.push_back(
          detail::stat_upper("cauchy_ratio_max", max_ratio, 1.0));
    } else {
      report.statistics.push_back(detail::stat_lower(
          "cauchy_last", cauchy_emp.back(), cfg.tol("cauchy_floor", 0.5)));
    }
  }
}

// --- law of large numbers ----------------------------------------------------

/// Functional LLN for power variations: the median over replications of the
/// lattice sup-distance between V_p and v_p must decrease along the grid.
inline void run_flln(const ExperimentConfig& cfg, int threads,
                     ExperimentReport& report) {
  const int p = cfg.power;
  const double gamma_p = gaussian_moment(p);
  const std::size_t L = cfg.shape_grid.size();
  const std::int64_t N = cfg.replications;

  std::vector<double> medians(L);
  for (std::size_t l = 0; l < L; ++l) {
    const LatticeShape m{cfg.shape_grid[l]};
    const IncrementFieldSampler sampler(cfg.hurst, m, FactorOptions{});
    std::vector<double> sup(N);
    const std::uint64_t tag =
        fnv1a64(cfg.hash() + ":flln:" + std::to_string(l));
    detail::parallel_for(N, threads, [&](std::int64_t r) {
      const LatticeField incr =
          sampler.sample(SeedSpec{cfg.seed, stream_for(tag, r)});
      const VariationProcess v = power_variation(incr, p);
      double worst = 0.0;
      for_each_index(v.values.shape(), [&](const MultiIndex& i,
                                           std::int64_t flat) {
        double vp = gamma_p;
        for (int nu = 0; nu < m.dim(); ++nu)
          vp *= static_cast<double>(i[nu]) /
                static_cast<double>(m.extent(nu));
        worst = std::max(worst, std::abs(v.values[flat] - vp));
      });
      sup[r] = worst;
    });
    medians[l] = sample_median(sup);
    report.statistics.push_back(detail::stat_info(
        "flln_sup_median[" + detail::extents_label(cfg.shape_grid[l]) + "]",
        medians[l]));
  }
  double max_ratio = 0.0;
  for (std::size_t l = 0; l + 1 < L; ++l)
    max_ratio = std::max(max_ratio, medians[l + 1] / medians[l]);
  report.statistics.push_back(
      detail::stat_upper("flln_ratio_max", max_ratio, 1.0));
}

// --- oracle agreement and moment bound ---------------------------------------

inline void append_bound_statistic(const OracleCase& oc, double work_cap,
                                   ExperimentReport& report) {
  const LatticeShape l{oc.extents};
  const double exact =
      exact_variation_moment(oc.hurst, l, oc.functional.expansion, oc.p,
                             work_cap);
  const MomentBound bound =
      moment_bound_rhs(oc.hurst, oc.functional.expansion, oc.p, l);
  report.statistics.push_back(detail::stat_info(
      "exact_moment[" + oc.label + "]", exact));
  report.statistics.push_back(detail::stat_upper(
      "bound_ratio[" + oc.label + "]",
      std::abs(exact) / bound.value, 1.0));
}

/// Deterministic inequality check: the exact moment never exceeds the
/// diagram-counting bound, over the configured case grid.
inline void run_moment_bound(const ExperimentConfig& cfg, int /*threads*/,
                             ExperimentReport& report) {
  const double work_cap = cfg.tol("work_cap", 1e7);
  for (const auto& oc : cfg.cases)
    append_bound_statistic(oc, work_cap, report);
}

/// Monte Carlo moments against the exact diagram-formula oracle, plus the
/// moment-bound inequality, per case.
inline void run_oracle_agreement(const ExperimentConfig& cfg, int threads,
                                 ExperimentReport& report) {
  const std::int64_t N = cfg.replications;
  const double zmax = cfg.tol("z", 4.0);
  const double work_cap = cfg.tol("work_cap", 1e7);
  detail::Bootstrapper boot(cfg);

  int case_index = 0;
  for (const auto& oc : cfg.cases) {
    const LatticeShape l{oc.extents};
    const IncrementFieldSampler sampler(oc.hurst, l, FactorOptions{});
    const HermiteExpansion& e = oc.functional.expansion;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(l.total()));
    std::vector<double> qp(N);
    const std::uint64_t tag =
        fnv1a64(cfg.hash() + ":case:" + std::to_string(case_index++));
    detail::parallel_for(N, threads, [&](std::int64_t r) {
      const LatticeField incr =
          sampler.sample(SeedSpec{cfg.seed, stream_for(tag, r)});
      double q = 0.0;
      for (double v : incr.values()) q += e.evaluate(v);
      qp[r] = int_pow(q * inv_sqrt, oc.p);
    });
    const double exact = exact_variation_moment(oc.hurst, l, e, oc.p, work_cap);
    const double emp = sample_mean(qp);
    const auto bs = boot.of_mean(qp);
    report.statistics.push_back(detail::stat_z(
        "mc_moment[" + oc.label + "]", emp, exact, bs.se, zmax));
    if (oc.p >= 2) append_bound_statistic(oc, work_cap, report);
  }
}

// --- beta explosion and interpolation fix -------------------------------------

/// Deterministic study of the fluctuation remainder for even power
/// variations: on a refining grid the sup over cell midpoints stays above the
/// predicted floor (and grows), the remainder vanishes at lattice points, the
/// multilinear interpolation annihilates it, and v_p is a fixed point of the
/// interpolation operator.
inline void run_beta_explosion(const ExperimentConfig& cfg, int /*threads*/,
                               ExperimentReport& report) {
  const int p = cfg.power;
  const int d = static_cast<int>(cfg.hurst.size());
  const double region_lo = cfg.tol("region_lo", 2.0 / 3.0);
  const double gamma_p = gaussian_moment(p);
  if (gamma_p == 0.0)
    throw inconsistency_error("beta-explosion requires even power");

  std::vector<double> sups;
  for (std::size_t li = 0; li < cfg.shape_grid.size(); ++li) {
    const LatticeShape m{cfg.shape_grid[li]};
    // per-axis probe coordinates: cell midpoints and lattice points in region
    std::vector<std::vector<double>> mids(d), nodes(d);
    for (int nu = 0; nu < d; ++nu) {
      const std::int64_t n = m.extent(nu);
      for (std::int64_t i = 0; i < n; ++i) {
        const double tm =
            (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        if (tm >= region_lo) mids[nu].push_back(tm);
        const double tn = static_cast<double>(i) / static_cast<double>(n);
        if (tn >= region_lo) nodes[nu].push_back(tn);
      }
      nodes[nu].push_back(1.0);
    }

    const auto sweep = [&](const std::vector<std::vector<double>>& axes,
                           auto&& fn) {
      std::vector<std::size_t> pick(d, 0);
      RealVec t(d);
      for (;;) {
        for (int nu = 0; nu < d; ++nu) t[nu] = axes[nu][pick[nu]];
        fn(t);
        int nu = d - 1;
        for (; nu >= 0; --nu) {
          if (++pick[nu] < axes[nu].size()) break;
          pick[nu] = 0;
        }
        if (nu < 0) break;
      }
    };

    double sup = 0.0;
    sweep(mids, [&](const RealVec& t) {
      sup = std::max(sup, beta_remainder(cfg.hurst, m, p, t));
    });
    double inf_lattice = std::numeric_limits<double>::infinity();
    sweep(nodes, [&](const RealVec& t) {
      inf_lattice = std::min(inf_lattice, beta_remainder(cfg.hurst, m, p, t));
    });
    sups.push_back(sup);

    const double n = static_cast<double>(m.extent(0));
    const double floor = cfg.tol("beta_floor_coeff", 0.25) *
                         std::pow(n, 0.5 * d - 1.0) /
                         std::pow(2.0, d - 1);
    const std::string at = "[" + detail::extents_label(cfg.shape_grid[li]) + "]";
    report.statistics.push_back(detail::stat_lower("beta_sup" + at, sup, floor));
    report.statistics.push_back(
        detail::stat_abs("beta_inf_lattice" + at, inf_lattice, 0.0, 0.0));

    // interpolated remainder: compare the interpolated fluctuation with the
    // interpolated power variation recentered at v_p, on one seeded draw
    const IncrementFieldSampler sampler(cfg.hurst, m, FactorOptions{});
    const std::uint64_t tag = fnv1a64(cfg.hash() + ":beta");
    const LatticeField incr =
        sampler.sample(SeedSpec{cfg.seed, stream_for(tag, li)});
    const FluctuationDecomposition fl = fluctuation(incr, cfg.hurst, p);
    double ln_beta = 0.0;
    sweep(mids, [&](const RealVec& t) {
      double vp = gamma_p;
      for (int nu = 0; nu < d; ++nu) vp *= t[nu];
      const double via_v =
          fl.scale *
          (multilinear_interpolate(fl.power_v.values, t) - vp);
      ln_beta = std::max(ln_beta, std::abs(fl.interpolated_at(t) - via_v));
    });
    report.statistics.push_back(detail::stat_abs(
        "Ln_beta_sup" + at, ln_beta, 0.0, cfg.tol("ln_beta_tol", 1e-9)));
  }

  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < sups.size(); ++l)
    min_ratio = std::min(min_ratio, sups[l + 1] / sups[l]);
  if (sups.size() >= 2)
    report.statistics.push_back(
        detail::stat_lower("beta_sup_growth_min_ratio", min_ratio, 1.0));

  // fixed point: L_n v_p = v_p at random probe points, finest grid
  const LatticeShape m{cfg.shape_grid.back()};
  LatticeField vp_field(m.grown(1), Anchor::LatticePoints);
  for_each_index(vp_field.shape(), [&](const MultiIndex& i, std::int64_t flat) {
    double vp = gamma_p;
    for (int nu = 0; nu < d; ++nu)
      vp *= static_cast<double>(i[nu]) / static_cast<double>(m.extent(nu));
    vp_field[flat] = vp;
  });
  const int samples = static_cast<int>(cfg.tol("fixed_point_samples", 1000));
  CounterRng rng(SeedSpec{cfg.seed, fnv1a64(cfg.hash() + ":fixedpoint")});
  double worst = 0.0;
  RealVec t(d);
  for (int s = 0; s < samples; ++s) {
    double vp = gamma_p;
    for (int nu = 0; nu < d; ++nu) {
      t[nu] = rng.next_uniform();
      vp *= t[nu];
    }
    worst = std::max(worst, std::abs(multilinear_interpolate(vp_field, t) - vp));
  }
  report.statistics.push_back(detail::stat_abs(
      "fixed_point_sup", worst, 0.0, cfg.tol("fixed_point_tol", 1e-12)));
}

/// Limit statistics for multilinearly interpolated power-variation
/// fluctuations at off-lattice points, plus exact agreement with the
/// piecewise-constant reading at lattice points.
inline void run_interpolation(const ExperimentConfig& cfg, int threads,
                              ExperimentReport& report) {
  const int p = cfg.power;
  const HermiteExpansion rho = power_expansion(p);
  const LatticeShape m{cfg.shape};
  const IncrementFieldSampler sampler(cfg.hurst, m, FactorOptions{});
  const std::int64_t N = cfg.replications;
  const double zmax = cfg.tol("z", 4.0);

  const double lambda =
      lambda_constant(cfg.hurst, rho, cfg.tol("tail_tol", 1e-10));
  const RealVec h_shift = hurst_shift(cfg.hurst, rho.rank);

  const std::size_t T = cfg.t_points.size();
  std::vector<std::vector<double>> interp(T, std::vector<double>(N));
  std::vector<double> lattice_gap(N);

  detail::parallel_for(N, threads, [&](std::int64_t r) {
    const LatticeField incr = sampler.sample(detail::rep_seed(cfg, r));
    const FluctuationDecomposition fl = fluctuation(incr, cfg.hurst, p);
    for (std::size_t ti = 0; ti < T; ++ti)
      interp[ti][r] = fl.interpolated_at(cfg.t_points[ti]);
    // at lattice points the two readings coincide exactly
    double gap = 0.0;
    const int d = m.dim();
    RealVec t(d);
    for (std::int64_t probe = 1; probe <= 4; ++probe) {
      for (int nu = 0; nu < d; ++nu) {
        const std::int64_t i = (m.extent(nu) * probe) / 4;
        t[nu] = static_cast<double>(i) / static_cast<double>(m.extent(nu));
      }
      gap = std::max(gap,
                     std::abs(fl.interpolated_at(t) - fl.fluctuation_at(t)));
    }
    lattice_gap[r] = gap;
  });

  detail::Bootstrapper boot(cfg);
  for (std::size_t ti = 0; ti < T; ++ti) {
    const double target =
        lambda * limit_covariance(h_shift, cfg.t_points[ti], cfg.t_points[ti]);
    const double emp = sample_variance(interp[ti]);
    const auto bs = boot.of(interp[ti], sample_variance);
    report.statistics.push_back(detail::stat_z(
        "var_interp" + detail::point_label(cfg.t_points[ti]), emp, target,
        bs.se, zmax));
  }
  double worst = 0.0;
  for (double g : lattice_gap) worst = std::max(worst, g);
  report.statistics.push_back(
      detail::stat_abs("interp_pc_lattice_gap", worst, 0.0, 0.0));
}

// --- dispatch -----------------------------------------------------------------

inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       int threads) {
  ExperimentReport report;
  report.kind = kind_name(cfg.kind);
  report.name = cfg.name;
  report.config_hash = cfg.hash();
  report.seed = cfg.seed;
  report.version = FBSVAR_VERSION;
  const auto start = std::chrono::steady_clock::now();
  switch (cfg.kind) {
    case ExperimentKind::Covariance:
      run_covariance(cfg, threads, report);
      break;
    case ExperimentKind::Clt:
      run_clt(cfg, threads, report);
      break;
    case ExperimentKind::Nclt:
      run_nclt(cfg, threads, report);
      break;
    case ExperimentKind::Flln:
      run_flln(cfg, threads, report);
      break;
    case ExperimentKind::MomentBound:
      run_moment_bound(cfg, threads, report);
      break;
    case ExperimentKind::OracleAgreement:
      run_oracle_agreement(cfg, threads, report);
      break;
    case ExperimentKind::BetaExplosion:
      run_beta_explosion(cfg, threads, report);
      break;
    case ExperimentKind::Interpolation:
      run_interpolation(cfg, threads, report);
      break;
  }
  report.all_pass = true;
  for (const auto& s : report.statistics) report.all_pass &= s.pass;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace fbsvar
