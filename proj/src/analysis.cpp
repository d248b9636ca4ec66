#include "agneslab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "agneslab/errors.hpp"

namespace agneslab::analysis {

namespace {

constexpr int kBlockRuns = 32;  // reduction unit; fixed so results do not depend on thread count

// Welford accumulator per iteration index; blocks merge in run order.
struct SeriesAccum {
  long count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  void init(std::size_t len) {
    mean.assign(len, 0.0);
    m2.assign(len, 0.0);
  }
  void add(std::size_t i, double x) {
    const double delta = x - mean[i];
    mean[i] += delta / static_cast<double>(count);
    m2[i] += delta * (x - mean[i]);
  }
  void merge(const SeriesAccum& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = other.mean[i] - mean[i];
      mean[i] += delta * nb / (na + nb);
      m2[i] += other.m2[i] + delta * delta * na * nb / (na + nb);
    }
    count += other.count;
  }
};

struct BlockAccum {
  SeriesAccum f_iter, f_query, grad_sq, lyap;
  std::vector<long> diverged;
  bool with_lyap = false;

  void init(std::size_t len, bool lyap_on) {
    with_lyap = lyap_on;
    f_iter.init(len);
    f_query.init(len);
    grad_sq.init(len);
    if (lyap_on) lyap.init(len);
    diverged.assign(len, 0);
  }
};

double lyapunov_value(const LyapunovSpec& spec, const optim::StepRecord& r) {
  const double n = static_cast<double>(r.n);
  switch (spec.kind) {
    case LyapunovSpec::Kind::convex_agnes: {
      const double z = n + spec.n0;
      const double p = (spec.alpha * z + 2.0 * spec.eta) * z;
      const double w =
          (z * (r.query - r.x) + 2.0 * (r.query - *spec.x_star)).squaredNorm();
      return p * (r.f_iterate - spec.f_star) + 0.5 * w;
    }
    case LyapunovSpec::Kind::convex_nag: {
      const double p = spec.eta * n * (n + 2.0);
      const double w =
          (n * (r.query - r.x) + 2.0 * (r.query - *spec.x_star)).squaredNorm();
      return p * (r.f_iterate - spec.f_star) + 0.5 * w;
    }
    case LyapunovSpec::Kind::convex_gd: {
      const double p = spec.eta * (n + spec.n0);
      return p * (r.f_iterate - spec.f_star) +
             0.5 * (r.x - *spec.x_star).squaredNorm();
    }
    case LyapunovSpec::Kind::strongly_convex: {
      const double w = (spec.b * (r.query - r.x) + spec.a * (r.query - *spec.x_star))
                           .squaredNorm();
      return (r.f_iterate - spec.f_star) + 0.5 * w;
    }
    case LyapunovSpec::Kind::non_convex:
      return r.f_iterate + 0.5 * spec.lambda * (r.query - r.x).squaredNorm();
  }
  return 0.0;
}

}  // namespace

LyapunovSpec LyapunovSpec::convex_agnes(double alpha, double eta, double n0,
                                        double f_star, Vec x_star) {
  LyapunovSpec s;
  s.kind = Kind::convex_agnes;
  s.alpha = alpha;
  s.eta = eta;
  s.n0 = n0;
  s.f_star = f_star;
  s.x_star = std::move(x_star);
  return s;
}

LyapunovSpec LyapunovSpec::convex_nag(double eta, double f_star, Vec x_star) {
  LyapunovSpec s;
  s.kind = Kind::convex_nag;
  s.eta = eta;
  s.f_star = f_star;
  s.x_star = std::move(x_star);
  return s;
}

LyapunovSpec LyapunovSpec::convex_gd(double eta, double n0, double f_star,
                                     Vec x_star) {
  LyapunovSpec s;
  s.kind = Kind::convex_gd;
  s.eta = eta;
  s.n0 = n0;
  s.f_star = f_star;
  s.x_star = std::move(x_star);
  return s;
}

LyapunovSpec LyapunovSpec::strongly_convex(double mu, double psi, double f_star,
                                           Vec x_star) {
  if (!(mu > 0.0) || !(psi > 0.0)) {
    throw ContractViolation("lyapunov: strongly_convex needs mu > 0 and psi > 0");
  }
  LyapunovSpec s;
  s.kind = Kind::strongly_convex;
  s.a = std::sqrt(mu);
  s.b = 1.0 / psi;
  s.f_star = f_star;
  s.x_star = std::move(x_star);
  return s;
}

LyapunovSpec LyapunovSpec::non_convex(double alpha, double rho) {
  if (!(alpha > 0.0) || !(rho > 0.0)) {
    throw ContractViolation("lyapunov: non_convex needs alpha > 0 and rho > 0");
  }
  LyapunovSpec s;
  s.kind = Kind::non_convex;
  s.lambda = 1.0 / (alpha * rho * rho);
  return s;
}

EnsembleResult run_ensemble(const optim::OptimizerConfig& cfg,
                            const objectives::Differentiable& obj,
                            const noise::NoiseModel& noise_model,
                            const Vec& x0, const EnsembleOptions& opts,
                            const std::optional<LyapunovSpec>& lyapunov) {
  if (opts.runs < 2) throw ContractViolation("run_ensemble: runs must be >= 2");
  if (opts.iters < 1) throw ContractViolation("run_ensemble: iters must be >= 1");
  if (lyapunov) {
    if (cfg.final_gradient_step) {
      throw UnsupportedConfiguration(
          "run_ensemble: Lyapunov evaluation with a final gradient step");
    }
    if (lyapunov->kind != LyapunovSpec::Kind::non_convex && !lyapunov->x_star) {
      throw ContractViolation("run_ensemble: this Lyapunov kind needs a minimizer");
    }
  }

  const std::size_t len = static_cast<std::size_t>(opts.iters) + 1 +
                          (cfg.final_gradient_step ? 1 : 0);
  const int n_blocks = (opts.runs + kBlockRuns - 1) / kBlockRuns;
  std::vector<BlockAccum> blocks(static_cast<std::size_t>(n_blocks));

  std::atomic<int> next_block{0};
  auto worker = [&]() {
    for (;;) {
      const int bi = next_block.fetch_add(1);
      if (bi >= n_blocks) return;
      BlockAccum& acc = blocks[static_cast<std::size_t>(bi)];
      acc.init(len, lyapunov.has_value());
      const int lo = bi * kBlockRuns;
      const int hi = std::min(opts.runs, lo + kBlockRuns);
      for (int run = lo; run < hi; ++run) {
        acc.f_iter.count += 1;
        acc.f_query.count += 1;
        acc.grad_sq.count += 1;
        if (lyapunov) acc.lyap.count += 1;
        optim::drive(
            cfg, obj, noise_model, x0, opts.iters,
            RngStream::substream(opts.master_seed, static_cast<std::uint64_t>(run)),
            [&](const optim::StepRecord& r) {
              const std::size_t i = static_cast<std::size_t>(r.n);
              acc.f_iter.add(i, r.f_iterate);
              acc.f_query.add(i, r.f_query);
              acc.grad_sq.add(i, r.grad_sq_query);
              if (r.diverged) acc.diverged[i] += 1;
              if (lyapunov) acc.lyap.add(i, lyapunov_value(*lyapunov, r));
            });
      }
    }
  };

  int threads = opts.threads > 0
                    ? opts.threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n_blocks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Ordered reduction: block 0, 1, 2, ... regardless of which thread ran them.
  BlockAccum total;
  total.init(len, lyapunov.has_value());
  for (const BlockAccum& b : blocks) {
    total.f_iter.merge(b.f_iter);
    total.f_query.merge(b.f_query);
    total.grad_sq.merge(b.grad_sq);
    if (lyapunov) total.lyap.merge(b.lyap);
    for (std::size_t i = 0; i < len; ++i) total.diverged[i] += b.diverged[i];
  }

  const double runs = static_cast<double>(opts.runs);
  auto finish = [&](const SeriesAccum& a, std::vector<double>& mean,
                    std::vector<double>& sem) {
    mean = a.mean;
    sem.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const double var = a.m2[i] / (runs - 1.0);
      sem[i] = std::sqrt(std::max(var, 0.0) / runs);
    }
  };

  EnsembleResult result;
  EnsembleStats& st = result.stats;
  st.runs = opts.runs;
  st.iters = opts.iters;
  st.report = cfg.report;
  finish(total.f_iter, st.mean_f_iterate, st.sem_f_iterate);
  finish(total.f_query, st.mean_f_query, st.sem_f_query);
  finish(total.grad_sq, st.mean_grad_sq, st.sem_grad_sq);
  st.diverged_fraction.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    st.diverged_fraction[i] = static_cast<double>(total.diverged[i]) / runs;
  }
  if (cfg.report == optim::ReportPoint::iterate) {
    st.mean_f = st.mean_f_iterate;
    st.sem_f = st.sem_f_iterate;
  } else {
    st.mean_f = st.mean_f_query;
    st.sem_f = st.sem_f_query;
  }
  if (lyapunov) {
    LyapunovSeries series;
    series.kind = lyapunov->kind;
    finish(total.lyap, series.values, series.sems);
    result.lyapunov = std::move(series);
  }
  return result;
}

CheckReport check_lyapunov_monotone(const LyapunovSeries& series,
                                    std::optional<double> contraction,
                                    double sem_multiplier) {
  const double c = contraction.value_or(1.0);
  CheckReport report;
  for (std::size_t n = 0; n + 1 < series.values.size(); ++n) {
    const double lhs = series.values[n + 1];
    const double rhs = c * series.values[n] +
                       sem_multiplier * (series.sems[n + 1] + c * series.sems[n]) +
                       1e-12 * std::abs(series.values[n]);
    if (lhs > rhs) report.violations.push_back(static_cast<long>(n));
  }
  report.pass = report.violations.empty();
  return report;
}

CheckReport compare_to_bound(const std::vector<double>& mean,
                             const std::vector<double>& sem,
                             const std::vector<double>& bound,
                             double sem_multiplier) {
  if (mean.size() != sem.size()) {
    throw ContractViolation("compare_to_bound: mean/sem length mismatch");
  }
  CheckReport report;
  const std::size_t len = std::min(mean.size(), bound.size());
  for (std::size_t n = 0; n < len; ++n) {
    if (mean[n] - sem_multiplier * sem[n] > bound[n]) {
      report.violations.push_back(static_cast<long>(n));
    }
  }
  report.pass = report.violations.empty();
  return report;
}

CheckReport compare_to_bound(const EnsembleStats& stats,
                             const std::vector<double>& bound,
                             double sem_multiplier) {
  return compare_to_bound(stats.mean_f, stats.sem_f, bound, sem_multiplier);
}

double loglog_slope(const std::vector<double>& mean_f, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ContractViolation("loglog_slope: tail_fraction must be in (0, 1]");
  }
  // n = 0 has no log coordinate; the window is a tail of n = 1..N.
  const long n_max = static_cast<long>(mean_f.size()) - 1;
  if (n_max < 2) throw ContractViolation("loglog_slope: needs at least n = 1, 2");
  const long count = std::max<long>(2, static_cast<long>(std::ceil(tail_fraction * n_max)));
  const long first = n_max - count + 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (long n = first; n <= n_max; ++n) {
    const double f = mean_f[static_cast<std::size_t>(n)];
    if (!(f > 0.0)) {
      throw UndefinedSlopeError("loglog_slope: non-positive mean in the window");
    }
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(f);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(count);
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

double loglog_slope(const EnsembleStats& stats, double tail_fraction) {
  return loglog_slope(stats.mean_f, tail_fraction);
}

MinGrad min_grad_report(const EnsembleStats& stats) {
  MinGrad mg;
  mg.value = stats.mean_grad_sq.at(0);
  mg.index = 0;
  for (std::size_t n = 1; n < stats.mean_grad_sq.size(); ++n) {
    if (stats.mean_grad_sq[n] < mg.value) {
      mg.value = stats.mean_grad_sq[n];
      mg.index = static_cast<long>(n);
    }
  }
  return mg;
}

}  // namespace agneslab::analysis
