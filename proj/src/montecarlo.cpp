#include "mgst/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "mgst/errors.hpp"
#include "mgst/parallel.hpp"

namespace mgst::montecarlo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x = mean + L z with z standard normal from the replicate's stream.
void draw_point(RngStream& rng, std::span<const double> mean, std::span<const double> chol,
                int p, std::span<double> out) {
  for (int i = 0; i < p; ++i) out[i] = rng.normal();
  for (int i = p - 1; i >= 0; --i) {
    double s = mean[i];
    for (int j = 0; j <= i; ++j) s += chol[i * p + j] * out[j];
    out[i] = s;
  }
}

struct Transition {
  ConditionalKernel kernel;
  std::vector<double> chol;
};

// Per-replicate sequential state for the streaming engines.
struct Replicate {
  RngStream rng;
  ParamVector x;
};

void advance(std::vector<Replicate>& reps, int k, const ParamVector& theta,
             const CovMatrix& sigma1, const std::vector<Transition>& transitions, int p,
             int workers) {
  if (k == 0) {
    const std::vector<double> chol = sigma1.cholesky_factor();
    parallel_for(reps.size(), workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        draw_point(reps[i].rng, theta, chol, p, reps[i].x);
    });
  } else {
    const Transition& tr = transitions[k - 1];
    parallel_for(reps.size(), workers, [&](std::size_t lo, std::size_t hi) {
      ParamVector mean(p);
      for (std::size_t i = lo; i < hi; ++i) {
        mean = tr.kernel.conditional_mean(reps[i].x);
        draw_point(reps[i].rng, mean, tr.chol, p, reps[i].x);
      }
    });
  }
}

// Transitions share the B matrix and conditional covariance across
// hypothesis points, but the mean map depends on theta; build per theta.
std::vector<Transition> build_transitions_at(const ParamVector& theta, const DesignSpec& spec,
                                             std::span<const double> n_schedule) {
  std::vector<Transition> transitions;
  transitions.reserve(spec.K - 1);
  for (int k = 1; k < spec.K; ++k) {
    ConditionalKernel kernel(theta, spec.covariance_at(n_schedule[k - 1]),
                             spec.covariance_at(n_schedule[k]));
    std::vector<double> chol = kernel.conditional_cov().cholesky_factor();
    transitions.push_back(Transition{std::move(kernel), std::move(chol)});
  }
  return transitions;
}

void check_inputs(const DesignSpec& spec, std::span<const double> n_schedule,
                  const Options& opt) {
  spec.validate();
  if (static_cast<int>(n_schedule.size()) != spec.K)
    throw config_error("sample size schedule must have one entry per analysis");
  double prev = 0.0;
  for (double n : n_schedule) {
    if (!(n > prev)) throw config_error("sample sizes must be positive and strictly increasing");
    prev = n;
  }
  if (opt.replicates < 1) throw config_error("replicate count must be positive");
}

}  // namespace

SamplePaths make_paths(int p, long long n, std::uint64_t seed) {
  if (p < 1 || n < 1) throw config_error("paths need p >= 1 and n >= 1");
  SamplePaths paths;
  paths.p = p;
  paths.n = n;
  paths.seed = seed;
  paths.alive.assign(static_cast<std::size_t>(n), 1);
  paths.streams.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) paths.streams.emplace_back(seed, static_cast<std::uint64_t>(i));
  return paths;
}

void sample_stage(SamplePaths& paths, int k, const ParamVector& theta,
                  const CovMatrix* sigma_prev, const CovMatrix& sigma_curr) {
  if (k != static_cast<int>(paths.draws.size()) + 1)
    throw config_error("stages must be sampled in order starting at 1");
  if (static_cast<int>(theta.size()) != paths.p || sigma_curr.dim() != paths.p)
    throw config_error("sampling dimensions do not agree");
  const int p = paths.p;
  std::vector<double> stage(static_cast<std::size_t>(paths.n) * p,
                            std::numeric_limits<double>::quiet_NaN());
  if (k == 1) {
    const std::vector<double> chol = sigma_curr.cholesky_factor();
    for (long long i = 0; i < paths.n; ++i) {
      if (!paths.alive[i]) continue;
      draw_point(paths.streams[i], theta,
                 chol, p, std::span<double>(stage).subspan(static_cast<std::size_t>(i) * p, p));
    }
  } else {
    if (sigma_prev == nullptr) throw config_error("conditional sampling needs sigma_prev");
    ConditionalKernel kernel(theta, *sigma_prev, sigma_curr);
    const std::vector<double> chol = kernel.conditional_cov().cholesky_factor();
    const std::vector<double>& prev = paths.draws.back();
    for (long long i = 0; i < paths.n; ++i) {
      if (!paths.alive[i]) continue;
      std::span<const double> xprev(prev.data() + static_cast<std::size_t>(i) * p, p);
      ParamVector mean = kernel.conditional_mean(xprev);
      draw_point(paths.streams[i], mean, chol, p,
                 std::span<double>(stage).subspan(static_cast<std::size_t>(i) * p, p));
    }
  }
  paths.draws.push_back(std::move(stage));
}

Estimate estimate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                const ParamVector& theta, std::span<const double> n_schedule,
                                const Options& opt) {
  check_inputs(spec, n_schedule, opt);
  if (boundaries.stages() != spec.K)
    throw config_error("boundaries must have one entry per analysis");
  const int p = spec.p;
  const int K = spec.K;
  const long long n = opt.replicates;
  const SummaryStatistic& stat = *spec.statistic;
  std::vector<Transition> transitions = build_transitions_at(theta, spec, n_schedule);

  std::vector<long long> rejects(K, 0), accepts(K, 0);
  // Replicates are independent; chunks accumulate local counters merged in
  // chunk order afterwards (counts are exact integers, order irrelevant).
  const int nchunks = opt.workers < 1 ? 1 : opt.workers;
  std::vector<std::vector<long long>> rej_chunk(nchunks, std::vector<long long>(K, 0));
  std::vector<std::vector<long long>> acc_chunk(nchunks, std::vector<long long>(K, 0));
  const long long chunk = (n + nchunks - 1) / nchunks;
  parallel_for(static_cast<std::size_t>(nchunks), opt.workers,
               [&](std::size_t cbegin, std::size_t cend) {
                 ParamVector x(p), mean(p);
                 for (std::size_t c = cbegin; c < cend; ++c) {
                   const long long ibegin = static_cast<long long>(c) * chunk;
                   const long long iend = std::min(n, ibegin + chunk);
                   std::vector<double> chol1 = spec.covariance_at(n_schedule[0]).cholesky_factor();
                   for (long long i = ibegin; i < iend; ++i) {
                     RngStream rng(opt.seed, static_cast<std::uint64_t>(i));
                     for (int k = 0; k < K; ++k) {
                       if (k == 0) {
                         draw_point(rng, theta, chol1, p, x);
                       } else {
                         mean = transitions[k - 1].kernel.conditional_mean(x);
                         draw_point(rng, mean, transitions[k - 1].chol, p, x);
                       }
                       const Region region = region_of(boundaries, k + 1, stat.evaluate(x));
                       if (region == Region::Reject) {
                         ++rej_chunk[c][k];
                         break;
                       }
                       if (region == Region::Accept) {
                         ++acc_chunk[c][k];
                         break;
                       }
                     }
                   }
                 }
               });
  for (int c = 0; c < nchunks; ++c)
    for (int k = 0; k < K; ++k) {
      rejects[k] += rej_chunk[c][k];
      accepts[k] += acc_chunk[c][k];
    }

  Estimate est;
  est.reject.resize(K);
  est.accept.resize(K);
  est.reject_se.resize(K);
  est.accept_se.resize(K);
  const double dn = static_cast<double>(n);
  for (int k = 0; k < K; ++k) {
    const double pr = rejects[k] / dn;
    const double pa = accepts[k] / dn;
    est.reject[k] = pr;
    est.accept[k] = pa;
    est.reject_se[k] = std::sqrt(pr * (1.0 - pr) / dn);
    est.accept_se[k] = std::sqrt(pa * (1.0 - pa) / dn);
  }
  return est;
}

namespace {

// Order statistic such that roughly `count` of the m sorted values lie on
// the tail side of the returned value.
double upper_order_statistic(std::vector<double>& sorted, double count) {
  const auto m = static_cast<long long>(sorted.size());
  long long above = std::llround(count);
  above = std::clamp(above, 1LL, m);
  std::nth_element(sorted.begin(), sorted.begin() + (m - above), sorted.end());
  return sorted[m - above];
}

double lower_order_statistic(std::vector<double>& sorted, double count) {
  const auto m = static_cast<long long>(sorted.size());
  long long below = std::llround(count);
  below = std::clamp(below, 1LL, m - 1);
  // a sits just above `below` values: accept iff value < a.
  std::nth_element(sorted.begin(), sorted.begin() + below, sorted.end());
  return sorted[below];
}

}  // namespace

Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt) {
  check_inputs(spec, n_schedule, opt);
  if (static_cast<int>(targets.psi.size()) != spec.K ||
      static_cast<int>(targets.xi.size()) != spec.K)
    throw config_error("stage targets must have one entry per analysis");
  const int p = spec.p;
  const int K = spec.K;
  const long long n = opt.replicates;
  const double dn = static_cast<double>(n);
  const SummaryStatistic& stat = *spec.statistic;

  std::vector<Transition> null_tr = build_transitions_at(spec.theta0, spec, n_schedule);
  std::vector<Transition> alt_tr = build_transitions_at(spec.thetaA, spec, n_schedule);

  std::vector<Replicate> null_reps(static_cast<std::size_t>(n));
  std::vector<Replicate> alt_reps(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    null_reps[i].rng = RngStream(opt.seed, static_cast<std::uint64_t>(2 * i));
    null_reps[i].x.resize(p);
    alt_reps[i].rng = RngStream(opt.seed, static_cast<std::uint64_t>(2 * i + 1));
    alt_reps[i].x.resize(p);
  }
  const CovMatrix sigma1 = spec.covariance_at(n_schedule[0]);

  Boundaries out;
  out.a.resize(K);
  out.b.resize(K);
  out.realized_psi.resize(K);
  out.realized_xi.resize(K);

  std::vector<double> null_delta, alt_delta, scratch;
  for (int k = 0; k < K; ++k) {
    advance(null_reps, k, spec.theta0, sigma1, null_tr, p, opt.workers);
    advance(alt_reps, k, spec.thetaA, sigma1, alt_tr, p, opt.workers);
    const auto n0 = static_cast<long long>(null_reps.size());
    const auto na = static_cast<long long>(alt_reps.size());
    if (n0 < 10 || na < 10)
      throw insufficient_replicates("fewer than 10 replicates remain at analysis " +
                                    std::to_string(k + 1));

    null_delta.resize(null_reps.size());
    for (std::size_t i = 0; i < null_reps.size(); ++i)
      null_delta[i] = stat.evaluate(null_reps[i].x);
    alt_delta.resize(alt_reps.size());
    for (std::size_t i = 0; i < alt_reps.size(); ++i)
      alt_delta[i] = stat.evaluate(alt_reps[i].x);

    const bool survivor_scale = opt.mode == QuantileMode::survivor_fraction;
    double b = kInf;
    if (targets.psi[k] > 0.0) {
      const double count = targets.psi[k] * (survivor_scale ? static_cast<double>(n0) : dn);
      if (count < 10.0)
        throw insufficient_replicates("efficacy target at analysis " + std::to_string(k + 1) +
                                      " is not resolvable with the surviving replicates");
      scratch = null_delta;
      b = upper_order_statistic(scratch, count);
    }
    double a = -kInf;
    if (k == K - 1) {
      a = b;
    } else if (targets.xi[k] > 0.0) {
      const double count = targets.xi[k] * (survivor_scale ? static_cast<double>(na) : dn);
      if (count < 10.0)
        throw insufficient_replicates("futility target at analysis " + std::to_string(k + 1) +
                                      " is not resolvable with the surviving replicates");
      scratch = alt_delta;
      a = lower_order_statistic(scratch, count);
      if (a > b) a = b;
    }
    out.a[k] = a;
    out.b[k] = b;

    long long rej = 0, acc = 0;
    for (double d : null_delta) rej += d >= b ? 1 : 0;
    for (double d : alt_delta) acc += d < a ? 1 : 0;
    out.realized_psi[k] = rej / dn;
    out.realized_xi[k] = acc / dn;

    if (k + 1 < K) {
      // Cull both populations to the continuation interval [a, b).
      std::size_t keep = 0;
      for (std::size_t i = 0; i < null_reps.size(); ++i) {
        if (null_delta[i] >= a && null_delta[i] < b) {
          if (keep != i) null_reps[keep] = std::move(null_reps[i]);
          ++keep;
        }
      }
      null_reps.resize(keep);
      keep = 0;
      for (std::size_t i = 0; i < alt_reps.size(); ++i) {
        if (alt_delta[i] >= a && alt_delta[i] < b) {
          if (keep != i) alt_reps[keep] = std::move(alt_reps[i]);
          ++keep;
        }
      }
      alt_reps.resize(keep);
    }
  }
  return out;
}

}  // namespace mgst::montecarlo
