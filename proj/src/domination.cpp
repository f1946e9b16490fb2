#include "renewal/domination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "renewal/parallel.hpp"
#include "renewal/rng.hpp"
#include "renewal/simulate.hpp"

namespace renewal {

namespace {

void require_walk_parameter(double p) {
  if (!(p > 0.5 && p < 1.0)) {
    throw ValidationError("random-walk parameter p = " + std::to_string(p) +
                          " outside (1/2, 1): the generating function F(s) of first "
                          "returns needs a walk drifting to 0");
  }
}

double binomial_se(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------------------

DominatingSequence::DominatingSequence(std::vector<double> g, std::optional<double> tail_bound)
    : g_(std::move(g)), tail_bound_(tail_bound) {
  if (g_.empty()) throw ValidationError("dominating sequence must be nonempty");
  for (std::size_t n = 0; n < g_.size(); ++n) {
    if (!(g_[n] >= 0.0) || !std::isfinite(g_[n])) {
      throw ValidationError("dominating sequence entry G_" + std::to_string(n) +
                            " is negative or not finite");
    }
    if (n > 0 && g_[n] > g_[n - 1]) {
      throw ValidationError("dominating sequence increases at n = " + std::to_string(n));
    }
    m_partial_ += g_[n];
  }
  if (tail_bound_ && !(*tail_bound_ >= 0.0)) {
    throw ValidationError("dominating sequence tail bound must be nonnegative");
  }
}

double DominatingSequence::at(Time n) const {
  if (n <= 0) return g_.front();
  const auto i = static_cast<std::size_t>(n);
  return i < g_.size() ? g_[i] : g_.back();
}

double DominatingSequence::m() const {
  if (!tail_bound_) throw ValidationError("dominating sequence has no tail certificate");
  return m_partial_ + *tail_bound_;
}

std::vector<double> first_return_coefficients(double p, std::size_t n) {
  require_walk_parameter(p);
  const double pq = p * (1.0 - p);
  const double scale = 1.0 / (2.0 * (1.0 - p));
  std::vector<double> f(n + 1, 0.0);
  // c_k = C(2k,k)/(2k-1) (pq)^k, c_{k+1} = c_k * 2(2k-1)/(k+1) * pq.
  double c = 2.0 * pq;
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    f[2 * k] = c * scale;
    c *= 2.0 * (2.0 * static_cast<double>(k) - 1.0) / (static_cast<double>(k) + 1.0) * pq;
  }
  return f;
}

DominatingSequence random_walk_domination(double p, std::size_t n) {
  require_walk_parameter(p);
  // Extra coefficients for the tail certificate below.
  const auto f = first_return_coefficients(p, n + 3);
  std::vector<double> g(n + 1);
  double partial = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    partial += f[i];
    g[i] = std::max(0.0, 1.0 - partial) / p;
  }

  // sum_{i>N} G_i = (1/p) sum_{k>N+1} (k-N-1) f_k. Even coefficients satisfy
  // f_{2k+2}/f_{2k} = 2(2k-1)/(k+1) pq < 4pq = r, so from the first even
  // index 2K > N+1 the sum is at most f_{2K} (a/(1-r) + 2r/(1-r)^2) with
  // a = 2K - N - 1.
  const double r = 4.0 * p * (1.0 - p);
  const std::size_t idx = (n + 2) % 2 == 0 ? n + 2 : n + 3;
  const double fk = f[idx];
  const double a = static_cast<double>(idx) - static_cast<double>(n) - 1.0;
  const double tail = fk * (a / (1.0 - r) + 2.0 * r / ((1.0 - r) * (1.0 - r))) / p;
  return DominatingSequence(std::move(g), tail);
}

bool domination_valid_for(double p, double alpha_sup_product) {
  // Relative slack absorbs rounding in p(1-p), e.g. 0.6*0.4 vs 0.24.
  return p * (1.0 - p) >= alpha_sup_product * (1.0 - 1e-15);
}

// ---------------------------------------------------------------------------

RenewalTailSurface estimate_renewal_tails(const KernelSchedule& schedule,
                                          std::span<const Time> t_grid,
                                          std::span<const State> x_grid, std::size_t max_n,
                                          std::size_t n_paths, std::uint64_t seed,
                                          unsigned workers) {
  const auto& space = schedule.space();
  for (State x : x_grid) {
    if (!space.in_target(x)) {
      throw ValidationError("renewal tails: start state " + std::to_string(x) +
                            " is not in the target set");
    }
  }
  if (t_grid.empty() || x_grid.empty()) throw ValidationError("renewal tails: empty grid");
  if (n_paths == 0) throw ValidationError("renewal tails: n_paths must be positive");
  const CompiledSchedule compiled(schedule);

  RenewalTailSurface s;
  s.t_grid.assign(t_grid.begin(), t_grid.end());
  s.x_grid.assign(x_grid.begin(), x_grid.end());
  s.max_n = max_n;
  s.n_paths = n_paths;
  s.g_hat.resize(t_grid.size());
  s.G_hat.resize(t_grid.size());
  s.se.resize(t_grid.size());

  const std::size_t overflow = max_n + 1;
  std::vector<std::size_t> gaps(n_paths);
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const Time t0 = t_grid[ti];
    if (t0 < 0) throw ValidationError("renewal tails: negative start time");
    s.g_hat[ti].resize(x_grid.size());
    for (std::size_t xi = 0; xi < x_grid.size(); ++xi) {
      const std::uint64_t point_seed = mix_seed(mix_seed(seed, ti), xi);
      parallel_for(n_paths, workers, [&](std::size_t i) {
        Rng rng(mix_seed(point_seed, i));
        State x = x_grid[xi];
        std::size_t gap = overflow;
        for (std::size_t k = 1; k <= max_n; ++k) {
          x = compiled.at(t0 + static_cast<Time>(k) - 1).sample(x, rng.uniform());
          if (space.in_target(x)) {
            gap = k;
            break;
          }
        }
        gaps[i] = gap;
      });
      std::vector<double> g(max_n + 2, 0.0);
      for (auto gap : gaps) g[gap] += 1.0;
      for (auto& v : g) v /= static_cast<double>(n_paths);
      s.g_hat[ti][xi] = std::move(g);
    }

    // G^_n = sum_{k>n} max_x g^_k(x). Split by arg-max state: each part is
    // a sub-sum of one multinomial sample, and samples of different x are
    // independent, so var = sum_x P_x(1-P_x)/n_paths.
    const std::size_t nx = x_grid.size();
    std::vector<std::size_t> argmax(max_n + 2, 0);
    for (std::size_t k = 1; k <= overflow; ++k) {
      for (std::size_t xi = 1; xi < nx; ++xi) {
        if (s.g_hat[ti][xi][k] > s.g_hat[ti][argmax[k]][k]) argmax[k] = xi;
      }
    }
    s.G_hat[ti].assign(max_n + 1, 0.0);
    s.se[ti].assign(max_n + 1, 0.0);
    std::vector<double> part(nx, 0.0);
    for (std::size_t n = max_n + 1; n-- > 0;) {
      // Add bucket k = n+1 to the running sums for "k > n".
      const std::size_t k = n + 1;
      part[argmax[k]] += s.g_hat[ti][argmax[k]][k];
      double total = 0.0;
      double var = 0.0;
      for (double px : part) {
        total += px;
        var += std::max(0.0, px * (1.0 - px)) / static_cast<double>(n_paths);
      }
      s.G_hat[ti][n] = total;
      s.se[ti][n] = std::sqrt(var);
    }
  }
  return s;
}

ConditionAReport check_condition_A(const RenewalTailSurface& surface,
                                   const DominatingSequence& g) {
  ConditionAReport report;
  const std::size_t last = std::min(surface.max_n, g.last_index());
  for (std::size_t ti = 0; ti < surface.t_grid.size(); ++ti) {
    for (std::size_t n = 0; n <= last; ++n) {
      ++report.checked;
      const double gh = surface.G_hat[ti][n];
      const double se = surface.se[ti][n];
      const double gn = g.at(static_cast<Time>(n));
      if (gh - 3.0 * se > gn) {
        report.flags.push_back({surface.t_grid[ti], n, gh, se, gn});
      }
    }
  }
  report.pass = report.flags.empty();
  return report;
}

// ---------------------------------------------------------------------------

double gamma0(double alpha_inf, double beta_inf) {
  for (double v : {alpha_inf, beta_inf}) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw ValidationError("gamma0 needs inf_t alpha_t0 and inf_t beta_t0 in (0,1], got " +
                            std::to_string(v));
    }
  }
  return std::min(alpha_inf, beta_inf);
}

RegularityCertificate gamma_analytic(double g0, double mu_hat) {
  if (!(g0 > 0.0 && g0 <= 1.0)) throw ValidationError("gamma_analytic: gamma0 outside (0,1]");
  if (!(mu_hat >= 1.0) || !std::isfinite(mu_hat)) {
    throw ValidationError("gamma_analytic: mu_hat must be a finite value >= 1");
  }
  RegularityCertificate c;
  c.gamma = std::pow(g0, mu_hat / g0);
  c.n0 = 0;
  c.provenance = AnalyticGamma{g0, mu_hat};
  if (!(c.gamma > 0.0)) throw ValidationError("gamma_analytic: gamma underflows to 0");
  return c;
}

GammaEstimate estimate_gamma(const KernelSchedule& schedule, std::span<const double> initial,
                             const GammaGrid& grid, std::size_t n_paths, std::uint64_t seed,
                             unsigned workers) {
  if (grid.t_grid.empty() || grid.lag_grid.empty()) {
    throw ValidationError("estimate_gamma: grids must be nonempty");
  }
  if (grid.n0 < 0) throw ValidationError("estimate_gamma: n0 must be >= 0");
  if (n_paths == 0) throw ValidationError("estimate_gamma: n_paths must be positive");
  const auto problems = validate_distribution(initial, schedule.space().size());
  if (!problems.empty()) throw ValidationError(problems.front());
  const CompiledSchedule compiled(schedule);
  const auto& space = schedule.space();

  std::vector<Time> bases;
  std::vector<Time> lags;
  for (Time b : grid.t_grid) {
    if (b < 0) throw ValidationError("estimate_gamma: negative base time");
    if (grid.swapped || b >= grid.n0) bases.push_back(b);
  }
  for (Time l : grid.lag_grid) {
    if (l < 0) throw ValidationError("estimate_gamma: negative lag");
    if (!grid.swapped || l >= grid.n0) lags.push_back(l);
  }
  if (bases.empty() || lags.empty()) {
    throw ValidationError("estimate_gamma: no grid point satisfies the n0 restriction");
  }
  Time end = 0;
  for (Time b : bases) {
    for (Time l : lags) end = std::max(end, b + l);
  }

  // Integer counts summed over fixed blocks of paths: order-independent.
  const std::size_t blocks = std::min<std::size_t>(n_paths, 64);
  const std::size_t npts = bases.size() * lags.size();
  std::vector<std::vector<std::size_t>> cond(blocks, std::vector<std::size_t>(npts, 0));
  std::vector<std::vector<std::size_t>> hit(blocks, std::vector<std::size_t>(npts, 0));
  parallel_for(blocks, workers, [&](std::size_t blk) {
    std::vector<char> in_c(static_cast<std::size_t>(end) + 1);
    const std::size_t lo = n_paths * blk / blocks;
    const std::size_t hi = n_paths * (blk + 1) / blocks;
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(mix_seed(seed, i));
      State x = sample_from(initial, rng.uniform());
      in_c[0] = space.in_target(x);
      for (Time t = 0; t < end; ++t) {
        x = compiled.at(t).sample(x, rng.uniform());
        in_c[static_cast<std::size_t>(t) + 1] = space.in_target(x);
      }
      for (std::size_t bi = 0; bi < bases.size(); ++bi) {
        if (!in_c[static_cast<std::size_t>(bases[bi])]) continue;
        for (std::size_t li = 0; li < lags.size(); ++li) {
          const std::size_t id = bi * lags.size() + li;
          ++cond[blk][id];
          if (in_c[static_cast<std::size_t>(bases[bi] + lags[li])]) ++hit[blk][id];
        }
      }
    }
  });

  GammaEstimate est;
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t bi = 0; bi < bases.size(); ++bi) {
    for (std::size_t li = 0; li < lags.size(); ++li) {
      const std::size_t id = bi * lags.size() + li;
      GammaPoint pt;
      pt.base = bases[bi];
      pt.lag = lags[li];
      for (std::size_t blk = 0; blk < blocks; ++blk) {
        pt.conditioned += cond[blk][id];
        pt.hits += hit[blk][id];
      }
      if (pt.conditioned == 0) {
        pt.flagged = true;
        ++est.flagged;
      } else {
        pt.p_hat = static_cast<double>(pt.hits) / static_cast<double>(pt.conditioned);
        pt.se = binomial_se(pt.p_hat, pt.conditioned);
        gmin = std::min(gmin, pt.lower());
      }
      est.points.push_back(pt);
    }
  }
  est.gamma_hat = std::isfinite(gmin) ? gmin : 1.0;
  if (est.flagged == 0 && est.gamma_hat > 0.0) {
    RegularityCertificate c;
    c.gamma = std::min(1.0, est.gamma_hat);
    c.n0 = grid.n0;
    c.provenance = EmpiricalGamma{grid.t_grid, grid.lag_grid, n_paths, grid.swapped, gmin};
    est.certificate = c;
  }
  return est;
}

}  // namespace renewal
