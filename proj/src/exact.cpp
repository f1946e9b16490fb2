#include "renewal/exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <deque>
#include <numeric>

namespace renewal {

namespace {

using Mask = std::vector<char>;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

/// Pushes v one step through k and removes (returns) the mass landing in the
/// target.
double step(const SparseKernel& k, const Mask& target, std::vector<double>& v,
            std::vector<double>& scratch) {
  std::fill(scratch.begin(), scratch.end(), 0.0);
  for (std::size_t x = 0; x < v.size(); ++x) {
    const double w = v[x];
    if (w == 0.0) continue;
    const auto to = k.targets(static_cast<State>(x));
    const auto pr = k.probs(static_cast<State>(x));
    for (std::size_t i = 0; i < to.size(); ++i) scratch[to[i]] += w * pr[i];
  }
  double hit = 0.0;
  for (std::size_t y = 0; y < scratch.size(); ++y) {
    if (target[y]) {
      hit += scratch[y];
      scratch[y] = 0.0;
    }
  }
  v.swap(scratch);
  return hit;
}

struct Run {
  std::vector<double> hits;      // hits[n] for n = 1..horizon (hits[0] unused)
  std::vector<double> survival;  // survival[n] = mass not yet absorbed at time n
  std::vector<double> v;         // unabsorbed mass at the horizon
};

Run run_absorbing(const CompiledSchedule& s, const Mask& target, std::vector<double> v0,
                  Time horizon) {
  Run run;
  run.hits.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  run.survival.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  run.v = std::move(v0);
  std::vector<double> scratch(run.v.size());
  run.survival[0] = sum(run.v);
  for (Time t = 0; t < horizon; ++t) {
    const auto n = static_cast<std::size_t>(t) + 1;
    run.hits[n] = step(s.at(t), target, run.v, scratch);
    run.survival[n] = sum(run.v);
  }
  return run;
}

/// Bracket for sum_{n>=0} P{survive past n} given the exact sum `lower`
/// over n < t and the unabsorbed mass v at time t.
///
/// Past the body the kernel is periodic with period p. Blocks of length
/// L = k*p starting at t' = max(t, T0) all begin at the same phase, so if
/// rho bounds the probability of surviving a block from any state the
/// chain can occupy at a block start, the remaining sum is at most
/// r * L / (1 - rho) with r the mass alive at t'.
ExpectationBracket certify(const CompiledSchedule& s, const Mask& target, std::vector<double> v,
                           Time t, double lower) {
  std::vector<double> scratch(v.size());
  while (t < s.tail_start()) {
    lower += sum(v);
    step(s.at(t), target, v, scratch);
    ++t;
  }
  ExpectationBracket b;
  const double r = sum(v);
  if (r == 0.0) {
    b.lower = b.upper = lower;
    return b;
  }
  b.lower = lower;

  const std::size_t n = s.size();
  const std::size_t per = s.period();
  const std::size_t phase0 = static_cast<std::size_t>(t) % per;
  auto node = [n](std::size_t phase, std::size_t x) { return phase * n + x; };

  // (phase, state) pairs reachable without absorption.
  Mask reachable(per * n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t x = 0; x < n; ++x) {
    if (v[x] > 0.0) {
      reachable[node(phase0, x)] = 1;
      queue.push_back(node(phase0, x));
    }
  }
  // Reverse edges among non-target nodes, and nodes with a direct hit.
  std::vector<std::vector<std::size_t>> reverse(per * n);
  Mask good(per * n, 0);
  std::deque<std::size_t> good_queue;
  for (std::size_t ph = 0; ph < per; ++ph) {
    const auto& k = s.tail()[ph];
    const std::size_t next = (ph + 1) % per;
    for (std::size_t x = 0; x < n; ++x) {
      if (target[x]) continue;
      for (State y : k.targets(static_cast<State>(x))) {
        if (target[y]) {
          if (!good[node(ph, x)]) {
            good[node(ph, x)] = 1;
            good_queue.push_back(node(ph, x));
          }
        } else {
          reverse[node(next, y)].push_back(node(ph, x));
        }
      }
    }
  }
  while (!good_queue.empty()) {
    const auto id = good_queue.front();
    good_queue.pop_front();
    for (auto pred : reverse[id]) {
      if (!good[pred]) {
        good[pred] = 1;
        good_queue.push_back(pred);
      }
    }
  }
  while (!queue.empty()) {
    const auto id = queue.front();
    queue.pop_front();
    const std::size_t ph = id / n;
    const auto& k = s.tail()[ph];
    const std::size_t next = (ph + 1) % per;
    for (State y : k.targets(static_cast<State>(id % n))) {
      if (target[y] || reachable[node(next, y)]) continue;
      reachable[node(next, y)] = 1;
      queue.push_back(node(next, y));
    }
  }
  for (std::size_t id = 0; id < per * n; ++id) {
    if (reachable[id] && !good[id]) {
      b.infinite = true;
      return b;
    }
  }

  // u[ph][x] = P{survive k steps | start at phase ph in x}.
  std::vector<std::vector<double>> u(per, std::vector<double>(n));
  for (auto& row : u) {
    for (std::size_t x = 0; x < n; ++x) row[x] = target[x] ? 0.0 : 1.0;
  }
  auto next_u = u;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t k_max = n * per;
  for (std::size_t k = 1; k <= k_max && static_cast<double>(k) < best; ++k) {
    for (std::size_t ph = 0; ph < per; ++ph) {
      const auto& ker = s.tail()[ph];
      const auto& later = u[(ph + 1) % per];
      for (std::size_t x = 0; x < n; ++x) {
        if (target[x]) continue;
        const auto to = ker.targets(static_cast<State>(x));
        const auto pr = ker.probs(static_cast<State>(x));
        double acc = 0.0;
        for (std::size_t i = 0; i < to.size(); ++i) acc += pr[i] * later[to[i]];
        next_u[ph][x] = acc;
      }
    }
    u.swap(next_u);
    if (k % per != 0) continue;
    double rho = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      if (reachable[node(phase0, x)]) rho = std::max(rho, u[phase0][x]);
    }
    if (rho < 1.0) best = std::min(best, static_cast<double>(k) / (1.0 - rho));
  }
  if (best < std::numeric_limits<double>::infinity()) b.upper = lower + r * best;
  return b;
}

Mask target_mask(const StateSpace& space) {
  Mask m(space.size(), 0);
  for (State x : space.target_set()) m[x] = 1;
  return m;
}

void require_distribution(std::span<const double> initial, std::size_t size) {
  auto problems = validate_distribution(initial, size);
  if (!problems.empty()) throw ValidationError(problems.front());
}

SparseKernel kron(const SparseKernel& a, const SparseKernel& b) {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  std::vector<std::uint32_t> offsets{0};
  std::vector<State> cols;
  std::vector<double> probs;
  offsets.reserve(na * nb + 1);
  for (std::size_t x = 0; x < na; ++x) {
    for (std::size_t y = 0; y < nb; ++y) {
      const auto ta = a.targets(static_cast<State>(x));
      const auto pa = a.probs(static_cast<State>(x));
      const auto tb = b.targets(static_cast<State>(y));
      const auto pb = b.probs(static_cast<State>(y));
      for (std::size_t i = 0; i < ta.size(); ++i) {
        for (std::size_t j = 0; j < tb.size(); ++j) {
          cols.push_back(static_cast<State>(ta[i] * nb + tb[j]));
          probs.push_back(pa[i] * pb[j]);
        }
      }
      offsets.push_back(static_cast<std::uint32_t>(cols.size()));
    }
  }
  return SparseKernel(na * nb, std::move(offsets), std::move(cols), std::move(probs));
}

}  // namespace

double DistributionTable::total() const { return sum(mass) + residual; }

HittingTime hitting_time_distribution(const KernelSchedule& schedule,
                                      std::span<const double> initial, Time horizon) {
  if (horizon < 1) throw ValidationError("hitting_time_distribution: horizon must be >= 1");
  require_distribution(initial, schedule.space().size());
  const CompiledSchedule s(schedule);
  const Mask target = target_mask(schedule.space());

  std::vector<double> v(initial.begin(), initial.end());
  double at_zero = 0.0;
  for (std::size_t x = 0; x < v.size(); ++x) {
    if (target[x]) {
      at_zero += v[x];
      v[x] = 0.0;
    }
  }
  Run run = run_absorbing(s, target, std::move(v), horizon);

  HittingTime out;
  out.table.mass = std::move(run.hits);
  out.table.mass[0] = at_zero;
  out.table.residual = run.survival.back();
  double lower = 0.0;
  for (Time k = 0; k < horizon; ++k) lower += run.survival[static_cast<std::size_t>(k)];
  out.expectation = certify(s, target, std::move(run.v), horizon, lower);
  return out;
}

std::vector<double> expected_hitting_times_linear(const Matrix& p, const StateSpace& space) {
  const std::size_t n = space.size();
  if (p.rows() != n || p.cols() != n) throw ValidationError("kernel shape does not match space");
  std::vector<std::size_t> outside;
  for (std::size_t x = 0; x < n; ++x) {
    if (!space.in_target(static_cast<State>(x))) outside.push_back(x);
  }
  std::vector<double> h(n, 0.0);
  if (outside.empty()) return h;
  const auto m = static_cast<Eigen::Index>(outside.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      a(i, j) -= p(outside[static_cast<std::size_t>(i)], outside[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw ValidationError("target set is not reachable from every state");
  const Eigen::VectorXd sol = lu.solve(Eigen::VectorXd::Ones(m));
  for (Eigen::Index i = 0; i < m; ++i) h[outside[static_cast<std::size_t>(i)]] = sol(i);
  return h;
}

CompiledSchedule product_schedule(const CompiledSchedule& a, const CompiledSchedule& b) {
  const Time body_len = std::max(a.tail_start(), b.tail_start());
  std::vector<SparseKernel> body;
  for (Time t = 0; t < body_len; ++t) body.push_back(kron(a.at(t), b.at(t)));
  const std::size_t period = std::lcm(a.period(), b.period());
  std::vector<SparseKernel> tail;
  for (std::size_t ph = 0; ph < period; ++ph) {
    tail.push_back(kron(a.tail()[ph % a.period()], b.tail()[ph % b.period()]));
  }
  return CompiledSchedule(a.size() * b.size(), std::move(body), std::move(tail));
}

JointTail product_tail(const KernelSchedule& schedule1, const KernelSchedule& schedule2,
                       std::span<const double> initial1, std::span<const double> initial2,
                       Time horizon, std::size_t product_cap) {
  if (horizon < 1) throw ValidationError("product_tail: horizon must be >= 1");
  require_distribution(initial1, schedule1.space().size());
  require_distribution(initial2, schedule2.space().size());
  const std::size_t n1 = schedule1.space().size();
  const std::size_t n2 = schedule2.space().size();
  if (n1 * n2 > product_cap) {
    throw ValidationError("product state count " + std::to_string(n1 * n2) +
                          " exceeds cap " + std::to_string(product_cap));
  }
  const CompiledSchedule joint =
      product_schedule(CompiledSchedule(schedule1), CompiledSchedule(schedule2));
  Mask target(n1 * n2, 0);
  for (State x : schedule1.space().target_set()) {
    for (State y : schedule2.space().target_set()) target[x * n2 + y] = 1;
  }
  // T > 0 by definition: no absorption at time 0.
  std::vector<double> v(n1 * n2);
  for (std::size_t x = 0; x < n1; ++x) {
    for (std::size_t y = 0; y < n2; ++y) v[x * n2 + y] = initial1[x] * initial2[y];
  }
  Run run = run_absorbing(joint, target, std::move(v), horizon);

  JointTail out;
  out.survival = std::move(run.survival);
  out.residual = out.survival.back();
  double lower = 0.0;
  for (Time k = 0; k < horizon; ++k) lower += out.survival[static_cast<std::size_t>(k)];
  out.expectation = certify(joint, target, std::move(run.v), horizon, lower);
  return out;
}

}  // namespace renewal
