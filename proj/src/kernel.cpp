#include "renewal/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace renewal {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void check_matrix(const Matrix& m, std::size_t n, const std::string& label,
                  std::vector<std::string>& out) {
  if (m.rows() != n || m.cols() != n) {
    out.push_back(label + ": shape " + std::to_string(m.rows()) + "x" +
                  std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                  std::to_string(n));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    bool bad_entry = false;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v)) {
        out.push_back(label + ": non-finite entry at (" + std::to_string(i) + ", " +
                      std::to_string(j) + ")");
        bad_entry = true;
      } else if (v < 0.0) {
        out.push_back(label + ": negative entry " + fmt_double(v) + " at (" +
                      std::to_string(i) + ", " + std::to_string(j) + ")");
        bad_entry = true;
      } else if (v > 1.0) {
        out.push_back(label + ": entry " + fmt_double(v) + " above 1 at (" +
                      std::to_string(i) + ", " + std::to_string(j) + ")");
        bad_entry = true;
      }
      sum += v;
    }
    if (!bad_entry && std::abs(sum - 1.0) > kRowSumTolerance) {
      out.push_back(label + ": row " + std::to_string(i) + " sums to " + fmt_double(sum));
    }
  }
}

const std::vector<double>& checked_profile(const std::vector<double>& p) {
  if (p.empty()) throw ValidationError("birth-death alpha profile is empty");
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ValidationError("ragged matrix: row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) + " entries, expected " +
                            std::to_string(cols));
    }
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

// ---------------------------------------------------------------------------

StateSpace::StateSpace(std::size_t size, std::vector<State> target_set)
    : size_(size), target_(std::move(target_set)), mask_(size, 0) {
  if (size_ == 0) throw ValidationError("state space must have at least one state");
  if (target_.empty()) throw ValidationError("target set C must be nonempty");
  std::sort(target_.begin(), target_.end());
  target_.erase(std::unique(target_.begin(), target_.end()), target_.end());
  for (State x : target_) {
    if (x >= size_) {
      throw ValidationError("target state " + std::to_string(x) + " outside 0.." +
                            std::to_string(size_ - 1));
    }
    mask_[x] = 1;
  }
}

// ---------------------------------------------------------------------------

KernelSchedule::KernelSchedule(StateSpace space, std::vector<Matrix> body, TailKind kind,
                               std::vector<Matrix> tail)
    : space_(std::move(space)), body_(std::move(body)), kind_(kind), tail_(std::move(tail)) {
  if (tail_.empty()) throw ValidationError("kernel schedule tail must hold at least one matrix");
  if (kind_ == TailKind::Constant && tail_.size() != 1) {
    throw ValidationError("constant tail must hold exactly one matrix");
  }
}

KernelSchedule KernelSchedule::constant(StateSpace space, Matrix p) {
  std::vector<Matrix> tail;
  tail.push_back(std::move(p));
  return KernelSchedule(std::move(space), {}, TailKind::Constant, std::move(tail));
}

const Matrix& KernelSchedule::kernel_at(Time t) const {
  if (t < 0) throw ValidationError("kernel_at: negative time index");
  if (t < tail_start()) return body_[static_cast<std::size_t>(t)];
  return tail_[static_cast<std::size_t>(t) % tail_.size()];
}

std::vector<std::string> validate_schedule(const KernelSchedule& schedule) {
  std::vector<std::string> out;
  const std::size_t n = schedule.space().size();
  for (std::size_t i = 0; i < schedule.body().size(); ++i) {
    check_matrix(schedule.body()[i], n, "body[" + std::to_string(i) + "]", out);
  }
  for (std::size_t i = 0; i < schedule.tail().size(); ++i) {
    check_matrix(schedule.tail()[i], n, "tail[" + std::to_string(i) + "]", out);
  }
  return out;
}

void require_valid(const KernelSchedule& schedule) {
  auto problems = validate_schedule(schedule);
  if (problems.empty()) return;
  std::string msg = "invalid kernel schedule: " + problems.front();
  if (problems.size() > 1) msg += " (+" + std::to_string(problems.size() - 1) + " more)";
  throw ValidationError(msg);
}

std::vector<std::string> validate_distribution(std::span<const double> initial,
                                               std::size_t size) {
  std::vector<std::string> out;
  if (initial.size() != size) {
    out.push_back("initial distribution has " + std::to_string(initial.size()) +
                  " entries, expected " + std::to_string(size));
    return out;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    if (!(initial[i] >= 0.0) || !std::isfinite(initial[i])) {
      out.push_back("initial distribution entry " + std::to_string(i) + " is " +
                    fmt_double(initial[i]));
    }
    sum += initial[i];
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    out.push_back("initial distribution sums to " + fmt_double(sum));
  }
  return out;
}

// ---------------------------------------------------------------------------

double BirthDeathSpec::alpha(Time t, std::size_t j) const {
  const std::vector<double>* profile = nullptr;
  if (t < static_cast<Time>(body.size())) {
    profile = &body[static_cast<std::size_t>(t)];
  } else {
    profile = &tail[static_cast<std::size_t>(t) % tail.size()];
  }
  const auto& p = checked_profile(*profile);
  return j < p.size() ? p[j] : p.back();
}

std::vector<const std::vector<double>*> BirthDeathSpec::profiles() const {
  std::vector<const std::vector<double>*> out;
  for (const auto& p : body) out.push_back(&p);
  for (const auto& p : tail) out.push_back(&p);
  return out;
}

double BirthDeathSpec::inf_alpha0() const {
  double inf = 1.0;
  for (const auto* p : profiles()) inf = std::min(inf, checked_profile(*p).front());
  return inf;
}

double BirthDeathSpec::sup_alpha_product() const {
  double sup = 0.0;
  for (const auto* p : profiles()) {
    const auto& prof = checked_profile(*p);
    // Entries past the profile repeat the last value; state cap reflects.
    const std::size_t n = std::min(prof.size(), cap);
    for (std::size_t j = 0; j < n; ++j) sup = std::max(sup, prof[j] * (1.0 - prof[j]));
  }
  return sup;
}

KernelSchedule birth_death_schedule(const BirthDeathSpec& spec) {
  if (spec.cap < 2) throw ValidationError("birth-death truncation level must be >= 2");
  if (spec.tail.empty()) throw ValidationError("birth-death spec needs a tail profile");
  if (spec.tail_kind == TailKind::Constant && spec.tail.size() != 1) {
    throw ValidationError("constant birth-death tail must hold exactly one profile");
  }
  for (const auto* p : spec.profiles()) {
    for (double a : checked_profile(*p)) {
      if (!(a > 0.0 && a < 1.0)) {
        throw ValidationError("birth-death alpha " + fmt_double(a) + " outside (0,1)");
      }
    }
  }

  const std::size_t n = spec.cap + 1;
  auto build = [&](const std::vector<double>& profile) {
    Matrix m(n, n);
    auto a = [&](std::size_t j) { return j < profile.size() ? profile[j] : profile.back(); };
    m(0, 0) = a(0);
    m(0, 1) = 1.0 - a(0);
    for (std::size_t j = 1; j < spec.cap; ++j) {
      m(j, j - 1) = a(j);
      m(j, j + 1) = 1.0 - a(j);
    }
    m(spec.cap, spec.cap - 1) = 1.0;
    return m;
  };

  std::vector<Matrix> body;
  std::vector<Matrix> tail;
  for (const auto& p : spec.body) body.push_back(build(p));
  for (const auto& p : spec.tail) tail.push_back(build(p));
  return KernelSchedule(StateSpace(n, {0}), std::move(body), spec.tail_kind, std::move(tail));
}

// ---------------------------------------------------------------------------

SparseKernel::SparseKernel(const Matrix& m) {
  offsets_.reserve(m.rows() + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) > 0.0) {
        cols_.push_back(static_cast<State>(j));
        probs_.push_back(m(i, j));
      }
    }
    offsets_.push_back(static_cast<std::uint32_t>(cols_.size()));
  }
  cumulative_.resize(probs_.size());
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    double acc = 0.0;
    for (auto k = offsets_[i]; k < offsets_[i + 1]; ++k) cumulative_[k] = (acc += probs_[k]);
  }
}

SparseKernel::SparseKernel(std::size_t n, std::vector<std::uint32_t> offsets,
                           std::vector<State> cols, std::vector<double> probs)
    : offsets_(std::move(offsets)), cols_(std::move(cols)), probs_(std::move(probs)) {
  if (offsets_.size() != n + 1) throw ValidationError("sparse kernel: bad offsets");
  cumulative_.resize(probs_.size());
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (auto k = offsets_[i]; k < offsets_[i + 1]; ++k) cumulative_[k] = (acc += probs_[k]);
  }
}

State SparseKernel::sample(State x, double u) const {
  const auto begin = cumulative_.begin() + offsets_[x];
  const auto end = cumulative_.begin() + offsets_[x + 1];
  // Row sums may fall a hair short of 1; the last support point absorbs it.
  auto it = std::upper_bound(begin, end, u);
  if (it == end) --it;
  return cols_[static_cast<std::size_t>(it - cumulative_.begin())];
}

CompiledSchedule::CompiledSchedule(const KernelSchedule& schedule)
    : size_(schedule.space().size()) {
  require_valid(schedule);
  body_.reserve(schedule.body().size());
  for (const auto& m : schedule.body()) body_.emplace_back(m);
  tail_.reserve(schedule.tail().size());
  for (const auto& m : schedule.tail()) tail_.emplace_back(m);
}

CompiledSchedule::CompiledSchedule(std::size_t size, std::vector<SparseKernel> body,
                                   std::vector<SparseKernel> tail)
    : size_(size), body_(std::move(body)), tail_(std::move(tail)) {
  if (tail_.empty()) throw ValidationError("compiled schedule needs a tail");
}

}  // namespace renewal
