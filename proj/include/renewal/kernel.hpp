#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace renewal {

using Time = std::int64_t;
using State = std::uint32_t;

/// Raised when an input violates a documented precondition (bad kernel,
/// parameter outside its domain, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix. Not required to be square so that malformed
/// input can be represented and reported by validate_schedule().
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  /// Throws ValidationError on ragged input.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// States are labelled 0..size-1; the target set C is kept sorted and unique.
class StateSpace {
 public:
  StateSpace() = default;
  /// Throws ValidationError if size is zero or the target set is empty or
  /// out of range.
  StateSpace(std::size_t size, std::vector<State> target_set);

  std::size_t size() const { return size_; }
  const std::vector<State>& target_set() const { return target_; }
  bool in_target(State x) const { return x < size_ && mask_[x] != 0; }

  friend bool operator==(const StateSpace& a, const StateSpace& b) {
    return a.size_ == b.size_ && a.target_ == b.target_;
  }

 private:
  std::size_t size_ = 0;
  std::vector<State> target_;
  std::vector<char> mask_;
};

enum class TailKind { Constant, Periodic };

/// Time-indexed family of transition matrices P_t. Times 0..body.size()-1
/// use the body; later times use the tail. A periodic tail is phased on
/// absolute time: P_t = tail[t mod period] for t >= body.size(), so the
/// phase does not shift when the body length changes.
class KernelSchedule {
 public:
  KernelSchedule() = default;
  KernelSchedule(StateSpace space, std::vector<Matrix> body, TailKind kind,
                 std::vector<Matrix> tail);

  /// Homogeneous schedule P_t = P.
  static KernelSchedule constant(StateSpace space, Matrix p);

  const StateSpace& space() const { return space_; }
  const std::vector<Matrix>& body() const { return body_; }
  TailKind tail_kind() const { return kind_; }
  const std::vector<Matrix>& tail() const { return tail_; }
  std::size_t period() const { return tail_.size(); }
  /// First time index governed by the tail (T0).
  Time tail_start() const { return static_cast<Time>(body_.size()); }

  const Matrix& kernel_at(Time t) const;

 private:
  StateSpace space_;
  std::vector<Matrix> body_;
  TailKind kind_ = TailKind::Constant;
  std::vector<Matrix> tail_;
};

/// Free-function form of KernelSchedule::kernel_at.
inline const Matrix& kernel_at(const KernelSchedule& s, Time t) { return s.kernel_at(t); }

inline constexpr double kRowSumTolerance = 1e-12;

/// Lists every shape, sign and row-sum problem. Empty iff the schedule is a
/// valid family of row-stochastic matrices on its state space.
std::vector<std::string> validate_schedule(const KernelSchedule& schedule);

/// Throws ValidationError carrying the first violations when invalid.
void require_valid(const KernelSchedule& schedule);

/// Checks a probability vector against a state space; empty iff valid.
std::vector<std::string> validate_distribution(std::span<const double> initial,
                                               std::size_t size);

// ---------------------------------------------------------------------------
// Birth-death family
// ---------------------------------------------------------------------------

/// Down-probabilities alpha_{t,j}. Each profile lists alpha for states
/// j = 0, 1, ...; a profile shorter than the state count repeats its last
/// value, so {0.75} means alpha_{t,j} = 0.75 for every j. Time resolution
/// follows KernelSchedule: body for t < body.size(), then a constant or
/// absolutely-phased periodic tail.
struct BirthDeathSpec {
  std::vector<std::vector<double>> body;
  TailKind tail_kind = TailKind::Constant;
  std::vector<std::vector<double>> tail;
  /// Highest represented state; the chain lives on {0..cap}.
  std::size_t cap = 2;

  double alpha(Time t, std::size_t j) const;
  /// Every distinct profile (body and tail), used for sup/inf scans.
  std::vector<const std::vector<double>*> profiles() const;

  /// inf_t alpha_{t,0}.
  double inf_alpha0() const;
  /// sup_{t,j} alpha_{t,j}(1 - alpha_{t,j}) over represented states j < cap.
  double sup_alpha_product() const;
};

/// Builds the truncated birth-death kernels on {0..cap} with target set {0}:
/// interior j moves to j-1 w.p. alpha and to j+1 otherwise, 0 stays w.p.
/// alpha_{t0}, and the top state cap reflects down with probability 1.
KernelSchedule birth_death_schedule(const BirthDeathSpec& spec);

// ---------------------------------------------------------------------------
// Sparse form used by the samplers and the exact propagators.
// ---------------------------------------------------------------------------

/// CSR copy of one kernel with per-row cumulative sums for inverse-CDF
/// sampling.
class SparseKernel {
 public:
  SparseKernel() = default;
  explicit SparseKernel(const Matrix& m);
  SparseKernel(std::size_t n, std::vector<std::uint32_t> offsets, std::vector<State> cols,
               std::vector<double> probs);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const State> targets(State x) const {
    return {cols_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  std::span<const double> probs(State x) const {
    return {probs_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }
  /// Next state for a uniform draw u in [0,1).
  State sample(State x, double u) const;

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<State> cols_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

class CompiledSchedule {
 public:
  CompiledSchedule() = default;
  explicit CompiledSchedule(const KernelSchedule& schedule);
  CompiledSchedule(std::size_t size, std::vector<SparseKernel> body,
                   std::vector<SparseKernel> tail);

  std::size_t size() const { return size_; }
  std::size_t period() const { return tail_.size(); }
  Time tail_start() const { return static_cast<Time>(body_.size()); }
  const std::vector<SparseKernel>& body() const { return body_; }
  const std::vector<SparseKernel>& tail() const { return tail_; }

  const SparseKernel& at(Time t) const {
    if (t < static_cast<Time>(body_.size())) return body_[static_cast<std::size_t>(t)];
    return tail_[static_cast<std::size_t>(t) % tail_.size()];
  }

 private:
  std::size_t size_ = 0;
  std::vector<SparseKernel> body_;
  std::vector<SparseKernel> tail_;
};

}  // namespace renewal
