#pragma once

// Reverse-mode automatic differentiation on flat row-major double tensors.
//
// Design notes:
//  - Define-by-run: ops executed inside a Tape::Scope are recorded on that
//    tape; backward() replays the records in reverse. Without an active
//    scope ops run value-only, which is what inference paths use.
//  - Gradients accumulate (+=) across uses of a tensor. Callers own
//    zero_grad(); nothing clears gradients implicitly.
//  - Everything is single threaded and allocation order is deterministic,
//    so two runs with the same seed produce bitwise identical results.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lucid/errors.hpp"

namespace lucid::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

// Non-finite outputs throw DomainError when enabled. Defaults to on in
// debug builds, off in release; flip at runtime when chasing a blow-up.
void set_finite_checks(bool on);

struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
};

// Cheap shared handle. Copying a Tensor aliases the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(std::vector<double> data, Shape shape,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t dim(std::size_t i) const;
  bool requires_grad() const;

  std::span<const double> data() const;
  std::span<double> data_mut();  // in-place edit; never use on recorded nodes
  double at(std::size_t i) const;
  double item() const;  // value of a one-element tensor

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  void zero_grad();

  std::shared_ptr<TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Append-only op record. One tape per training step; reset() between steps.
class Tape {
 public:
  struct Node {
    const char* op;
    std::shared_ptr<TensorImpl> out;
    std::function<void()> back;  // reads out->grad, accumulates into inputs
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const char* op, std::shared_ptr<TensorImpl> out,
              std::function<void()> back);
  std::size_t node_count() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  void reset();

  // Seeds d(loss)/d(loss) = 1 and runs all recorded backward closures in
  // reverse order. Throws StateError on a consumed tape and ContractError
  // if loss is not scalar.
  void backward(const Tensor& loss);

  // Name of the first recorded op whose output holds a NaN/Inf, or "" if
  // every recorded value is finite. Cheap way to localize a blow-up.
  std::string first_nonfinite_op() const;

  // RAII activation. Ops record onto the innermost active tape.
  class Scope {
   public:
    explicit Scope(Tape& t);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* current();

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

void backward(const Tensor& loss, Tape& tape);

// ---- primitive ops -------------------------------------------------------
// Binary ops take equal shapes, or one side with a single element which is
// broadcast against the other. Anything else is a DimensionError.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x [Cin,H,W], kernels [Cout,Cin,k,k] -> [Cout,H',W'] with
// H' = floor((H + 2*padding - k)/stride) + 1. Rows/cols that do not fit are
// dropped, matching the usual framework convention.
Tensor conv2d(const Tensor& x, const Tensor& kernels, std::size_t stride,
              std::size_t padding);

Tensor reduce_sum(const Tensor& a);   // -> [1]
Tensor reduce_mean(const Tensor& a);  // -> [1]
Tensor row_mean(const Tensor& a);     // [m,n] -> [m]

Tensor reshape(const Tensor& a, Shape shape);  // copy, same numel
Tensor transpose(const Tensor& a);             // [m,n] -> [n,m]

Tensor slice(const Tensor& a, std::size_t offset, std::size_t len);  // flat
Tensor slice_col(const Tensor& a, std::size_t col);  // [m,n] -> [m]
Tensor concat(const std::vector<Tensor>& parts);     // flat -> [sum]
// Column-wise concat of [m] or [m,k] parts into [m, sum k].
Tensor hconcat(const std::vector<Tensor>& parts);

Tensor row_scale(const Tensor& x, const Tensor& s);  // [m,n] * [m] per row
Tensor add_bias(const Tensor& x, const Tensor& b);          // [m,n] + [n]
Tensor add_channel_bias(const Tensor& x, const Tensor& b);  // [c,h,w] + [c]

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// ---- initialization ------------------------------------------------------

// Uniform(-bound, bound) with bound = sqrt(6 / fan) where
// fan = (shape[0] + shape[1]) * prod(shape[2:]). Deterministic in the seed.
Tensor xavier_uniform(const Shape& shape, std::uint64_t seed);

// ---- optimizer -----------------------------------------------------------

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, double lr_in) : m(n, 0.0), v(n, 0.0), lr(lr_in) {}

  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with bias correction. StateError if param has no grad,
// DimensionError if the state was built for a different size.
void adam_step(Tensor& param, AdamState& state);

// Joint L2 norm of the gradients of a parameter group; when it exceeds
// max_norm all gradients in the group are scaled down to meet it. Returns
// the pre-clip norm. Tensors without accumulated gradients count as zero.
double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm);

void zero_grads(const std::vector<Tensor*>& params);

// ---- finite-difference checking -----------------------------------------

struct GradCheckEntry {
  std::size_t index;
  double analytic;
  double numeric;
  double rel_dev;
};

struct GradCheckReport {
  double max_rel_dev = 0.0;  // over checked (non-kink) coordinates
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::vector<GradCheckEntry> failures;
  bool ok = true;
};

// Compares tape gradients of scalar-valued f against central differences.
// Coordinates where the one-sided slopes disagree by more than 1% are
// treated as kinks (relu and friends) and skipped. Relative deviation is
// |a - n| / max(|a|, |n|, 1e-3).
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double h = 1e-5,
                           double tol = 1e-4);

}  // namespace lucid::ad
