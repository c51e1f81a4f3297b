#include "lucid/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <utility>

namespace lucid::ad {

namespace {

thread_local Tape* g_current_tape = nullptr;

// Finite checks are cheap relative to training math but not free, so they
// default to on only in debug builds. set_finite_checks() overrides.
#ifdef NDEBUG
bool g_check_finite = false;
#else
bool g_check_finite = true;
#endif

void check_finite(const char* op, const std::vector<double>& v) {
  if (!g_check_finite) return;
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DomainError(std::string("non-finite value in output of op '") +
                        op + "'");
    }
  }
}

std::shared_ptr<TensorImpl> make_impl(Shape shape, std::vector<double> value,
                                      bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  impl->requires_grad = requires_grad;
  return impl;
}

// Ensures grad storage exists before accumulation.
std::vector<double>& grad_buf(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.value.size(), 0.0);
  return t.grad;
}

bool wants_grad(const Tensor& t) {
  return g_current_tape != nullptr && t.impl()->requires_grad;
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) {
    throw ContractError(std::string("undefined tensor passed to '") + op +
                        "'");
  }
}

}  // namespace

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void set_finite_checks(bool on) { g_check_finite = on; }

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, 0.0),
                          requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::size_t n = numel(shape);
  return Tensor(
      make_impl(std::move(shape), std::vector<double>(n, v), requires_grad));
}

Tensor Tensor::from(std::vector<double> data, Shape shape,
                    bool requires_grad) {
  if (data.size() != numel(shape)) {
    throw DimensionError("data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  return Tensor(make_impl(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(make_impl({1}, {v}, requires_grad));
}

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return impl_->shape;
}

std::size_t Tensor::size() const {
  require_defined(*this, "size");
  return impl_->value.size();
}

std::size_t Tensor::dim(std::size_t i) const {
  const Shape& s = shape();
  if (i >= s.size()) {
    throw DimensionError("dim " + std::to_string(i) + " out of range for " +
                         shape_str(s));
  }
  return s[i];
}

bool Tensor::requires_grad() const {
  require_defined(*this, "requires_grad");
  return impl_->requires_grad;
}

std::span<const double> Tensor::data() const {
  require_defined(*this, "data");
  return impl_->value;
}

std::span<double> Tensor::data_mut() {
  require_defined(*this, "data_mut");
  return impl_->value;
}

double Tensor::at(std::size_t i) const {
  require_defined(*this, "at");
  if (i >= impl_->value.size()) {
    throw DimensionError("index " + std::to_string(i) +
                         " out of range for size " +
                         std::to_string(impl_->value.size()));
  }
  return impl_->value[i];
}

double Tensor::item() const {
  require_defined(*this, "item");
  if (impl_->value.size() != 1) {
    throw ContractError("item() requires a one-element tensor, got " +
                        shape_str(impl_->shape));
  }
  return impl_->value[0];
}

bool Tensor::has_grad() const {
  require_defined(*this, "has_grad");
  return !impl_->grad.empty();
}

std::span<const double> Tensor::grad() const {
  require_defined(*this, "grad");
  if (impl_->grad.empty()) {
    throw StateError("grad() before any backward accumulation");
  }
  return impl_->grad;
}

std::span<double> Tensor::grad_mut() {
  require_defined(*this, "grad_mut");
  grad_buf(*impl_);
  return impl_->grad;
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

// ---- Tape -----------------------------------------------------------------

void Tape::record(const char* op, std::shared_ptr<TensorImpl> out,
                  std::function<void()> back) {
  nodes_.push_back({op, std::move(out), std::move(back)});
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) {
    throw StateError("backward() on a consumed tape; call reset() first");
  }
  require_defined(loss, "backward");
  if (loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        shape_str(loss.shape()));
  }
  consumed_ = true;
  grad_buf(*loss.impl())[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->out->grad.empty()) continue;  // branch never reached the loss
    it->back();
  }
}

std::string Tape::first_nonfinite_op() const {
  for (const Node& n : nodes_) {
    for (double x : n.out->value) {
      if (!std::isfinite(x)) return n.op;
    }
  }
  return "";
}

Tape::Scope::Scope(Tape& t) : prev_(g_current_tape) { g_current_tape = &t; }
Tape::Scope::~Scope() { g_current_tape = prev_; }

Tape* Tape::current() { return g_current_tape; }

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

// ---- binary ops -----------------------------------------------------------

namespace {

enum class BinKind { Add, Sub, Mul, Div };

const char* bin_name(BinKind k) {
  switch (k) {
    case BinKind::Add: return "add";
    case BinKind::Sub: return "sub";
    case BinKind::Mul: return "mul";
    case BinKind::Div: return "div";
  }
  return "?";
}

Tensor binary_op(BinKind kind, const Tensor& a, const Tensor& b) {
  const char* name = bin_name(kind);
  require_defined(a, name);
  require_defined(b, name);
  std::size_t na = a.size(), nb = b.size();
  bool a_scalar = na == 1 && nb != 1;
  bool b_scalar = nb == 1 && na != 1;
  if (na != nb && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(name) + ": shapes " +
                         shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " are incompatible");
  }

  auto ai = a.impl();
  auto bi = b.impl();
  std::size_t n = std::max(na, nb);
  std::vector<double> out(n);
  const double* pa = ai->value.data();
  const double* pb = bi->value.data();
  for (std::size_t i = 0; i < n; ++i) {
    double x = pa[a_scalar ? 0 : i];
    double y = pb[b_scalar ? 0 : i];
    switch (kind) {
      case BinKind::Add: out[i] = x + y; break;
      case BinKind::Sub: out[i] = x - y; break;
      case BinKind::Mul: out[i] = x * y; break;
      case BinKind::Div: out[i] = x / y; break;
    }
  }

  Shape shape = a_scalar ? bi->shape : ai->shape;
  bool needs = wants_grad(a) || wants_grad(b);
  auto oi = std::make_shared<TensorImpl>();
  check_finite(name, out);
  oi->shape = std::move(shape);
  oi->value = std::move(out);
  oi->requires_grad = g_current_tape != nullptr && needs;
  if (oi->requires_grad) {
    g_current_tape->record(name, oi, [kind, ai, bi, oi, a_scalar, b_scalar] {
      const std::vector<double>& g = oi->grad;
      std::size_t n = g.size();
      if (ai->requires_grad) {
        std::vector<double>& da = grad_buf(*ai);
        for (std::size_t i = 0; i < n; ++i) {
          double gi = g[i];
          double contrib = 0.0;
          switch (kind) {
            case BinKind::Add:
            case BinKind::Sub: contrib = gi; break;
            case BinKind::Mul: contrib = gi * bi->value[b_scalar ? 0 : i]; break;
            case BinKind::Div: contrib = gi / bi->value[b_scalar ? 0 : i]; break;
          }
          da[a_scalar ? 0 : i] += contrib;
        }
      }
      if (bi->requires_grad) {
        std::vector<double>& db = grad_buf(*bi);
        for (std::size_t i = 0; i < n; ++i) {
          double gi = g[i];
          double x = ai->value[a_scalar ? 0 : i];
          double y = bi->value[b_scalar ? 0 : i];
          double contrib = 0.0;
          switch (kind) {
            case BinKind::Add: contrib = gi; break;
            case BinKind::Sub: contrib = -gi; break;
            case BinKind::Mul: contrib = gi * x; break;
            case BinKind::Div: contrib = -gi * x / (y * y); break;
          }
          db[b_scalar ? 0 : i] += contrib;
        }
      }
    });
  }
  return Tensor(oi);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(BinKind::Add, a, b);
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(BinKind::Sub, a, b);
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(BinKind::Mul, a, b);
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(BinKind::Div, a, b);
}

// ---- unary ops ------------------------------------------------------------

Tensor neg(const Tensor& a) {
  require_defined(a, "neg");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -ai->value[i];
  auto oi = make_impl(ai->shape, std::move(out), false);
  check_finite("neg", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("neg", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] -= oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor relu(const Tensor& a) {
  require_defined(a, "relu");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = ai->value[i] > 0.0 ? ai->value[i] : 0.0;
  auto oi = make_impl(ai->shape, std::move(out), false);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("relu", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i)
        if (ai->value[i] > 0.0) da[i] += oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor square(const Tensor& a) {
  require_defined(a, "square");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = ai->value[i] * ai->value[i];
  auto oi = make_impl(ai->shape, std::move(out), false);
  check_finite("square", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("square", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i)
        da[i] += 2.0 * ai->value[i] * oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor sqrt(const Tensor& a) {
  require_defined(a, "sqrt");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::sqrt(ai->value[i]);
  auto oi = make_impl(ai->shape, std::move(out), false);
  check_finite("sqrt", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("sqrt", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i)
        da[i] += oi->grad[i] / (2.0 * oi->value[i]);
    });
  }
  return Tensor(oi);
}

Tensor scale(const Tensor& a, double c) {
  require_defined(a, "scale");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * ai->value[i];
  auto oi = make_impl(ai->shape, std::move(out), false);
  check_finite("scale", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("scale", oi, [ai, oi, c] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += c * oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor add_const(const Tensor& a, double c) {
  require_defined(a, "add_const");
  auto ai = a.impl();
  std::vector<double> out(ai->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ai->value[i] + c;
  auto oi = make_impl(ai->shape, std::move(out), false);
  check_finite("add_const", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("add_const", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += oi->grad[i];
    });
  }
  return Tensor(oi);
}

// ---- matmul ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " are incompatible");
  }
  auto ai = a.impl();
  auto bi = b.impl();
  std::size_t m = ai->shape[0], k = ai->shape[1], n = bi->shape[1];
  std::vector<double> out(m * n, 0.0);
  const double* pa = ai->value.data();
  const double* pb = bi->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = pa[i * k + kk];
      const double* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  auto oi = make_impl({m, n}, std::move(out), false);
  check_finite("matmul", oi->value);
  if (wants_grad(a) || wants_grad(b)) {
    oi->requires_grad = true;
    g_current_tape->record("matmul", oi, [ai, bi, oi, m, k, n] {
      const double* g = oi->grad.data();
      if (ai->requires_grad) {
        double* da = grad_buf(*ai).data();
        const double* pb = bi->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g + i * n;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = pb + kk * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            da[i * k + kk] += acc;
          }
        }
      }
      if (bi->requires_grad) {
        double* db = grad_buf(*bi).data();
        const double* pa = ai->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g + i * n;
          for (std::size_t kk = 0; kk < k; ++kk) {
            double av = pa[i * k + kk];
            double* drow = db + kk * n;
            for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
          }
        }
      }
    });
  }
  return Tensor(oi);
}

// ---- conv2d ---------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& kernels, std::size_t stride,
              std::size_t padding) {
  require_defined(x, "conv2d");
  require_defined(kernels, "conv2d");
  if (x.shape().size() != 3) {
    throw DimensionError("conv2d: input must be [C,H,W], got " +
                         shape_str(x.shape()));
  }
  if (kernels.shape().size() != 4 ||
      kernels.shape()[2] != kernels.shape()[3]) {
    throw DimensionError("conv2d: kernels must be [Cout,Cin,k,k], got " +
                         shape_str(kernels.shape()));
  }
  if (kernels.shape()[1] != x.shape()[0]) {
    throw DimensionError("conv2d: kernel Cin " + shape_str(kernels.shape()) +
                         " does not match input " + shape_str(x.shape()));
  }
  if (stride == 0) throw ConfigError("conv2d: stride must be >= 1");
  std::size_t cin = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  std::size_t cout = kernels.shape()[0], ks = kernels.shape()[2];
  if (ks > h + 2 * padding || ks > w + 2 * padding) {
    throw DimensionError("conv2d: kernel " + shape_str(kernels.shape()) +
                         " larger than padded input " + shape_str(x.shape()));
  }
  std::size_t oh = (h + 2 * padding - ks) / stride + 1;
  std::size_t ow = (w + 2 * padding - ks) / stride + 1;

  auto xi = x.impl();
  auto ki = kernels.impl();
  std::vector<double> out(cout * oh * ow, 0.0);
  const double* px = xi->value.data();
  const double* pk = ki->value.data();
  long p = static_cast<long>(padding);
  for (std::size_t oc = 0; oc < cout; ++oc) {
    double* oplane = out.data() + oc * oh * ow;
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const double* iplane = px + ic * h * w;
      const double* kplane = pk + (oc * cin + ic) * ks * ks;
      for (std::size_t ky = 0; ky < ks; ++ky) {
        for (std::size_t kx = 0; kx < ks; ++kx) {
          double kv = kplane[ky * ks + kx];
          for (std::size_t oy = 0; oy < oh; ++oy) {
            long iy = static_cast<long>(oy * stride + ky) - p;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const double* irow = iplane + iy * w;
            double* orow = oplane + oy * ow;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              long ix = static_cast<long>(ox * stride + kx) - p;
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              orow[ox] += kv * irow[ix];
            }
          }
        }
      }
    }
  }

  auto oi = make_impl({cout, oh, ow}, std::move(out), false);
  check_finite("conv2d", oi->value);
  if (wants_grad(x) || wants_grad(kernels)) {
    oi->requires_grad = true;
    g_current_tape->record(
        "conv2d", oi, [xi, ki, oi, cin, h, w, cout, ks, oh, ow, stride, p] {
          const double* g = oi->grad.data();
          double* dx = xi->requires_grad ? grad_buf(*xi).data() : nullptr;
          double* dk = ki->requires_grad ? grad_buf(*ki).data() : nullptr;
          const double* px = xi->value.data();
          const double* pk = ki->value.data();
          for (std::size_t oc = 0; oc < cout; ++oc) {
            const double* gplane = g + oc * oh * ow;
            for (std::size_t ic = 0; ic < cin; ++ic) {
              const double* iplane = px + ic * h * w;
              double* dplane = dx ? dx + ic * h * w : nullptr;
              const double* kplane = pk + (oc * cin + ic) * ks * ks;
              double* dkplane = dk ? dk + (oc * cin + ic) * ks * ks : nullptr;
              for (std::size_t ky = 0; ky < ks; ++ky) {
                for (std::size_t kx = 0; kx < ks; ++kx) {
                  double kv = kplane[ky * ks + kx];
                  double kacc = 0.0;
                  for (std::size_t oy = 0; oy < oh; ++oy) {
                    long iy = static_cast<long>(oy * stride + ky) - p;
                    if (iy < 0 || iy >= static_cast<long>(h)) continue;
                    const double* grow = gplane + oy * ow;
                    const double* irow = iplane + iy * w;
                    double* drow = dplane ? dplane + iy * w : nullptr;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                      long ix = static_cast<long>(ox * stride + kx) - p;
                      if (ix < 0 || ix >= static_cast<long>(w)) continue;
                      double gv = grow[ox];
                      if (drow) drow[ix] += kv * gv;
                      if (dkplane) kacc += gv * irow[ix];
                    }
                  }
                  if (dkplane) dkplane[ky * ks + kx] += kacc;
                }
              }
            }
          }
        });
  }
  return Tensor(oi);
}

// ---- reductions and layout ------------------------------------------------

Tensor reduce_sum(const Tensor& a) {
  require_defined(a, "reduce_sum");
  auto ai = a.impl();
  double s = 0.0;
  for (double v : ai->value) s += v;
  auto oi = make_impl({1}, {s}, false);
  check_finite("reduce_sum", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("reduce_sum", oi, [ai, oi] {
      double g = oi->grad[0];
      std::vector<double>& da = grad_buf(*ai);
      for (double& d : da) d += g;
    });
  }
  return Tensor(oi);
}

Tensor reduce_mean(const Tensor& a) {
  require_defined(a, "reduce_mean");
  auto ai = a.impl();
  if (ai->value.empty()) throw ContractError("reduce_mean of empty tensor");
  double s = 0.0;
  for (double v : ai->value) s += v;
  double inv = 1.0 / static_cast<double>(ai->value.size());
  auto oi = make_impl({1}, {s * inv}, false);
  check_finite("reduce_mean", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("reduce_mean", oi, [ai, oi, inv] {
      double g = oi->grad[0] * inv;
      std::vector<double>& da = grad_buf(*ai);
      for (double& d : da) d += g;
    });
  }
  return Tensor(oi);
}

Tensor row_mean(const Tensor& a) {
  require_defined(a, "row_mean");
  if (a.shape().size() != 2) {
    throw DimensionError("row_mean: expected [m,n], got " +
                         shape_str(a.shape()));
  }
  auto ai = a.impl();
  std::size_t m = ai->shape[0], n = ai->shape[1];
  if (n == 0) throw ContractError("row_mean of zero-width matrix");
  std::vector<double> out(m, 0.0);
  double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += ai->value[i * n + j];
    out[i] = s * inv;
  }
  auto oi = make_impl({m}, std::move(out), false);
  check_finite("row_mean", oi->value);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("row_mean", oi, [ai, oi, m, n, inv] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < m; ++i) {
        double g = oi->grad[i] * inv;
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g;
      }
    });
  }
  return Tensor(oi);
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined(a, "reshape");
  if (numel(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " to " +
                         shape_str(shape) + " changes element count");
  }
  auto ai = a.impl();
  auto oi = make_impl(std::move(shape), ai->value, false);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("reshape", oi, [ai, oi] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  if (a.shape().size() != 2) {
    throw DimensionError("transpose: expected [m,n], got " +
                         shape_str(a.shape()));
  }
  auto ai = a.impl();
  std::size_t m = ai->shape[0], n = ai->shape[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ai->value[i * n + j];
  auto oi = make_impl({n, m}, std::move(out), false);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("transpose", oi, [ai, oi, m, n] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          da[i * n + j] += oi->grad[j * m + i];
    });
  }
  return Tensor(oi);
}

Tensor slice(const Tensor& a, std::size_t offset, std::size_t len) {
  require_defined(a, "slice");
  if (offset + len > a.size()) {
    throw DimensionError("slice: [" + std::to_string(offset) + "," +
                         std::to_string(offset + len) +
                         ") out of range for size " +
                         std::to_string(a.size()));
  }
  auto ai = a.impl();
  std::vector<double> out(ai->value.begin() + offset,
                          ai->value.begin() + offset + len);
  auto oi = make_impl({len}, std::move(out), false);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("slice", oi, [ai, oi, offset, len] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < len; ++i) da[offset + i] += oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor slice_col(const Tensor& a, std::size_t col) {
  require_defined(a, "slice_col");
  if (a.shape().size() != 2) {
    throw DimensionError("slice_col: expected [m,n], got " +
                         shape_str(a.shape()));
  }
  std::size_t m = a.shape()[0], n = a.shape()[1];
  if (col >= n) {
    throw DimensionError("slice_col: column " + std::to_string(col) +
                         " out of range for " + shape_str(a.shape()));
  }
  auto ai = a.impl();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = ai->value[i * n + col];
  auto oi = make_impl({m}, std::move(out), false);
  if (wants_grad(a)) {
    oi->requires_grad = true;
    g_current_tape->record("slice_col", oi, [ai, oi, m, n, col] {
      std::vector<double>& da = grad_buf(*ai);
      for (std::size_t i = 0; i < m; ++i) da[i * n + col] += oi->grad[i];
    });
  }
  return Tensor(oi);
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  std::size_t total = 0;
  bool needs = false;
  for (const Tensor& t : parts) {
    require_defined(t, "concat");
    total += t.size();
    needs = needs || wants_grad(t);
  }
  std::vector<double> out;
  out.reserve(total);
  std::vector<std::shared_ptr<TensorImpl>> impls;
  impls.reserve(parts.size());
  for (const Tensor& t : parts) {
    out.insert(out.end(), t.impl()->value.begin(), t.impl()->value.end());
    impls.push_back(t.impl());
  }
  auto oi = make_impl({total}, std::move(out), false);
  if (needs && g_current_tape) {
    oi->requires_grad = true;
    g_current_tape->record("concat", oi, [impls, oi] {
      std::size_t off = 0;
      for (const auto& p : impls) {
        if (p->requires_grad) {
          std::vector<double>& dp = grad_buf(*p);
          for (std::size_t i = 0; i < dp.size(); ++i)
            dp[i] += oi->grad[off + i];
        }
        off += p->value.size();
      }
    });
  }
  return Tensor(oi);
}

Tensor hconcat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("hconcat of zero tensors");
  std::size_t m = 0, total_cols = 0;
  bool needs = false;
  std::vector<std::size_t> cols;
  for (const Tensor& t : parts) {
    require_defined(t, "hconcat");
    const Shape& s = t.shape();
    std::size_t rows, c;
    if (s.size() == 1) {
      rows = s[0];
      c = 1;
    } else if (s.size() == 2) {
      rows = s[0];
      c = s[1];
    } else {
      throw DimensionError("hconcat: expected [m] or [m,k], got " +
                           shape_str(s));
    }
    if (m == 0) m = rows;
    if (rows != m) {
      throw DimensionError("hconcat: row mismatch, " + shape_str(s) +
                           " vs m=" + std::to_string(m));
    }
    cols.push_back(c);
    total_cols += c;
    needs = needs || wants_grad(t);
  }
  std::vector<double> out(m * total_cols);
  std::vector<std::shared_ptr<TensorImpl>> impls;
  impls.reserve(parts.size());
  for (const Tensor& t : parts) impls.push_back(t.impl());
  std::size_t col_off = 0;
  for (std::size_t pi = 0; pi < impls.size(); ++pi) {
    std::size_t c = cols[pi];
    const std::vector<double>& v = impls[pi]->value;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out[i * total_cols + col_off + j] = v[i * c + j];
    col_off += c;
  }
  auto oi = make_impl({m, total_cols}, std::move(out), false);
  if (needs && g_current_tape) {
    oi->requires_grad = true;
    g_current_tape->record("hconcat", oi, [impls, cols, oi, m, total_cols] {
      std::size_t col_off = 0;
      for (std::size_t pi = 0; pi < impls.size(); ++pi) {
        std::size_t c = cols[pi];
        if (impls[pi]->requires_grad) {
          std::vector<double>& dp = grad_buf(*impls[pi]);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j)
              dp[i * c + j] += oi->grad[i * total_cols + col_off + j];
        }
        col_off += c;
      }
    });
  }
  return Tensor(oi);
}

Tensor row_scale(const Tensor& x, const Tensor& s) {
  require_defined(x, "row_scale");
  require_defined(s, "row_scale");
  if (x.shape().size() != 2 || s.shape().size() != 1 ||
      x.shape()[0] != s.shape()[0]) {
    throw DimensionError("row_scale: shapes " + shape_str(x.shape()) +
                         " and " + shape_str(s.shape()) +
                         " are incompatible");
  }
  auto xi = x.impl();
  auto si = s.impl();
  std::size_t m = xi->shape[0], n = xi->shape[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double sv = si->value[i];
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = xi->value[i * n + j] * sv;
  }
  auto oi = make_impl({m, n}, std::move(out), false);
  check_finite("row_scale", oi->value);
  if (wants_grad(x) || wants_grad(s)) {
    oi->requires_grad = true;
    g_current_tape->record("row_scale", oi, [xi, si, oi, m, n] {
      if (xi->requires_grad) {
        std::vector<double>& dx = grad_buf(*xi);
        for (std::size_t i = 0; i < m; ++i) {
          double sv = si->value[i];
          for (std::size_t j = 0; j < n; ++j)
            dx[i * n + j] += oi->grad[i * n + j] * sv;
        }
      }
      if (si->requires_grad) {
        std::vector<double>& ds = grad_buf(*si);
        for (std::size_t i = 0; i < m; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += oi->grad[i * n + j] * xi->value[i * n + j];
          ds[i] += acc;
        }
      }
    });
  }
  return Tensor(oi);
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  require_defined(x, "add_bias");
  require_defined(b, "add_bias");
  if (x.shape().size() != 2 || b.shape().size() != 1 ||
      x.shape()[1] != b.shape()[0]) {
    throw DimensionError("add_bias: shapes " + shape_str(x.shape()) +
                         " and " + shape_str(b.shape()) +
                         " are incompatible");
  }
  auto xi = x.impl();
  auto bi = b.impl();
  std::size_t m = xi->shape[0], n = xi->shape[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = xi->value[i * n + j] + bi->value[j];
  auto oi = make_impl({m, n}, std::move(out), false);
  check_finite("add_bias", oi->value);
  if (wants_grad(x) || wants_grad(b)) {
    oi->requires_grad = true;
    g_current_tape->record("add_bias", oi, [xi, bi, oi, m, n] {
      if (xi->requires_grad) {
        std::vector<double>& dx = grad_buf(*xi);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += oi->grad[i];
      }
      if (bi->requires_grad) {
        std::vector<double>& db = grad_buf(*bi);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) db[j] += oi->grad[i * n + j];
      }
    });
  }
  return Tensor(oi);
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  require_defined(x, "add_channel_bias");
  require_defined(b, "add_channel_bias");
  if (x.shape().size() != 3 || b.shape().size() != 1 ||
      x.shape()[0] != b.shape()[0]) {
    throw DimensionError("add_channel_bias: shapes " + shape_str(x.shape()) +
                         " and " + shape_str(b.shape()) +
                         " are incompatible");
  }
  auto xi = x.impl();
  auto bi = b.impl();
  std::size_t c = xi->shape[0], hw = xi->shape[1] * xi->shape[2];
  std::vector<double> out(c * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double bv = bi->value[ch];
    for (std::size_t i = 0; i < hw; ++i)
      out[ch * hw + i] = xi->value[ch * hw + i] + bv;
  }
  auto oi = make_impl(xi->shape, std::move(out), false);
  check_finite("add_channel_bias", oi->value);
  if (wants_grad(x) || wants_grad(b)) {
    oi->requires_grad = true;
    g_current_tape->record("add_channel_bias", oi, [xi, bi, oi, c, hw] {
      if (xi->requires_grad) {
        std::vector<double>& dx = grad_buf(*xi);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += oi->grad[i];
      }
      if (bi->requires_grad) {
        std::vector<double>& db = grad_buf(*bi);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (std::size_t i = 0; i < hw; ++i) acc += oi->grad[ch * hw + i];
          db[ch] += acc;
        }
      }
    });
  }
  return Tensor(oi);
}

// ---- init -----------------------------------------------------------------

Tensor xavier_uniform(const Shape& shape, std::uint64_t seed) {
  if (shape.size() < 2) {
    throw DimensionError("xavier_uniform needs at least 2 dims, got " +
                         shape_str(shape));
  }
  std::size_t receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
  double fan = static_cast<double>((shape[0] + shape[1]) * receptive);
  double bound = std::sqrt(6.0 / fan);
  std::mt19937_64 rng(seed);
  std::size_t n = numel(shape);
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    // 53-bit mantissa draw in [0,1); identical across platforms, unlike
    // std::uniform_real_distribution.
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    data[i] = bound * (2.0 * u - 1.0);
  }
  return Tensor::from(std::move(data), shape, true);
}

// ---- Adam -----------------------------------------------------------------

void adam_step(Tensor& param, AdamState& state) {
  if (!param.defined() || !param.requires_grad()) {
    throw StateError("adam_step on a tensor that does not require grad");
  }
  if (!param.has_grad()) {
    throw StateError("adam_step before any gradient was accumulated");
  }
  std::size_t n = param.size();
  if (state.m.size() != n || state.v.size() != n) {
    throw DimensionError("adam_step: state size " +
                         std::to_string(state.m.size()) +
                         " does not match param size " + std::to_string(n));
  }
  state.step_count += 1;
  double b1 = state.beta1, b2 = state.beta2;
  double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  double* p = param.data_mut().data();
  const double* g = param.impl()->grad.data();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip_grad_norm needs max_norm > 0");
  double sq = 0.0;
  for (Tensor* p : params) {
    if (!p || !p->defined() || !p->has_grad()) continue;
    for (double g : p->impl()->grad) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double s = max_norm / norm;
    for (Tensor* p : params) {
      if (!p || !p->defined() || !p->has_grad()) continue;
      for (double& g : p->impl()->grad) g *= s;
    }
  }
  return norm;
}

void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* p : params) {
    if (p && p->defined()) p->zero_grad();
  }
}

// ---- grad check ------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double h, double tol) {
  if (!x.defined()) throw ContractError("grad_check on undefined tensor");
  if (h <= 0.0) throw ConfigError("grad_check: step h must be positive");

  std::vector<double> base(x.data().begin(), x.data().end());
  Shape shape = x.shape();

  // Analytic pass.
  Tensor xg = Tensor::from(base, shape, true);
  Tape tape;
  std::vector<double> analytic(base.size(), 0.0);
  {
    Tape::Scope scope(tape);
    Tensor y = f(xg);
    if (y.size() != 1) {
      throw ContractError("grad_check: f must return a scalar, got " +
                          shape_str(y.shape()));
    }
    tape.backward(y);
  }
  if (xg.has_grad()) {
    auto g = xg.grad();
    analytic.assign(g.begin(), g.end());
  }

  auto eval = [&](const std::vector<double>& v) {
    Tensor t = Tensor::from(v, shape, false);
    Tensor y = f(t);
    if (y.size() != 1) {
      throw ContractError("grad_check: f must return a scalar, got " +
                          shape_str(y.shape()));
    }
    return y.item();
  };

  double f0 = eval(base);
  GradCheckReport report;
  std::vector<double> pert = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    pert[i] = base[i] + h;
    double fp = eval(pert);
    pert[i] = base[i] - h;
    double fm = eval(pert);
    pert[i] = base[i];

    double slope_p = (fp - f0) / h;
    double slope_m = (f0 - fm) / h;
    double slope_scale =
        std::max({1.0, std::abs(slope_p), std::abs(slope_m)});
    if (std::abs(slope_p - slope_m) > 0.01 * slope_scale) {
      ++report.skipped_kinks;  // one-sided slopes disagree: kink, skip
      continue;
    }
    double numeric = (fp - fm) / (2.0 * h);
    double a = analytic[i];
    double dev =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric),
                                          1e-3});
    ++report.checked;
    report.max_rel_dev = std::max(report.max_rel_dev, dev);
    if (dev > tol) {
      report.ok = false;
      report.failures.push_back({i, a, numeric, dev});
    }
  }
  return report;
}

}  // namespace lucid::ad
