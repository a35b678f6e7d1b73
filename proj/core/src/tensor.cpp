#include "tsdec/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tsdec/error.hpp"

namespace tsdec {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

thread_local Tape* g_active_tape = nullptr;

using NodePtr = std::shared_ptr<detail::Node>;

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void record(std::function<void()> fn) { g_active_tape->record(std::move(fn)); }

void check_finite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value produced");
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_rank_at_least(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() < rank) {
    throw DimensionError(std::string(op) + ": expected rank >= " + std::to_string(rank) +
                         ", got " + shape_to_string(a.shape()));
  }
}

// Output grad may be missing when the node is not on the path to the loss.
bool has_upstream(const NodePtr& out) { return out->grad.size() == out->value.size() && !out->grad.empty(); }

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) { node_->value.assign(1, 0.0); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->value.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor: shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  if (!std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("tensor: non-finite value in " + shape_to_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw DimensionError("tensor: axis out of range for " + shape_to_string(shape()));
  return node_->shape[axis];
}

std::size_t Tensor::cols() const { return rank() == 0 ? 1 : node_->shape.back(); }

std::size_t Tensor::rows() const {
  const std::size_t c = cols();
  return c == 0 ? 0 : numel() / c;
}

double Tensor::item() const {
  if (numel() != 1) throw ContractError("tensor: item() on non-scalar " + shape_to_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const { return node_->value[row * cols() + col]; }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor make_result(Shape shape, std::vector<double> value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------

void Tape::record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1 || loss.rank() != 0) {
    throw ContractError("backward: loss must be a scalar, got " + shape_to_string(loss.shape()));
  }
  if (ops_.empty()) throw ContractError("backward: tape is empty");
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  ops_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
  if (g_active_tape == nullptr) throw ContractError("backward: no active tape");
  g_active_tape->backward(loss);
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank_at_least(a, 1, "matmul");
  if (b.rank() != 2 || a.cols() != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) +
                         " and " + shape_to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.rows());
  const auto k = static_cast<Eigen::Index>(a.cols());
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MutMap(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  check_finite(out, "matmul");
  Shape shape = a.shape();
  shape.back() = static_cast<std::size_t>(n);
  const bool grad = needs_grad({&a, &b});
  Tensor result = make_result(std::move(shape), std::move(out), grad);
  if (grad) {
    record([an = a.node(), bn = b.node(), on = result.node(), m, k, n] {
      if (!has_upstream(on)) return;
      ConstMap g(on->grad.data(), m, n);
      if (an->requires_grad) {
        MutMap(an->grad_buffer().data(), m, k).noalias() += g * ConstMap(bn->value.data(), k, n).transpose();
      }
      if (bn->requires_grad) {
        MutMap(bn->grad_buffer().data(), k, n).noalias() += ConstMap(an->value.data(), m, k).transpose() * g;
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + shape_to_string(a.shape()));
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto n = static_cast<Eigen::Index>(a.dim(1));
  std::vector<double> out(a.numel());
  MutMap(out.data(), n, m) = ConstMap(a.data().data(), m, n).transpose();
  const bool grad = needs_grad({&a});
  Tensor result = make_result({a.dim(1), a.dim(0)}, std::move(out), grad);
  if (grad) {
    record([an = a.node(), on = result.node(), m, n] {
      if (!has_upstream(on)) return;
      MutMap(an->grad_buffer().data(), m, n) += ConstMap(on->grad.data(), n, m).transpose();
    });
  }
  return result;
}

namespace {

enum class Binary { kAdd, kSub, kMul };

Tensor elementwise(const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  require_same_shape(a, b, name);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (kind) {
      case Binary::kAdd: out[i] = av[i] + bv[i]; break;
      case Binary::kSub: out[i] = av[i] - bv[i]; break;
      case Binary::kMul: out[i] = av[i] * bv[i]; break;
    }
  }
  check_finite(out, name);
  const bool grad = needs_grad({&a, &b});
  Tensor result = make_result(a.shape(), std::move(out), grad);
  if (grad) {
    record([an = a.node(), bn = b.node(), on = result.node(), kind] {
      if (!has_upstream(on)) return;
      const auto& g = on->grad;
      if (an->requires_grad) {
        auto ga = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += kind == Binary::kMul ? g[i] * bn->value[i] : g[i];
      }
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (kind) {
            case Binary::kAdd: gb[i] += g[i]; break;
            case Binary::kSub: gb[i] -= g[i]; break;
            case Binary::kMul: gb[i] += g[i] * an->value[i]; break;
          }
        }
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, Binary::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, Binary::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, Binary::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  check_finite(out, "scale");
  const bool grad = needs_grad({&a});
  Tensor result = make_result(a.shape(), std::move(out), grad);
  if (grad) {
    record([an = a.node(), on = result.node(), factor] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * on->grad[i];
    });
  }
  return result;
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  require_rank_at_least(a, 1, "add_row");
  if (bias.rank() != 1 || bias.dim(0) != a.cols()) {
    throw DimensionError("add_row: bias " + shape_to_string(bias.shape()) + " does not match last dim of " +
                         shape_to_string(a.shape()));
  }
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  check_finite(out, "add_row");
  const bool grad = needs_grad({&a, &bias});
  Tensor result = make_result(a.shape(), std::move(out), grad);
  if (grad) {
    record([an = a.node(), bn = bias.node(), on = result.node(), rows, cols] {
      if (!has_upstream(on)) return;
      const auto& g = on->grad;
      if (an->requires_grad) {
        auto ga = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    });
  }
  return result;
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  check_finite(out, "relu");
  const bool grad = needs_grad({&a});
  Tensor result = make_result(a.shape(), std::move(out), grad);
  if (grad) {
    record([an = a.node(), on = result.node()] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (an->value[i] > 0.0) ga[i] += on->grad[i];
    });
  }
  return result;
}

namespace {

// Softmax over the first `visible(r)` entries of each row; the rest are zero.
template <typename Visible>
Tensor masked_softmax(const Tensor& x, Visible visible, const char* name) {
  require_rank_at_least(x, 1, name);
  check_finite(x.data(), name);
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (cols == 0) throw DimensionError(std::string(name) + ": last dimension must be >= 1");
  const auto xv = x.data();
  std::vector<double> out(xv.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = visible(r);
    const double* in = xv.data() + r * cols;
    double* o = out.data() + r * cols;
    const double peak = *std::max_element(in, in + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      o[c] = std::exp(in[c] - peak);
      total += o[c];
    }
    for (std::size_t c = 0; c < n; ++c) o[c] /= total;
  }
  const bool grad = needs_grad({&x});
  Tensor result = make_result(x.shape(), std::move(out), grad);
  if (grad) {
    record([xn = x.node(), on = result.node(), rows, cols, visible] {
      if (!has_upstream(on)) return;
      auto gx = xn->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t n = visible(r);
        const double* y = on->value.data() + r * cols;
        const double* g = on->grad.data() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) dot += g[c] * y[c];
        for (std::size_t c = 0; c < n; ++c) gx[r * cols + c] += y[c] * (g[c] - dot);
      }
    });
  }
  return result;
}

}  // namespace

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t cols = x.cols();
  return masked_softmax(x, [cols](std::size_t) { return cols; }, "softmax_lastdim");
}

Tensor causal_softmax(const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) != x.dim(1)) {
    throw DimensionError("causal_softmax: expected a square matrix, got " + shape_to_string(x.shape()));
  }
  return masked_softmax(x, [](std::size_t r) { return r + 1; }, "causal_softmax");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  require_rank_at_least(x, 1, "layer_norm");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  if (gain.shape() != Shape{cols} || bias.shape() != Shape{cols}) {
    throw DimensionError("layer_norm: gain/bias " + shape_to_string(gain.shape()) + "/" +
                         shape_to_string(bias.shape()) + " do not match last dim of " + shape_to_string(x.shape()));
  }
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<double> out(xv.size());
  std::vector<double> normalized(xv.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += in[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat = (in[c] - mu) * inv_std[r];
      normalized[r * cols + c] = xhat;
      out[r * cols + c] = gv[c] * xhat + bv[c];
    }
  }
  check_finite(out, "layer_norm");
  const bool grad = needs_grad({&x, &gain, &bias});
  Tensor result = make_result(x.shape(), std::move(out), grad);
  if (grad) {
    record([xn = x.node(), gn = gain.node(), bn = bias.node(), on = result.node(), rows, cols,
            normalized = std::move(normalized), inv_std = std::move(inv_std)] {
      if (!has_upstream(on)) return;
      const auto& g = on->grad;
      if (gn->requires_grad || bn->requires_grad) {
        auto gg = gn->requires_grad ? gn->grad_buffer() : std::span<double>{};
        auto gb = bn->requires_grad ? bn->grad_buffer() : std::span<double>{};
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            if (!gg.empty()) gg[c] += g[r * cols + c] * normalized[r * cols + c];
            if (!gb.empty()) gb[c] += g[r * cols + c];
          }
        }
      }
      if (xn->requires_grad) {
        auto gx = xn->grad_buffer();
        const double n = static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g[r * cols + c] * gn->value[c];
            mean_d += d;
            mean_dx += d * normalized[r * cols + c];
          }
          mean_d /= n;
          mean_dx /= n;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g[r * cols + c] * gn->value[c];
            gx[r * cols + c] += inv_std[r] * (d - mean_d - normalized[r * cols + c] * mean_dx);
          }
        }
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  if (!std::isfinite(total)) throw NumericError("sum: non-finite value produced");
  const bool grad = needs_grad({&a});
  Tensor result = make_result({}, {total}, grad);
  if (grad) {
    record([an = a.node(), on = result.node()] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (double& v : ga) v += on->grad[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
  }
  const bool grad = needs_grad({&a});
  Tensor result = make_result(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), grad);
  if (grad) {
    record([an = a.node(), on = result.node()] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += on->grad[i];
    });
  }
  return result;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() != 2 || begin > end || end > a.dim(1)) {
    throw DimensionError("slice_cols: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ") for " +
                         shape_to_string(a.shape()));
  }
  const std::size_t rows = a.dim(0);
  const std::size_t cols = a.dim(1);
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  const auto av = a.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(av.data() + r * cols + begin, width, out.data() + r * width);
  const bool grad = needs_grad({&a});
  Tensor result = make_result({rows, width}, std::move(out), grad);
  if (grad) {
    record([an = a.node(), on = result.node(), rows, cols, begin, width] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c) ga[r * cols + begin + c] += on->grad[r * width + c];
    });
  }
  return result;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rank() == 2 ? parts[0].dim(0) : 0;
  std::size_t total = 0;
  bool grad = false;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    total += p.dim(1);
    grad = grad || needs_grad({&p});
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(p.data().data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  Tensor result = make_result({rows, total}, std::move(out), grad);
  if (grad) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    record([nodes = std::move(nodes), on = result.node(), rows, total] {
      if (!has_upstream(on)) return;
      std::size_t off = 0;
      for (const auto& n : nodes) {
        const std::size_t w = n->shape[1];
        if (n->requires_grad) {
          auto g = n->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) g[r * w + c] += on->grad[r * total + off + c];
        }
        off += w;
      }
    });
  }
  return result;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() != 2 || begin > end || end > a.dim(0)) {
    throw DimensionError("slice_rows: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ") for " +
                         shape_to_string(a.shape()));
  }
  const std::size_t cols = a.dim(1);
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  const bool grad = needs_grad({&a});
  Tensor result = make_result({end - begin, cols}, std::move(out), grad);
  if (grad) {
    record([an = a.node(), on = result.node(), offset = begin * cols] {
      if (!has_upstream(on)) return;
      auto ga = an->grad_buffer();
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[offset + i] += on->grad[i];
    });
  }
  return result;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = parts[0].rank() == 2 ? parts[0].dim(1) : 0;
  std::size_t rows = 0;
  bool grad = false;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    rows += p.dim(0);
    grad = grad || needs_grad({&p});
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result = make_result({rows, cols}, std::move(out), grad);
  if (grad) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    record([nodes = std::move(nodes), on = result.node()] {
      if (!has_upstream(on)) return;
      std::size_t off = 0;
      for (const auto& n : nodes) {
        if (n->requires_grad) {
          auto g = n->grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += on->grad[off + i];
        }
        off += n->value.size();
      }
    });
  }
  return result;
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ContractError("dropout: rate must be in [0, 1)");
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.numel());
  for (double& m : mask) m = keep(rng) ? factor : 0.0;
  return mul(a, Tensor::from(a.shape(), std::move(mask)));
}

}  // namespace tsdec
