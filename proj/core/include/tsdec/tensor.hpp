#pragma once

// Dense row-major tensors of doubles with a define-by-run gradient tape.
//
// Ops record a backward closure on the calling thread's active Tape (see
// TapeScope) whenever at least one input requires a gradient. Without an active
// tape nothing is recorded, which is the inference path.

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tsdec {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  std::span<double> grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

class Tensor {
 public:
  Tensor();  // scalar zero

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }
  // Rows of the matrix view: product of all leading dims; cols = last dim.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled view when no gradient has been accumulated.
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  // Deep copy with no tape history.
  Tensor detach() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_result(Shape shape, std::vector<double> value, bool requires_grad);
};

Tensor make_result(Shape shape, std::vector<double> value, bool requires_grad);

// Ordered record of backward closures. Replaying in reverse visits every op
// exactly once. Policy: backward() clears the tape afterwards; accumulated leaf
// gradients persist until zero_grad().
class Tape {
 public:
  void record(std::function<void()> backward_fn);
  std::size_t size() const { return ops_.size(); }
  bool empty() const { return ops_.empty(); }
  void clear() { ops_.clear(); }
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> ops_;
};

// Makes `tape` the active tape of the current thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Runs backward on the active tape. Throws ContractError if the loss is not a
// scalar or no non-empty tape is active.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Ops. All matrix ops treat a tensor as [rows x cols] with rows = product of the
// leading dims. Shapes are checked eagerly; mismatches raise DimensionError.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Adds a length-cols vector to every row.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor relu(const Tensor& a);
Tensor softmax_lastdim(const Tensor& x);
// Row-wise softmax over a square [N x N] score matrix where row j only sees
// columns 0..j. Masked entries are exactly zero.
Tensor causal_softmax(const Tensor& x);
constexpr double kLayerNormEpsilon = 1e-6;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_rows(std::span<const Tensor> parts);
// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

}  // namespace tsdec
