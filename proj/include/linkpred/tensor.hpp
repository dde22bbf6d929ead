#pragma once
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace linkpred {

using Shape = std::vector<std::int64_t>;

// Dense 64-bit float array, row-major, rank 1 or 2. Copies share storage;
// gradients are keyed by that storage, so copies of a tensor are one variable.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor constant(const Shape& shape, double value);
  static Tensor from(const Shape& shape, std::vector<double> values);
  static Tensor scalar(double v) { return from({1}, {v}); }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const;
  std::int64_t rows() const;
  std::int64_t cols() const;
  bool defined() const { return buf_ != nullptr; }

  std::span<double> data();
  std::span<const double> data() const;
  double at(std::int64_t i) const { return (*buf_)[static_cast<std::size_t>(i)]; }
  double at(std::int64_t r, std::int64_t c) const;
  double value() const;  // numel()==1 accessor

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    return *this;
  }

  const void* storage_key() const { return buf_.get(); }

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<std::vector<double>> buf_;
  bool requires_grad_ = false;
};

// Constant sparse matrix in CSR form; the aggregation structure of a subgraph.
// Gradients never flow through it.
struct SparseMatrix {
  std::int64_t rows = 0, cols = 0;
  std::vector<std::int64_t> offsets;  // rows+1
  std::vector<std::int32_t> col;
  std::vector<double> val;

  static SparseMatrix from_triplets(
      std::int64_t rows, std::int64_t cols,
      const std::vector<std::tuple<std::int32_t, std::int32_t, double>>& items);
  SparseMatrix transposed() const;
};

// Gradient of a scalar loss for every tensor that participated in the taped
// computation. Tensors that did not participate get a zero gradient.
class Gradients {
 public:
  // Null when the tensor did not participate.
  const std::vector<double>* find(const Tensor& t) const;
  // Dense gradient, zeros when absent.
  std::vector<double> dense(const Tensor& t) const;

 private:
  friend class Tape;
  std::unordered_map<const void*, std::vector<double>> by_storage_;
};

// Records forward operations and replays their adjoints once, in reverse
// order. A tape lives for one training step and is then discarded.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t num_ops() const { return ops_.size(); }

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor add_scalar(const Tensor& a, double c);
  Tensor hadamard(const Tensor& a, const Tensor& b);
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor softplus(const Tensor& a);
  Tensor abs(const Tensor& a);
  Tensor reduce_sum(const Tensor& a);
  Tensor reduce_mean(const Tensor& a);
  Tensor reduce_max(const Tensor& a);
  Tensor slice_rows(const Tensor& a, std::int64_t row_begin, std::int64_t row_end);
  // Gathers rows of a 2-D table; the workhorse behind feature lookup and
  // SortPooling reordering. Repeated ids accumulate on backward.
  Tensor embedding_lookup(const Tensor& table, const std::vector<std::int32_t>& ids);
  Tensor reshape(const Tensor& a, const Shape& shape);
  // matrix + row vector broadcast over rows.
  Tensor add_rowwise(const Tensor& a, const Tensor& row);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor concat(const std::vector<Tensor>& parts);  // rank-1 concatenation
  // Appends zero rows until the matrix has total_rows rows.
  Tensor pad_rows(const Tensor& a, std::int64_t total_rows);
  Tensor spmm(const SparseMatrix& s, const Tensor& x);

  // Backward pass from a scalar-shaped loss; each op visited exactly once.
  Gradients backward(const Tensor& loss);

 private:
  using GradStore = std::vector<std::vector<double>>;
  struct OpRec {
    const char* name;
    std::function<void(GradStore&)> backward;
  };

  bool track(std::initializer_list<const Tensor*> inputs) const;
  int node_of(const Tensor& t);
  int find_node(const Tensor& t) const;
  void push_op(const char* name, std::function<void(GradStore&)> fn);

  bool recording_ = true;
  std::unordered_map<const void*, int> index_;
  std::vector<std::int64_t> node_numel_;
  std::vector<const void*> node_storage_;
  std::vector<std::shared_ptr<std::vector<double>>> node_keepalive_;
  std::vector<OpRec> ops_;
};

// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a taped scalar function. Coordinates where the second difference reveals
// a kink (e.g. relu at 0) are skipped.
double finite_difference_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                               const Tensor& x, double h);

}  // namespace linkpred
