#include "linkpred/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "linkpred/errors.hpp"

namespace linkpred {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ContractError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.shape().size() != 2)
    throw ContractError(std::string(op) + ": expected rank-2 tensor, got " +
                        shape_str(t.shape()));
}

void check_finite(const char* op, std::span<const double> xs) {
  for (double v : xs)
    if (!std::isfinite(v))
      throw NumericError(std::string(op) + " produced a non-finite value");
}

std::vector<double>& slot(std::vector<std::vector<double>>& g, int node, std::int64_t numel) {
  auto& v = g[static_cast<std::size_t>(node)];
  if (v.empty()) v.assign(static_cast<std::size_t>(numel), 0.0);
  return v;
}

}  // namespace

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(const Shape& shape) { return constant(shape, 0.0); }

Tensor Tensor::constant(const Shape& shape, double value) {
  return from(shape, std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), value));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values) {
  if (shape.empty() || shape.size() > 2)
    throw ContractError("tensor rank must be 1 or 2, got " + shape_str(shape));
  for (auto d : shape)
    if (d < 0) throw ContractError("negative dimension in " + shape_str(shape));
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
    throw ContractError("tensor data size " + std::to_string(values.size()) +
                        " does not match shape " + shape_str(shape));
  Tensor t;
  t.shape_ = shape;
  t.buf_ = std::make_shared<std::vector<double>>(std::move(values));
  return t;
}

std::int64_t Tensor::numel() const { return buf_ ? static_cast<std::int64_t>(buf_->size()) : 0; }

std::int64_t Tensor::rows() const {
  if (shape_.size() != 2) throw ContractError("rows() on tensor of shape " + shape_str(shape_));
  return shape_[0];
}

std::int64_t Tensor::cols() const {
  if (shape_.size() != 2) throw ContractError("cols() on tensor of shape " + shape_str(shape_));
  return shape_[1];
}

std::span<double> Tensor::data() {
  if (!buf_) return {};
  return {buf_->data(), buf_->size()};
}

std::span<const double> Tensor::data() const {
  if (!buf_) return {};
  return {buf_->data(), buf_->size()};
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
  return (*buf_)[static_cast<std::size_t>(r * cols() + c)];
}

double Tensor::value() const {
  if (numel() != 1)
    throw ContractError("value() on tensor of shape " + shape_str(shape_));
  return (*buf_)[0];
}

// ---------------------------------------------------------- SparseMatrix

SparseMatrix SparseMatrix::from_triplets(
    std::int64_t rows, std::int64_t cols,
    const std::vector<std::tuple<std::int32_t, std::int32_t, double>>& items) {
  SparseMatrix s;
  s.rows = rows;
  s.cols = cols;
  auto sorted = items;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) < std::get<1>(b);
  });
  s.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
  std::int32_t prev_i = -1, prev_j = -1;
  for (const auto& [i, j, v] : sorted) {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw ContractError("sparse triplet (" + std::to_string(i) + "," + std::to_string(j) +
                          ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    if (i == prev_i && j == prev_j) {
      s.val.back() += v;  // merge duplicate entries
      continue;
    }
    s.col.push_back(j);
    s.val.push_back(v);
    s.offsets[static_cast<std::size_t>(i) + 1]++;
    prev_i = i;
    prev_j = j;
  }
  for (std::size_t i = 1; i < s.offsets.size(); ++i) s.offsets[i] += s.offsets[i - 1];
  return s;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.offsets.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (auto j : col) t.offsets[static_cast<std::size_t>(j) + 1]++;
  for (std::size_t i = 1; i < t.offsets.size(); ++i) t.offsets[i] += t.offsets[i - 1];
  t.col.resize(col.size());
  t.val.resize(val.size());
  std::vector<std::int64_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t k = offsets[static_cast<std::size_t>(i)];
         k < offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      auto j = col[static_cast<std::size_t>(k)];
      auto pos = cursor[static_cast<std::size_t>(j)]++;
      t.col[static_cast<std::size_t>(pos)] = static_cast<std::int32_t>(i);
      t.val[static_cast<std::size_t>(pos)] = val[static_cast<std::size_t>(k)];
    }
  return t;
}

// ------------------------------------------------------------- Gradients

const std::vector<double>* Gradients::find(const Tensor& t) const {
  auto it = by_storage_.find(t.storage_key());
  return it == by_storage_.end() ? nullptr : &it->second;
}

std::vector<double> Gradients::dense(const Tensor& t) const {
  if (const auto* g = find(t)) return *g;
  return std::vector<double>(static_cast<std::size_t>(t.numel()), 0.0);
}

// ------------------------------------------------------------------ Tape

bool Tape::track(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

int Tape::node_of(const Tensor& t) {
  auto it = index_.find(t.storage_key());
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(node_numel_.size());
  index_.emplace(t.storage_key(), id);
  node_numel_.push_back(t.numel());
  node_storage_.push_back(t.storage_key());
  node_keepalive_.push_back(t.buf_);
  return id;
}

int Tape::find_node(const Tensor& t) const {
  auto it = index_.find(t.storage_key());
  return it == index_.end() ? -1 : it->second;
}

void Tape::push_op(const char* name, std::function<void(GradStore&)> fn) {
  ops_.push_back(OpRec{name, std::move(fn)});
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_defined("add", a);
  require_defined("add", b);
  require_same_shape("add", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bs[i];
  check_finite("add", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a, &b})) {
    y.set_requires_grad(true);
    int ia = node_of(a), ib = node_of(b), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("add", [ia, ib, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      auto& gb = slot(g, ib, n);
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i];
        gb[i] += go[i];
      }
    });
  }
  return y;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_defined("sub", a);
  require_defined("sub", b);
  require_same_shape("sub", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bs[i];
  check_finite("sub", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a, &b})) {
    y.set_requires_grad(true);
    int ia = node_of(a), ib = node_of(b), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("sub", [ia, ib, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      auto& gb = slot(g, ib, n);
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i];
        gb[i] -= go[i];
      }
    });
  }
  return y;
}

Tensor Tape::scale(const Tensor& a, double c) {
  require_defined("scale", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= c;
  check_finite("scale", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("scale", [ia, iy, c, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += c * go[i];
    });
  }
  return y;
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
  require_defined("add_scalar", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += c;
  check_finite("add_scalar", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("add_scalar", [ia, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
  }
  return y;
}

Tensor Tape::hadamard(const Tensor& a, const Tensor& b) {
  require_defined("hadamard", a);
  require_defined("hadamard", b);
  require_same_shape("hadamard", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto bs = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bs[i];
  check_finite("hadamard", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a, &b})) {
    y.set_requires_grad(true);
    int ia = node_of(a), ib = node_of(b), iy = node_of(y);
    Tensor av = a, bv = b;
    push_op("hadamard", [ia, ib, iy, av, bv](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, av.numel());
      auto& gb = slot(g, ib, bv.numel());
      auto as = av.data(), bs2 = bv.data();
      for (std::size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i] * bs2[i];
        gb[i] += go[i] * as[i];
      }
    });
  }
  return y;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (a.cols() != b.rows())
    throw ContractError("matmul: shape mismatch " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<std::size_t>(m * n));
  {
    CMapMat A(a.data().data(), m, k), B(b.data().data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }
  check_finite("matmul", out);
  Tensor y = Tensor::from({m, n}, std::move(out));
  if (track({&a, &b})) {
    y.set_requires_grad(true);
    int ia = node_of(a), ib = node_of(b), iy = node_of(y);
    Tensor av = a, bv = b;
    push_op("matmul", [ia, ib, iy, av, bv, m, k, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      CMapMat GO(go.data(), m, n);
      CMapMat A(av.data().data(), m, k), B(bv.data().data(), k, n);
      MapMat GA(slot(g, ia, m * k).data(), m, k);
      GA.noalias() += GO * B.transpose();
      MapMat GB(slot(g, ib, k * n).data(), k, n);
      GB.noalias() += A.transpose() * GO;
    });
  }
  return y;
}

Tensor Tape::transpose(const Tensor& a) {
  require_defined("transpose", a);
  require_rank2("transpose", a);
  const auto m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<std::size_t>(m * n));
  {
    CMapMat A(a.data().data(), m, n);
    MapMat T(out.data(), n, m);
    T = A.transpose();
  }
  Tensor y = Tensor::from({n, m}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    push_op("transpose", [ia, iy, m, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      CMapMat GO(go.data(), n, m);
      MapMat GA(slot(g, ia, m * n).data(), m, n);
      GA += GO.transpose();
    });
  }
  return y;
}

Tensor Tape::relu(const Tensor& a) {
  require_defined("relu", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  check_finite("relu", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    Tensor av = a;
    push_op("relu", [ia, iy, av](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, av.numel());
      auto as = av.data();
      for (std::size_t i = 0; i < go.size(); ++i)
        if (as[i] > 0.0) ga[i] += go[i];
    });
  }
  return y;
}

Tensor Tape::sigmoid(const Tensor& a) {
  require_defined("sigmoid", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  check_finite("sigmoid", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    Tensor yv = y;
    push_op("sigmoid", [ia, iy, yv](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, yv.numel());
      auto ys = yv.data();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * ys[i] * (1.0 - ys[i]);
    });
  }
  return y;
}

Tensor Tape::tanh(const Tensor& a) {
  require_defined("tanh", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = std::tanh(v);
  check_finite("tanh", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    Tensor yv = y;
    push_op("tanh", [ia, iy, yv](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, yv.numel());
      auto ys = yv.data();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - ys[i] * ys[i]);
    });
  }
  return y;
}

Tensor Tape::softplus(const Tensor& a) {
  require_defined("softplus", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
  check_finite("softplus", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    Tensor av = a;
    push_op("softplus", [ia, iy, av](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, av.numel());
      auto as = av.data();
      for (std::size_t i = 0; i < go.size(); ++i) {
        double x = as[i];
        double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        ga[i] += go[i] * s;
      }
    });
  }
  return y;
}

Tensor Tape::abs(const Tensor& a) {
  require_defined("abs", a);
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = std::fabs(v);
  check_finite("abs", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    Tensor av = a;
    push_op("abs", [ia, iy, av](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, av.numel());
      auto as = av.data();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (as[i] > 0.0)
          ga[i] += go[i];
        else if (as[i] < 0.0)
          ga[i] -= go[i];
      }
    });
  }
  return y;
}

Tensor Tape::reduce_sum(const Tensor& a) {
  require_defined("reduce_sum", a);
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  std::vector<double> out{s};
  check_finite("reduce_sum", out);
  Tensor y = Tensor::from({1}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("reduce_sum", [ia, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (auto& v : ga) v += go[0];
    });
  }
  return y;
}

Tensor Tape::reduce_mean(const Tensor& a) {
  require_defined("reduce_mean", a);
  if (a.numel() == 0) throw ContractError("reduce_mean of empty tensor");
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  double inv = 1.0 / static_cast<double>(a.numel());
  std::vector<double> out{s * inv};
  check_finite("reduce_mean", out);
  Tensor y = Tensor::from({1}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("reduce_mean", [ia, iy, n, inv](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (auto& v : ga) v += go[0] * inv;
    });
  }
  return y;
}

Tensor Tape::reduce_max(const Tensor& a) {
  require_defined("reduce_max", a);
  if (a.numel() == 0) throw ContractError("reduce_max of empty tensor");
  auto as = a.data();
  std::size_t arg = 0;
  for (std::size_t i = 1; i < as.size(); ++i)
    if (as[i] > as[arg]) arg = i;
  std::vector<double> out{as[arg]};
  check_finite("reduce_max", out);
  Tensor y = Tensor::from({1}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("reduce_max", [ia, iy, n, arg](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      slot(g, ia, n)[arg] += go[0];
    });
  }
  return y;
}

Tensor Tape::slice_rows(const Tensor& a, std::int64_t row_begin, std::int64_t row_end) {
  require_defined("slice_rows", a);
  require_rank2("slice_rows", a);
  if (row_begin < 0 || row_end > a.rows() || row_begin > row_end)
    throw ContractError("slice_rows [" + std::to_string(row_begin) + "," +
                        std::to_string(row_end) + ") outside " + shape_str(a.shape()));
  const auto c = a.cols();
  auto as = a.data();
  std::vector<double> out(as.begin() + static_cast<std::size_t>(row_begin * c),
                          as.begin() + static_cast<std::size_t>(row_end * c));
  Tensor y = Tensor::from({row_end - row_begin, c}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("slice_rows", [ia, iy, n, row_begin, c](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      std::size_t base = static_cast<std::size_t>(row_begin * c);
      for (std::size_t i = 0; i < go.size(); ++i) ga[base + i] += go[i];
    });
  }
  return y;
}

Tensor Tape::embedding_lookup(const Tensor& table, const std::vector<std::int32_t>& ids) {
  require_defined("embedding_lookup", table);
  require_rank2("embedding_lookup", table);
  const auto c = table.cols();
  std::vector<double> out;
  out.reserve(ids.size() * static_cast<std::size_t>(c));
  auto ts = table.data();
  for (auto id : ids) {
    if (id < 0 || id >= table.rows())
      throw ContractError("embedding_lookup: id " + std::to_string(id) + " outside table " +
                          shape_str(table.shape()));
    auto base = static_cast<std::size_t>(static_cast<std::int64_t>(id) * c);
    out.insert(out.end(), ts.begin() + base, ts.begin() + base + static_cast<std::size_t>(c));
  }
  Tensor y = Tensor::from({static_cast<std::int64_t>(ids.size()), c}, std::move(out));
  if (track({&table})) {
    y.set_requires_grad(true);
    int it = node_of(table), iy = node_of(y);
    std::int64_t n = table.numel();
    auto idv = ids;
    push_op("embedding_lookup", [it, iy, n, c, idv](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& gt = slot(g, it, n);
      for (std::size_t r = 0; r < idv.size(); ++r) {
        auto base = static_cast<std::size_t>(static_cast<std::int64_t>(idv[r]) * c);
        auto src = r * static_cast<std::size_t>(c);
        for (std::size_t k = 0; k < static_cast<std::size_t>(c); ++k)
          gt[base + k] += go[src + k];
      }
    });
  }
  return y;
}

Tensor Tape::reshape(const Tensor& a, const Shape& shape) {
  require_defined("reshape", a);
  if (shape_numel(shape) != a.numel())
    throw ContractError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                        " changes element count");
  Tensor y = Tensor::from(shape, std::vector<double>(a.data().begin(), a.data().end()));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("reshape", [ia, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
  }
  return y;
}

Tensor Tape::add_rowwise(const Tensor& a, const Tensor& row) {
  require_defined("add_rowwise", a);
  require_defined("add_rowwise", row);
  require_rank2("add_rowwise", a);
  if (row.shape().size() != 1 || row.shape()[0] != a.cols())
    throw ContractError("add_rowwise: shape mismatch " + shape_str(a.shape()) + " vs " +
                        shape_str(row.shape()));
  const auto m = a.rows(), c = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto rs = row.data();
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t k = 0; k < c; ++k)
      out[static_cast<std::size_t>(r * c + k)] += rs[static_cast<std::size_t>(k)];
  check_finite("add_rowwise", out);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  if (track({&a, &row})) {
    y.set_requires_grad(true);
    int ia = node_of(a), ir = node_of(row), iy = node_of(y);
    push_op("add_rowwise", [ia, ir, iy, m, c](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, m * c);
      auto& gr = slot(g, ir, c);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t k = 0; k < c; ++k)
          gr[static_cast<std::size_t>(k)] += go[static_cast<std::size_t>(r * c + k)];
    });
  }
  return y;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of no tensors");
  std::int64_t m = -1, total = 0;
  for (const auto& p : parts) {
    require_defined("concat_cols", p);
    require_rank2("concat_cols", p);
    if (m < 0) m = p.rows();
    if (p.rows() != m)
      throw ContractError("concat_cols: row mismatch " + shape_str(parts[0].shape()) + " vs " +
                          shape_str(p.shape()));
    total += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(m * total));
  std::int64_t off = 0;
  for (const auto& p : parts) {
    const auto c = p.cols();
    auto ps = p.data();
    for (std::int64_t r = 0; r < m; ++r)
      std::copy_n(ps.begin() + static_cast<std::size_t>(r * c), static_cast<std::size_t>(c),
                  out.begin() + static_cast<std::size_t>(r * total + off));
    off += c;
  }
  Tensor y = Tensor::from({m, total}, std::move(out));
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (recording_ && any) {
    y.set_requires_grad(true);
    std::vector<int> in_nodes;
    std::vector<std::int64_t> in_cols, in_numel;
    for (const auto& p : parts) {
      in_nodes.push_back(node_of(p));
      in_cols.push_back(p.cols());
      in_numel.push_back(p.numel());
    }
    int iy = node_of(y);
    push_op("concat_cols", [iy, m, total, in_nodes, in_cols, in_numel](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      std::int64_t off2 = 0;
      for (std::size_t p = 0; p < in_nodes.size(); ++p) {
        auto& gp = slot(g, in_nodes[p], in_numel[p]);
        const auto c = in_cols[p];
        for (std::int64_t r = 0; r < m; ++r)
          for (std::int64_t k = 0; k < c; ++k)
            gp[static_cast<std::size_t>(r * c + k)] +=
                go[static_cast<std::size_t>(r * total + off2 + k)];
        off2 += c;
      }
    });
  }
  return y;
}

Tensor Tape::concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat of no tensors");
  std::int64_t total = 0;
  for (const auto& p : parts) {
    require_defined("concat", p);
    if (p.shape().size() != 1)
      throw ContractError("concat: expected rank-1 tensors, got " + shape_str(p.shape()));
    total += p.shape()[0];
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor y = Tensor::from({total}, std::move(out));
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (recording_ && any) {
    y.set_requires_grad(true);
    std::vector<int> in_nodes;
    std::vector<std::int64_t> in_numel;
    for (const auto& p : parts) {
      in_nodes.push_back(node_of(p));
      in_numel.push_back(p.numel());
    }
    int iy = node_of(y);
    push_op("concat", [iy, in_nodes, in_numel](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      std::size_t off = 0;
      for (std::size_t p = 0; p < in_nodes.size(); ++p) {
        auto& gp = slot(g, in_nodes[p], in_numel[p]);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += go[off + i];
        off += gp.size();
      }
    });
  }
  return y;
}

Tensor Tape::pad_rows(const Tensor& a, std::int64_t total_rows) {
  require_defined("pad_rows", a);
  require_rank2("pad_rows", a);
  if (total_rows < a.rows())
    throw ContractError("pad_rows: target " + std::to_string(total_rows) + " below " +
                        shape_str(a.shape()));
  const auto c = a.cols();
  std::vector<double> out(static_cast<std::size_t>(total_rows * c), 0.0);
  std::copy(a.data().begin(), a.data().end(), out.begin());
  Tensor y = Tensor::from({total_rows, c}, std::move(out));
  if (track({&a})) {
    y.set_requires_grad(true);
    int ia = node_of(a), iy = node_of(y);
    std::int64_t n = a.numel();
    push_op("pad_rows", [ia, iy, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& ga = slot(g, ia, n);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
    });
  }
  return y;
}

Tensor Tape::spmm(const SparseMatrix& s, const Tensor& x) {
  require_defined("spmm", x);
  require_rank2("spmm", x);
  if (s.cols != x.rows())
    throw ContractError("spmm: shape mismatch " + std::to_string(s.rows) + "x" +
                        std::to_string(s.cols) + " x " + shape_str(x.shape()));
  const auto f = x.cols();
  std::vector<double> out(static_cast<std::size_t>(s.rows * f), 0.0);
  auto xs = x.data();
  for (std::int64_t i = 0; i < s.rows; ++i) {
    double* dst = out.data() + static_cast<std::size_t>(i * f);
    for (std::int64_t k = s.offsets[static_cast<std::size_t>(i)];
         k < s.offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      const double v = s.val[static_cast<std::size_t>(k)];
      const double* src =
          xs.data() + static_cast<std::size_t>(static_cast<std::int64_t>(s.col[static_cast<std::size_t>(k)]) * f);
      for (std::int64_t j = 0; j < f; ++j) dst[j] += v * src[j];
    }
  }
  check_finite("spmm", out);
  Tensor y = Tensor::from({s.rows, f}, std::move(out));
  if (track({&x})) {
    y.set_requires_grad(true);
    int ix = node_of(x), iy = node_of(y);
    SparseMatrix st = s.transposed();
    std::int64_t n = x.numel();
    push_op("spmm", [ix, iy, st, f, n](GradStore& g) {
      const auto& go = g[static_cast<std::size_t>(iy)];
      if (go.empty()) return;
      auto& gx = slot(g, ix, n);
      for (std::int64_t i = 0; i < st.rows; ++i) {
        double* dst = gx.data() + static_cast<std::size_t>(i * f);
        for (std::int64_t k = st.offsets[static_cast<std::size_t>(i)];
             k < st.offsets[static_cast<std::size_t>(i) + 1]; ++k) {
          const double v = st.val[static_cast<std::size_t>(k)];
          const double* src =
              go.data() +
              static_cast<std::size_t>(static_cast<std::int64_t>(st.col[static_cast<std::size_t>(k)]) * f);
          for (std::int64_t j = 0; j < f; ++j) dst[j] += v * src[j];
        }
      }
    });
  }
  return y;
}

Gradients Tape::backward(const Tensor& loss) {
  require_defined("backward", loss);
  if (loss.numel() != 1)
    throw ContractError("backward: loss must be scalar-shaped, got " + shape_str(loss.shape()));
  Gradients result;
  int root = find_node(loss);
  if (root < 0) return result;  // loss never touched the tape: all gradients zero
  GradStore store(node_numel_.size());
  store[static_cast<std::size_t>(root)].assign(1, 1.0);
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward(store);
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store[i].empty()) continue;
    check_finite("backward", store[i]);
    result.by_storage_.emplace(node_storage_[i], std::move(store[i]));
  }
  return result;
}

// ----------------------------------------------------- finite differences

double finite_difference_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                               const Tensor& x, double h) {
  if (h <= 0.0) throw ContractError("finite_difference_check: h must be positive");
  std::vector<double> base(x.data().begin(), x.data().end());

  Tape tape;
  Tensor xv = Tensor::from(x.shape(), base);
  xv.set_requires_grad(true);
  Tensor loss = f(tape, xv);
  if (loss.numel() != 1)
    throw ContractError("finite_difference_check: function must return a scalar");
  const double f0 = loss.value();
  std::vector<double> analytic = tape.backward(loss).dense(xv);

  auto eval_at = [&](std::size_t i, double xi) {
    std::vector<double> pert = base;
    pert[i] = xi;
    Tape t(false);
    Tensor xp = Tensor::from(x.shape(), std::move(pert));
    return f(t, xp).value();
  };

  const double kink_tol = std::sqrt(h) * h * std::max(1.0, std::fabs(f0));
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double fp = eval_at(i, base[i] + h);
    const double fm = eval_at(i, base[i] - h);
    if (std::fabs(fp + fm - 2.0 * f0) > kink_tol) continue;  // non-smooth point
    const double central = (fp - fm) / (2.0 * h);
    const double rel = std::fabs(analytic[i] - central) / std::max(1.0, std::fabs(analytic[i]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace linkpred
