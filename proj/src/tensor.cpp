#include "cdsrnp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace cdsrnp::ad {

namespace {

TensorPtr make_node(std::vector<std::size_t> shape, std::vector<TensorPtr> parents) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(numel(t->shape), 0.0);
  for (const auto& p : parents) {
    if (p->requires_grad) {
      t->requires_grad = true;
      break;
    }
  }
  if (t->requires_grad) t->grad.assign(t->data.size(), 0.0);
  t->parents = std::move(parents);
  return t;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
  }
}

// Row/column view of a rank-1 or rank-2 tensor (rank 1 = one row).
std::pair<std::size_t, std::size_t> as_rows_cols(const Tensor& t) {
  if (t.rank() == 1) return {1, t.shape[0]};
  if (t.rank() == 2) return {t.shape[0], t.shape[1]};
  throw std::invalid_argument("expected rank 1 or 2 tensor, got " + shape_str(t.shape));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// a[m x k] * b[k x n] += into c, ikj order.
void matmul_accum(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

double Tensor::scalar() const {
  if (!is_scalar()) {
    throw std::invalid_argument("scalar() on tensor of shape " + shape_str(shape));
  }
  return data[0];
}

void Tensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0);
}

std::string shape_str(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t numel(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

TensorPtr make_tensor(std::vector<std::size_t> shape, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("zero extent in shape " + shape_str(shape));
  }
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(numel(t->shape), 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->grad.assign(t->data.size(), 0.0);
  return t;
}

TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad) {
  auto t = make_tensor(std::move(shape), requires_grad);
  if (values.size() != t->data.size()) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not fill shape " + shape_str(t->shape));
  }
  t->data = std::move(values);
  return t;
}

TensorPtr make_tensor(std::vector<std::size_t> shape, std::initializer_list<double> values,
                      bool requires_grad) {
  return make_tensor(std::move(shape), std::vector<double>(values), requires_grad);
}

TensorPtr make_scalar(double value, bool requires_grad) {
  return make_tensor({1}, std::vector<double>{value}, requires_grad);
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  if (b->rank() != 2) {
    throw std::invalid_argument("matmul: right operand must be rank 2, got " +
                                shape_str(b->shape));
  }
  if (a->rank() != 1 && a->rank() != 2) {
    throw std::invalid_argument("matmul: left operand must be rank 1 or 2, got " +
                                shape_str(a->shape));
  }
  const auto [m, k] = as_rows_cols(*a);
  if (k != b->shape[0]) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " + shape_str(a->shape) +
                                " vs " + shape_str(b->shape));
  }
  const std::size_t n = b->shape[1];
  std::vector<std::size_t> out_shape =
      a->rank() == 1 ? std::vector<std::size_t>{n} : std::vector<std::size_t>{m, n};
  auto out = make_node(std::move(out_shape), {a, b});
  matmul_accum(a->data.data(), b->data.data(), out->data.data(), m, k, n);
  if (out->requires_grad) {
    const std::size_t mm = m, kk = k, nn = n;
    out->backprop = [a, b, mm, kk, nn](Tensor& self) {
      const double* g = self.grad.data();
      if (a->requires_grad) {
        // dA[i,l] += sum_j g[i,j] * b[l,j]
        double* ga = a->grad.data();
        const double* bd = b->data.data();
        for (std::size_t i = 0; i < mm; ++i) {
          const double* grow = g + i * nn;
          double* garow = ga + i * kk;
          for (std::size_t l = 0; l < kk; ++l) {
            const double* brow = bd + l * nn;
            double acc = 0.0;
            for (std::size_t j = 0; j < nn; ++j) acc += grow[j] * brow[j];
            garow[l] += acc;
          }
        }
      }
      if (b->requires_grad) {
        // dB[l,j] += sum_i a[i,l] * g[i,j]
        double* gb = b->grad.data();
        const double* ad = a->data.data();
        for (std::size_t i = 0; i < mm; ++i) {
          const double* grow = g + i * nn;
          const double* arow = ad + i * kk;
          for (std::size_t l = 0; l < kk; ++l) {
            const double av = arow[l];
            if (av == 0.0) continue;
            double* gbrow = gb + l * nn;
            for (std::size_t j = 0; j < nn; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return out;
}

TensorPtr transpose(const TensorPtr& a) {
  if (a->rank() != 2) {
    throw std::invalid_argument("transpose: expected rank 2, got " + shape_str(a->shape));
  }
  const std::size_t r = a->shape[0], c = a->shape[1];
  auto out = make_node({c, r}, {a});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out->data[j * r + i] = a->data[i * c + j];
  }
  if (out->requires_grad) {
    out->backprop = [a, r, c](Tensor& self) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) a->grad[i * c + j] += self.grad[j * r + i];
      }
    };
  }
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("add", *a, *b);
  auto out = make_node(a->shape, {a, b});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("sub", *a, *b);
  auto out = make_node(a->shape, {a, b});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] - b->data[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
      }
      if (b->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] -= self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  check_same_shape("mul", *a, *b);
  auto out = make_node(a->shape, {a, b});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * b->data[i];
  if (out->requires_grad) {
    out->backprop = [a, b](Tensor& self) {
      if (a->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * b->data[i];
      }
      if (b->requires_grad) {
        for (std::size_t i = 0; i < self.size(); ++i) b->grad[i] += self.grad[i] * a->data[i];
      }
    };
  }
  return out;
}

TensorPtr relu(const TensorPtr& a) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        if (a->data[i] > 0.0) a->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

TensorPtr sigmoid(const TensorPtr& a) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = stable_sigmoid(a->data[i]);
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        const double s = self.data[i];
        a->grad[i] += self.grad[i] * s * (1.0 - s);
      }
    };
  }
  return out;
}

TensorPtr exp(const TensorPtr& a) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = std::exp(a->data[i]);
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * self.data[i];
    };
  }
  return out;
}

TensorPtr log(const TensorPtr& a) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) {
    if (a->data[i] <= 0.0) {
      throw std::domain_error("log of non-positive value " + std::to_string(a->data[i]) +
                              " at flat index " + std::to_string(i));
    }
    out->data[i] = std::log(a->data[i]);
  }
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] / a->data[i];
    };
  }
  return out;
}

TensorPtr sqrt(const TensorPtr& a) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) {
    if (a->data[i] < 0.0) {
      throw std::domain_error("sqrt of negative value " + std::to_string(a->data[i]));
    }
    out->data[i] = std::sqrt(a->data[i]);
  }
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) {
        a->grad[i] += self.grad[i] * 0.5 / self.data[i];
      }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& a, double c) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] * c;
  if (out->requires_grad) {
    out->backprop = [a, c](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i] * c;
    };
  }
  return out;
}

TensorPtr add_const(const TensorPtr& a, double c) {
  auto out = make_node(a->shape, {a});
  for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = a->data[i] + c;
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
    };
  }
  return out;
}

TensorPtr bias_add(const TensorPtr& mat, const TensorPtr& vec) {
  if (mat->rank() != 2 || vec->rank() != 1 || mat->shape[1] != vec->shape[0]) {
    throw std::invalid_argument("bias_add: incompatible shapes " + shape_str(mat->shape) +
                                " vs " + shape_str(vec->shape));
  }
  const std::size_t r = mat->shape[0], c = mat->shape[1];
  auto out = make_node(mat->shape, {mat, vec});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out->data[i * c + j] = mat->data[i * c + j] + vec->data[j];
  }
  if (out->requires_grad) {
    out->backprop = [mat, vec, r, c](Tensor& self) {
      if (mat->requires_grad) {
        for (std::size_t i = 0; i < r * c; ++i) mat->grad[i] += self.grad[i];
      }
      if (vec->requires_grad) {
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) vec->grad[j] += self.grad[i * c + j];
        }
      }
    };
  }
  return out;
}

TensorPtr concat(const std::vector<TensorPtr>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  const auto& first = parts.front();
  if (axis >= first->rank()) {
    throw std::invalid_argument("concat: axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(first->shape));
  }
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p->rank() != first->rank()) {
      throw std::invalid_argument("concat: rank mismatch " + shape_str(first->shape) + " vs " +
                                  shape_str(p->shape));
    }
    for (std::size_t d = 0; d < p->rank(); ++d) {
      if (d != axis && p->shape[d] != first->shape[d]) {
        throw std::invalid_argument("concat: incompatible shapes " + shape_str(first->shape) +
                                    " vs " + shape_str(p->shape) + " along axis " +
                                    std::to_string(axis));
      }
    }
    total += p->shape[axis];
  }
  std::vector<std::size_t> out_shape = first->shape;
  out_shape[axis] = total;
  auto out = make_node(out_shape, parts);

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < out_shape.size(); ++d) inner *= out_shape[d];

  std::size_t offset = 0;  // in units of (extent * inner)
  for (const auto& p : parts) {
    const std::size_t block = p->shape[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p->data.data() + o * block, block,
                  out->data.data() + o * total * inner + offset);
    }
    offset += block;
  }
  if (out->requires_grad) {
    const std::size_t row = total * inner;
    out->backprop = [parts, outer, inner, row](Tensor& self) {
      std::size_t off = 0;
      for (const auto& p : parts) {
        const std::size_t block = p->size() / outer;  // extent along axis * inner
        if (p->requires_grad) {
          for (std::size_t o = 0; o < outer; ++o) {
            const double* g = self.grad.data() + o * row + off;
            double* pg = p->grad.data() + o * block;
            for (std::size_t i = 0; i < block; ++i) pg[i] += g[i];
          }
        }
        off += block;
      }
    };
  }
  return out;
}

TensorPtr slice(const TensorPtr& a, std::size_t axis, std::size_t start, std::size_t len) {
  if (axis >= a->rank()) {
    throw std::invalid_argument("slice: axis " + std::to_string(axis) + " out of range for " +
                                shape_str(a->shape));
  }
  if (start + len > a->shape[axis] || len == 0) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") invalid for " +
                                shape_str(a->shape));
  }
  std::vector<std::size_t> out_shape = a->shape;
  out_shape[axis] = len;
  auto out = make_node(out_shape, {a});

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a->shape[d];
  for (std::size_t d = axis + 1; d < a->rank(); ++d) inner *= a->shape[d];
  const std::size_t src_row = a->shape[axis] * inner;
  const std::size_t dst_row = len * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(a->data.data() + o * src_row + start * inner, dst_row,
                out->data.data() + o * dst_row);
  }
  if (out->requires_grad) {
    out->backprop = [a, outer, inner, src_row, dst_row, start](Tensor& self) {
      for (std::size_t o = 0; o < outer; ++o) {
        double* ga = a->grad.data() + o * src_row + start * inner;
        const double* g = self.grad.data() + o * dst_row;
        for (std::size_t i = 0; i < dst_row; ++i) ga[i] += g[i];
      }
    };
  }
  return out;
}

TensorPtr masked_softmax(const TensorPtr& scores, const std::vector<std::uint8_t>& mask) {
  const auto [r, c] = as_rows_cols(*scores);
  if (mask.size() != scores->size()) {
    throw std::invalid_argument("masked_softmax: mask size " + std::to_string(mask.size()) +
                                " does not match " + shape_str(scores->shape));
  }
  auto out = make_node(scores->shape, {scores});
  for (std::size_t i = 0; i < r; ++i) {
    const double* srow = scores->data.data() + i * c;
    const std::uint8_t* mrow = mask.data() + i * c;
    double* orow = out->data.data() + i * c;
    double mx = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (mrow[j] && (!any || srow[j] > mx)) {
        mx = srow[j];
        any = true;
      }
    }
    if (!any) continue;  // fully masked row stays all-zero
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (mrow[j]) {
        orow[j] = std::exp(srow[j] - mx);
        sum += orow[j];
      }
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < c; ++j) {
      if (mrow[j]) orow[j] *= inv;
    }
  }
  if (out->requires_grad) {
    auto m = mask;  // keep a copy alive for the backward pass
    const std::size_t rr = r, cc = c;
    out->backprop = [scores, m = std::move(m), rr, cc](Tensor& self) {
      for (std::size_t i = 0; i < rr; ++i) {
        const double* p = self.data.data() + i * cc;
        const double* g = self.grad.data() + i * cc;
        const std::uint8_t* mrow = m.data() + i * cc;
        double dot = 0.0;
        for (std::size_t j = 0; j < cc; ++j) {
          if (mrow[j]) dot += g[j] * p[j];
        }
        double* gs = scores->grad.data() + i * cc;
        for (std::size_t j = 0; j < cc; ++j) {
          if (mrow[j]) gs[j] += p[j] * (g[j] - dot);
        }
      }
    };
  }
  return out;
}

TensorPtr mean(const TensorPtr& a, std::size_t axis) {
  if (axis >= a->rank()) {
    throw std::invalid_argument("mean: axis " + std::to_string(axis) + " out of range for " +
                                shape_str(a->shape));
  }
  const std::size_t len = a->shape[axis];
  if (len == 0) throw std::invalid_argument("mean over zero-length axis");
  std::vector<std::size_t> out_shape;
  for (std::size_t d = 0; d < a->rank(); ++d) {
    if (d != axis) out_shape.push_back(a->shape[d]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  auto out = make_node(out_shape, {a});

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a->shape[d];
  for (std::size_t d = axis + 1; d < a->rank(); ++d) inner *= a->shape[d];
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* src = a->data.data() + (o * len + l) * inner;
      double* dst = out->data.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  for (double& v : out->data) v *= inv;
  if (out->requires_grad) {
    out->backprop = [a, outer, inner, len, inv](Tensor& self) {
      for (std::size_t o = 0; o < outer; ++o) {
        const double* g = self.grad.data() + o * inner;
        for (std::size_t l = 0; l < len; ++l) {
          double* ga = a->grad.data() + (o * len + l) * inner;
          for (std::size_t i = 0; i < inner; ++i) ga[i] += g[i] * inv;
        }
      }
    };
  }
  return out;
}

TensorPtr sum_all(const TensorPtr& a) {
  auto out = make_node({1}, {a});
  double acc = 0.0;
  for (double v : a->data) acc += v;
  out->data[0] = acc;
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      const double g = self.grad[0];
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += g;
    };
  }
  return out;
}

TensorPtr rows(const TensorPtr& table, std::span<const std::size_t> indices) {
  if (table->rank() != 2) {
    throw std::invalid_argument("rows: table must be rank 2, got " + shape_str(table->shape));
  }
  const std::size_t n_rows = table->shape[0], width = table->shape[1];
  for (std::size_t idx : indices) {
    if (idx >= n_rows) {
      throw std::out_of_range("rows: index " + std::to_string(idx) + " out of range for " +
                              shape_str(table->shape));
    }
  }
  auto out = make_node({indices.size(), width}, {table});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(table->data.data() + indices[i] * width, width, out->data.data() + i * width);
  }
  if (out->requires_grad) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    out->backprop = [table, idx = std::move(idx), width](Tensor& self) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double* dst = table->grad.data() + idx[i] * width;
        const double* g = self.grad.data() + i * width;
        for (std::size_t j = 0; j < width; ++j) dst[j] += g[j];
      }
    };
  }
  return out;
}

TensorPtr reshape(const TensorPtr& a, std::vector<std::size_t> new_shape) {
  if (numel(new_shape) != a->size()) {
    throw std::invalid_argument("reshape: " + shape_str(a->shape) + " to " +
                                shape_str(new_shape) + " changes element count");
  }
  auto out = make_node(std::move(new_shape), {a});
  out->data = a->data;
  if (out->requires_grad) {
    out->backprop = [a](Tensor& self) {
      for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += self.grad[i];
    };
  }
  return out;
}

namespace {

// Post-order over the requires_grad subgraph: parents precede children.
std::vector<Tensor*> topo_order(Tensor* root) {
  std::vector<Tensor*> order;
  if (!root->requires_grad) return order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  visited.insert(root);
  stack.emplace_back(root, 0);
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (next < t->parents.size()) {
      Tensor* p = t->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const TensorPtr& loss) {
  if (!loss->is_scalar()) {
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss->shape));
  }
  if (!loss->requires_grad) return;
  auto order = topo_order(loss.get());
  // Non-leaf gradients are per-pass scratch; leaf gradients accumulate.
  for (Tensor* t : order) {
    if (!t->is_leaf()) t->zero_grad();
  }
  loss->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

void zero_all_grads(const TensorPtr& root) {
  for (Tensor* t : topo_order(root.get())) t->zero_grad();
}

}  // namespace cdsrnp::ad
