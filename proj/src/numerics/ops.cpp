#include "vmap/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

namespace vmap::numerics {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

Tensor make_output(Tape& tape, Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs) {
  return Tensor::from(std::move(shape), std::move(values), tape.tracks(inputs));
}

template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, const Tensor& x, Forward f, Derivative df) {
  std::vector<double> values(x.size());
  auto in = x.data();
  std::transform(in.begin(), in.end(), values.begin(), f);
  Tensor out = make_output(tape, x.shape(), std::move(values), {&x});
  if (out.requires_grad()) {
    tape.record([x, out, df]() mutable {
      auto gx = x.grad();
      auto go = out.grad();
      auto xv = x.data();
      auto ov = out.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * df(xv[i], ov[i]);
    });
  }
  return out;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> values(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = values.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  Tensor out = make_output(tape, {m, n}, std::move(values), {&a, &b});
  if (out.requires_grad()) {
    tape.record([a, b, out, m, k, n]() mutable {
      auto go = out.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
            ga[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
          }
        }
      }
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a[i] + b[i];
  Tensor out = make_output(tape, a.shape(), std::move(values), {&a, &b});
  if (out.requires_grad()) {
    tape.record([a, b, out]() mutable {
      auto go = out.grad();
      if (a.requires_grad()) {
        auto g = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
      }
      if (b.requires_grad()) {
        auto g = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a[i] - b[i];
  Tensor out = make_output(tape, a.shape(), std::move(values), {&a, &b});
  if (out.requires_grad()) {
    tape.record([a, b, out]() mutable {
      auto go = out.grad();
      if (a.requires_grad()) {
        auto g = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
      }
      if (b.requires_grad()) {
        auto g = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a[i] * b[i];
  Tensor out = make_output(tape, a.shape(), std::move(values), {&a, &b});
  if (out.requires_grad()) {
    tape.record([a, b, out]() mutable {
      auto go = out.grad();
      if (a.requires_grad()) {
        auto g = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * b[i];
      }
      if (b.requires_grad()) {
        auto g = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary(
      tape, a, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1) throw ShapeError("add_bias: bias must be rank 1, got " + shape_string(bias.shape()));
  std::size_t groups = 0, group_size = 0;
  bool per_row = false;
  if (x.rank() == 2 && x.dim(1) == bias.dim(0)) {
    per_row = true;
    groups = x.dim(0);
    group_size = x.dim(1);
  } else if (x.rank() == 3 && x.dim(0) == bias.dim(0)) {
    groups = x.dim(0);
    group_size = x.dim(1) * x.dim(2);
  } else {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " incompatible with " +
                     shape_string(x.shape()));
  }
  std::vector<double> values(x.data().begin(), x.data().end());
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t j = 0; j < group_size; ++j) {
      values[g * group_size + j] += per_row ? bias[j] : bias[g];
    }
  }
  Tensor out = make_output(tape, x.shape(), std::move(values), {&x, &bias});
  if (out.requires_grad()) {
    tape.record([x, bias, out, groups, group_size, per_row]() mutable {
      auto go = out.grad();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t j = 0; j < group_size; ++j) {
            gb[per_row ? j : g] += go[g * group_size + j];
          }
        }
      }
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor concat(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape trailing(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t leading = 0;
  std::vector<double> values;
  bool track = false;
  for (const Tensor& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    if (t != trailing) {
      throw ShapeError("concat: trailing dimensions differ: " + shape_string(parts[0].shape()) +
                       " vs " + shape_string(p.shape()));
    }
    leading += p.dim(0);
    values.insert(values.end(), p.data().begin(), p.data().end());
    track = track || tape.tracks({&p});
  }
  Shape shape{leading};
  shape.insert(shape.end(), trailing.begin(), trailing.end());
  Tensor out = Tensor::from(std::move(shape), std::move(values), track);
  if (track) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record([inputs, out]() mutable {
      auto go = out.grad();
      std::size_t offset = 0;
      for (Tensor& p : inputs) {
        if (p.requires_grad()) {
          auto g = p.grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Tensor out = make_output(tape, std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {&x});
  if (out.requires_grad()) {
    tape.record([x, out]() mutable {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t offset, std::size_t count) {
  if (count == 0 || offset + count > x.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + count) +
                     ") out of bounds for " + shape_string(x.shape()));
  }
  auto in = x.data();
  Tensor out = make_output(tape, {count}, std::vector<double>(in.begin() + offset, in.begin() + offset + count), {&x});
  if (out.requires_grad()) {
    tape.record([x, out, offset, count]() mutable {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < count; ++i) gx[offset + i] += go[i];
    });
  }
  return out;
}

Tensor embedding(Tape& tape, const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be rank 2, got " + shape_string(table.shape()));
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  std::vector<double> values;
  values.reserve(ids.size() * d);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " outside [0, " + std::to_string(rows) + ")");
    }
    auto row = table.data().subspan(static_cast<std::size_t>(id) * d, d);
    values.insert(values.end(), row.begin(), row.end());
  }
  Tensor out = make_output(tape, {ids.size(), d}, std::move(values), {&table});
  if (out.requires_grad()) {
    std::vector<int> saved(ids.begin(), ids.end());
    tape.record([table, out, saved, d]() mutable {
      auto gt = table.grad();
      auto go = out.grad();
      for (std::size_t r = 0; r < saved.size(); ++r) {
        const std::size_t base = static_cast<std::size_t>(saved[r]) * d;
        for (std::size_t j = 0; j < d; ++j) gt[base + j] += go[r * d + j];
      }
    });
  }
  return out;
}

Tensor embed_grid(Tape& tape, const Tensor& table, std::span<const int> ids, std::size_t height,
                  std::size_t width) {
  if (table.rank() != 2) throw ShapeError("embed_grid: table must be rank 2, got " + shape_string(table.shape()));
  if (ids.size() != height * width) {
    throw ShapeError("embed_grid: " + std::to_string(ids.size()) + " ids for a " + std::to_string(height) + "x" +
                     std::to_string(width) + " grid");
  }
  const std::size_t symbols = table.dim(0), d = table.dim(1), cells = ids.size();
  std::vector<double> values(d * cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const int id = ids[cell];
    if (id < 0 || static_cast<std::size_t>(id) >= symbols) {
      throw std::out_of_range("embed_grid: symbol " + std::to_string(id) + " outside table");
    }
    for (std::size_t j = 0; j < d; ++j) values[j * cells + cell] = table[static_cast<std::size_t>(id) * d + j];
  }
  Tensor out = make_output(tape, {d, height, width}, std::move(values), {&table});
  if (out.requires_grad()) {
    std::vector<int> saved(ids.begin(), ids.end());
    tape.record([table, out, saved, d, cells]() mutable {
      auto gt = table.grad();
      auto go = out.grad();
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const std::size_t base = static_cast<std::size_t>(saved[cell]) * d;
        for (std::size_t j = 0; j < d; ++j) gt[base + j] += go[j * cells + cell];
      }
    });
  }
  return out;
}

namespace {

struct ConvGeometry {
  std::size_t in_channels, out_channels, height, width;
};

// Valid output range along one axis for kernel tap offset `shift` in {-1, 0, 1}.
inline void tap_range(std::ptrdiff_t shift, std::size_t extent, std::size_t& lo, std::size_t& hi) {
  lo = shift < 0 ? 1 : 0;
  hi = shift > 0 ? extent - 1 : extent;
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel) {
  if (input.rank() != 3) throw ShapeError("conv2d: input must be [C x H x W], got " + shape_string(input.shape()));
  if (kernel.rank() != 4 || kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw ShapeError("conv2d: kernel must be [C_out x C_in x 3 x 3], got " + shape_string(kernel.shape()));
  }
  if (kernel.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                     std::to_string(input.dim(0)));
  }
  const ConvGeometry g{input.dim(0), kernel.dim(0), input.dim(1), input.dim(2)};
  const std::size_t plane = g.height * g.width;
  std::vector<double> values(g.out_channels * plane, 0.0);
  auto in = input.data();
  auto k = kernel.data();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    double* dst = values.data() + o * plane;
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* src = in.data() + c * plane;
      const double* taps = k.data() + (o * g.in_channels + c) * 9;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        std::size_t y0, y1;
        tap_range(dy, g.height, y0, y1);
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          const double w = taps[(dy + 1) * 3 + (dx + 1)];
          if (w == 0.0) continue;
          std::size_t x0, x1;
          tap_range(dx, g.width, x0, x1);
          for (std::size_t y = y0; y < y1; ++y) {
            const double* srow = src + (y + dy) * g.width + dx;
            double* drow = dst + y * g.width;
            for (std::size_t x = x0; x < x1; ++x) drow[x] += w * srow[x];
          }
        }
      }
    }
  }
  Tensor out = make_output(tape, {g.out_channels, g.height, g.width}, std::move(values), {&input, &kernel});
  if (out.requires_grad()) {
    tape.record([input, kernel, out, g, plane]() mutable {
      auto go = out.grad();
      auto in = input.data();
      auto k = kernel.data();
      const bool want_input = input.requires_grad();
      const bool want_kernel = kernel.requires_grad();
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        const double* gout = go.data() + o * plane;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          const double* src = in.data() + c * plane;
          const std::size_t tap_base = (o * g.in_channels + c) * 9;
          for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
            std::size_t y0, y1;
            tap_range(dy, g.height, y0, y1);
            for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
              std::size_t x0, x1;
              tap_range(dx, g.width, x0, x1);
              const std::size_t tap = tap_base + (dy + 1) * 3 + (dx + 1);
              const double w = k[tap];
              double acc = 0.0;
              for (std::size_t y = y0; y < y1; ++y) {
                const std::size_t row = (y + dy) * g.width + dx;
                const double* grow = gout + y * g.width;
                if (want_kernel) {
                  for (std::size_t x = x0; x < x1; ++x) acc += grow[x] * src[row + x];
                }
                if (want_input && w != 0.0) {
                  double* gin = input.grad().data() + c * plane + row;
                  for (std::size_t x = x0; x < x1; ++x) gin[x] += w * grow[x];
                }
              }
              if (want_kernel) kernel.grad()[tap] += acc;
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor gather(Tape& tape, const Tensor& x, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("gather: empty index list");
  std::vector<double> values(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.size()) throw std::out_of_range("gather: index outside " + shape_string(x.shape()));
    values[i] = x[indices[i]];
  }
  Tensor out = make_output(tape, {indices.size()}, std::move(values), {&x});
  if (out.requires_grad()) {
    std::vector<std::size_t> saved(indices.begin(), indices.end());
    tape.record([x, out, saved]() mutable {
      auto gx = x.grad();
      auto go = out.grad();
      for (std::size_t i = 0; i < saved.size(); ++i) gx[saved[i]] += go[i];
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out = make_output(tape, {1}, {total}, {&x});
  if (out.requires_grad()) {
    tape.record([x, out]() mutable {
      const double g = out.grad()[0];
      for (double& gx : x.grad()) gx += g;
    });
  }
  return out;
}

Tensor mse(Tape& tape, const Tensor& x, std::span<const double> target) {
  if (target.size() != x.size()) {
    throw ShapeError("mse: target has " + std::to_string(target.size()) + " values for " + shape_string(x.shape()));
  }
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target[i];
    total += d * d;
  }
  Tensor out = make_output(tape, {1}, {total / n}, {&x});
  if (out.requires_grad()) {
    std::vector<double> saved(target.begin(), target.end());
    tape.record([x, out, saved, n]() mutable {
      const double g = out.grad()[0] * 2.0 / n;
      auto gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * (x[i] - saved[i]);
    });
  }
  return out;
}

}  // namespace vmap::numerics
