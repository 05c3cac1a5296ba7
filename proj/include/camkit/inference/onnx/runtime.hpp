#pragma once

// Reference CPU interpreter for the ONNX operators that image classifiers
// exported from the common training frameworks reduce to. Evaluation is
// single-threaded and deterministic: the same input bytes always yield the
// same output bytes.

#include "camkit/errors.hpp"
#include "camkit/inference/onnx/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace camkit::onnx {

using Shape64 = std::vector<std::int64_t>;

namespace ops {

inline std::string shape_str(const Shape64 &s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

inline std::size_t volume(const Shape64 &s) {
  std::size_t n = 1;
  for (auto d : s)
    n *= static_cast<std::size_t>(d);
  return n;
}

inline Value make_float(Shape64 shape, std::vector<float> data = {}) {
  Value v;
  v.shape = std::move(shape);
  v.integer = false;
  v.floats = data.empty() ? std::vector<float>(volume(v.shape), 0.0f)
                          : std::move(data);
  return v;
}

inline Value make_int(Shape64 shape, std::vector<std::int64_t> data) {
  Value v;
  v.shape = std::move(shape);
  v.integer = true;
  v.ints = std::move(data);
  return v;
}

inline std::int64_t normalize_axis(std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= std::max<std::int64_t>(r, 1))
    throw ScorerError("axis " + std::to_string(axis) + " out of range for rank " +
                      std::to_string(rank));
  return axis < 0 ? axis + r : axis;
}

inline const Value &need(const std::vector<const Value *> &in, std::size_t i,
                         const Node &n) {
  if (i >= in.size() || !in[i])
    throw ScorerError(n.op_type + " '" + n.name + "' is missing input " +
                      std::to_string(i));
  return *in[i];
}

inline const Value *optional_input(const std::vector<const Value *> &in,
                                   std::size_t i) {
  return i < in.size() ? in[i] : nullptr;
}

inline std::vector<std::int64_t> as_ints(const Value &v) {
  if (v.integer)
    return v.ints;
  std::vector<std::int64_t> out;
  for (float f : v.floats)
    out.push_back(static_cast<std::int64_t>(f));
  return out;
}

inline std::vector<float> as_floats(const Value &v) {
  if (!v.integer)
    return v.floats;
  return std::vector<float>(v.ints.begin(), v.ints.end());
}

inline std::vector<std::size_t> strides_of(const Shape64 &shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;)
    st[i - 1] = st[i] * static_cast<std::size_t>(shape[i]);
  return st;
}

inline Shape64 broadcast_shape(const Shape64 &a, const Shape64 &b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape64 out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ScorerError("cannot broadcast " + shape_str(a) + " with " +
                        shape_str(b));
    out[i] = da == 1 ? db : da;
  }
  return out;
}

/// Maps every flat index of `out_shape` to the flat index in a broadcast
/// operand of shape `in_shape`.
inline std::vector<std::size_t> broadcast_index(const Shape64 &out_shape,
                                                const Shape64 &in_shape) {
  const std::size_t rank = out_shape.size();
  Shape64 padded(rank, 1);
  std::copy(in_shape.begin(), in_shape.end(),
            padded.begin() + static_cast<std::ptrdiff_t>(rank - in_shape.size()));
  const auto in_strides = strides_of(padded);
  const std::size_t n = volume(out_shape);
  std::vector<std::size_t> map(n);
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d)
      if (padded[d] != 1)
        src += static_cast<std::size_t>(idx[d]) * in_strides[d];
    map[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d])
        break;
      idx[d] = 0;
    }
  }
  return map;
}

template <typename FloatOp, typename IntOp>
Value binary(const Value &a, const Value &b, FloatOp fop, IntOp iop) {
  const Shape64 shape = broadcast_shape(a.shape, b.shape);
  const auto ia = broadcast_index(shape, a.shape);
  const auto ib = broadcast_index(shape, b.shape);
  const std::size_t n = volume(shape);
  if (a.integer && b.integer) {
    std::vector<std::int64_t> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = iop(a.ints[ia[i]], b.ints[ib[i]]);
    return make_int(shape, std::move(out));
  }
  const auto fa = as_floats(a);
  const auto fb = as_floats(b);
  Value out = make_float(shape);
  for (std::size_t i = 0; i < n; ++i)
    out.floats[i] = fop(fa[ia[i]], fb[ib[i]]);
  return out;
}

template <typename F> Value unary(const Value &x, F f) {
  Value out = make_float(x.shape, as_floats(x));
  for (auto &v : out.floats)
    v = f(v);
  return out;
}

struct Window {
  std::int64_t kernel_h, kernel_w, stride_h, stride_w, dil_h, dil_w;
  std::int64_t pad_top, pad_left, pad_bottom, pad_right;
  std::int64_t out_h, out_w;
};

inline Window make_window(const Node &n, std::int64_t h, std::int64_t w,
                          std::int64_t kh, std::int64_t kw, bool ceil_mode) {
  Window win{};
  win.kernel_h = kh;
  win.kernel_w = kw;
  auto strides = n.attr_ints("strides");
  auto dil = n.attr_ints("dilations");
  auto pads = n.attr_ints("pads");
  win.stride_h = strides.size() == 2 ? strides[0] : 1;
  win.stride_w = strides.size() == 2 ? strides[1] : 1;
  win.dil_h = dil.size() == 2 ? dil[0] : 1;
  win.dil_w = dil.size() == 2 ? dil[1] : 1;
  if (pads.size() == 4) {
    win.pad_top = pads[0];
    win.pad_left = pads[1];
    win.pad_bottom = pads[2];
    win.pad_right = pads[3];
  }
  const std::string auto_pad = n.attr_string("auto_pad", "NOTSET");
  const std::int64_t ekh = win.dil_h * (kh - 1) + 1;
  const std::int64_t ekw = win.dil_w * (kw - 1) + 1;
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    const std::int64_t oh = (h + win.stride_h - 1) / win.stride_h;
    const std::int64_t ow = (w + win.stride_w - 1) / win.stride_w;
    const std::int64_t ph = std::max<std::int64_t>(0, (oh - 1) * win.stride_h + ekh - h);
    const std::int64_t pw = std::max<std::int64_t>(0, (ow - 1) * win.stride_w + ekw - w);
    const bool upper = auto_pad == "SAME_UPPER";
    win.pad_top = upper ? ph / 2 : ph - ph / 2;
    win.pad_bottom = ph - win.pad_top;
    win.pad_left = upper ? pw / 2 : pw - pw / 2;
    win.pad_right = pw - win.pad_left;
  } else if (auto_pad == "VALID") {
    win.pad_top = win.pad_left = win.pad_bottom = win.pad_right = 0;
  } else if (auto_pad != "NOTSET") {
    throw ScorerError("unsupported auto_pad '" + auto_pad + "'");
  }
  auto out_dim = [&](std::int64_t in, std::int64_t pb, std::int64_t pe,
                     std::int64_t ek, std::int64_t s) {
    const std::int64_t span = in + pb + pe - ek;
    if (span < 0)
      throw ScorerError(n.op_type + ": window larger than padded input");
    std::int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    if (ceil_mode && (o - 1) * s >= in + pb)
      --o;
    return o;
  };
  win.out_h = out_dim(h, win.pad_top, win.pad_bottom, ekh, win.stride_h);
  win.out_w = out_dim(w, win.pad_left, win.pad_right, ekw, win.stride_w);
  return win;
}

inline Value conv(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const Value &wt = need(in, 1, n);
  const Value *bias = optional_input(in, 2);
  if (x.shape.size() != 4 || wt.shape.size() != 4)
    throw ScorerError("Conv supports 2-D (NCHW) inputs only, got " +
                      shape_str(x.shape));
  const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const std::int64_t M = wt.shape[0], Cg = wt.shape[1], KH = wt.shape[2],
                     KW = wt.shape[3];
  const std::int64_t group = n.attr_int("group", 1);
  if (Cg * group != C || M % group != 0)
    throw ScorerError("Conv: channel/group mismatch, input " +
                      shape_str(x.shape) + " weight " + shape_str(wt.shape));
  const Window win = make_window(n, H, W, KH, KW, false);
  const std::int64_t OH = win.out_h, OW = win.out_w, Mg = M / group;
  Value out = make_float({N, M, OH, OW});
  const std::size_t cols = static_cast<std::size_t>(OH * OW);
  const std::size_t rows = static_cast<std::size_t>(Cg * KH * KW);
  std::vector<float> col(rows * cols);
  for (std::int64_t b = 0; b < N; ++b)
    for (std::int64_t g = 0; g < group; ++g) {
      // im2col for this group's input channels
      for (std::int64_t c = 0; c < Cg; ++c)
        for (std::int64_t ky = 0; ky < KH; ++ky)
          for (std::int64_t kx = 0; kx < KW; ++kx) {
            const std::size_t row = static_cast<std::size_t>((c * KH + ky) * KW + kx);
            const float *src = &x.floats[static_cast<std::size_t>(((b * C) + g * Cg + c) * H * W)];
            for (std::int64_t oy = 0; oy < OH; ++oy) {
              const std::int64_t iy = oy * win.stride_h - win.pad_top + ky * win.dil_h;
              for (std::int64_t ox = 0; ox < OW; ++ox) {
                const std::int64_t ix = ox * win.stride_w - win.pad_left + kx * win.dil_w;
                col[row * cols + static_cast<std::size_t>(oy * OW + ox)] =
                    (iy >= 0 && iy < H && ix >= 0 && ix < W)
                        ? src[iy * W + ix]
                        : 0.0f;
              }
            }
          }
      for (std::int64_t m = 0; m < Mg; ++m) {
        const std::int64_t oc = g * Mg + m;
        float *dst = &out.floats[static_cast<std::size_t>((b * M + oc) * OH * OW)];
        const float init = bias ? bias->floats[static_cast<std::size_t>(oc)] : 0.0f;
        std::vector<double> acc(cols, init);
        const float *wrow = &wt.floats[static_cast<std::size_t>(oc) * rows];
        for (std::size_t r = 0; r < rows; ++r) {
          const double wv = wrow[r];
          if (wv == 0.0)
            continue;
          const float *crow = &col[r * cols];
          for (std::size_t p = 0; p < cols; ++p)
            acc[p] += wv * crow[p];
        }
        for (std::size_t p = 0; p < cols; ++p)
          dst[p] = static_cast<float>(acc[p]);
      }
    }
  return out;
}

inline Value pool(const Node &n, const std::vector<const Value *> &in, bool is_max) {
  const Value &x = need(in, 0, n);
  if (x.shape.size() != 4)
    throw ScorerError(n.op_type + " supports NCHW inputs only");
  const auto ks = n.attr_ints("kernel_shape");
  if (ks.size() != 2)
    throw ScorerError(n.op_type + " needs a 2-D kernel_shape");
  const std::int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const Window win = make_window(n, H, W, ks[0], ks[1], n.attr_int("ceil_mode", 0) != 0);
  const bool include_pad = n.attr_int("count_include_pad", 0) != 0;
  Value out = make_float({N, C, win.out_h, win.out_w});
  std::size_t o = 0;
  for (std::int64_t p = 0; p < N * C; ++p) {
    const float *src = &x.floats[static_cast<std::size_t>(p * H * W)];
    for (std::int64_t oy = 0; oy < win.out_h; ++oy)
      for (std::int64_t ox = 0; ox < win.out_w; ++ox) {
        double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
        std::int64_t count = 0;
        for (std::int64_t ky = 0; ky < ks[0]; ++ky)
          for (std::int64_t kx = 0; kx < ks[1]; ++kx) {
            const std::int64_t iy = oy * win.stride_h - win.pad_top + ky * win.dil_h;
            const std::int64_t ix = ox * win.stride_w - win.pad_left + kx * win.dil_w;
            const bool inside = iy >= 0 && iy < H && ix >= 0 && ix < W;
            if (!inside) {
              // padding cells count only for the include-pad average, and
              // only within the explicitly padded extent
              if (!is_max && include_pad && iy < H + win.pad_bottom &&
                  ix < W + win.pad_right)
                ++count;
              continue;
            }
            const double v = src[iy * W + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++count;
          }
        out.floats[o++] = static_cast<float>(is_max ? acc : (count ? acc / double(count) : 0.0));
      }
  }
  return out;
}

inline Value global_pool(const Node &n, const std::vector<const Value *> &in,
                         bool is_max) {
  const Value &x = need(in, 0, n);
  if (x.shape.size() < 3)
    throw ScorerError(n.op_type + " needs N x C x spatial input");
  const std::size_t plane = volume(Shape64(x.shape.begin() + 2, x.shape.end()));
  Shape64 shape = x.shape;
  std::fill(shape.begin() + 2, shape.end(), 1);
  Value out = make_float(shape);
  for (std::size_t p = 0; p < out.floats.size(); ++p) {
    double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = x.floats[p * plane + i];
      acc = is_max ? std::max(acc, v) : acc + v;
    }
    out.floats[p] = static_cast<float>(is_max ? acc : acc / double(plane));
  }
  return out;
}

inline Value gemm(const Node &n, const std::vector<const Value *> &in) {
  const Value &a = need(in, 0, n);
  const Value &b = need(in, 1, n);
  const Value *c = optional_input(in, 2);
  if (a.shape.size() != 2 || b.shape.size() != 2)
    throw ScorerError("Gemm needs 2-D operands");
  const bool ta = n.attr_int("transA", 0) != 0;
  const bool tb = n.attr_int("transB", 0) != 0;
  const double alpha = n.attr_float("alpha", 1.0f);
  const double beta = n.attr_float("beta", 1.0f);
  const std::int64_t M = ta ? a.shape[1] : a.shape[0];
  const std::int64_t K = ta ? a.shape[0] : a.shape[1];
  const std::int64_t Kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t N = tb ? b.shape[0] : b.shape[1];
  if (K != Kb)
    throw ScorerError("Gemm inner dimensions differ: " + shape_str(a.shape) +
                      " x " + shape_str(b.shape));
  Value out = make_float({M, N});
  std::vector<std::size_t> cmap;
  if (c)
    cmap = broadcast_index(out.shape, c->shape);
  for (std::int64_t i = 0; i < M; ++i)
    for (std::int64_t j = 0; j < N; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < K; ++k) {
        const float av = ta ? a.floats[k * M + i] : a.floats[i * K + k];
        const float bv = tb ? b.floats[j * K + k] : b.floats[k * N + j];
        acc += double(av) * bv;
      }
      const std::size_t o = static_cast<std::size_t>(i * N + j);
      double v = alpha * acc;
      if (c)
        v += beta * c->floats[cmap[o]];
      out.floats[o] = static_cast<float>(v);
    }
  return out;
}

inline Value matmul(const Node &n, const std::vector<const Value *> &in) {
  const Value &a = need(in, 0, n);
  const Value &b = need(in, 1, n);
  if (a.shape.size() < 2 || b.shape.size() != 2)
    throw ScorerError("MatMul supports [..., M, K] x [K, N] only");
  const std::int64_t K = a.shape.back();
  const std::int64_t M = static_cast<std::int64_t>(volume(a.shape)) / K;
  const std::int64_t N = b.shape[1];
  if (b.shape[0] != K)
    throw ScorerError("MatMul inner dimensions differ");
  Shape64 shape = a.shape;
  shape.back() = N;
  Value out = make_float(shape);
  for (std::int64_t i = 0; i < M; ++i)
    for (std::int64_t j = 0; j < N; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < K; ++k)
        acc += double(a.floats[i * K + k]) * b.floats[k * N + j];
      out.floats[static_cast<std::size_t>(i * N + j)] = static_cast<float>(acc);
    }
  return out;
}

inline Value batch_norm(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const Value &scale = need(in, 1, n);
  const Value &bias = need(in, 2, n);
  const Value &mean = need(in, 3, n);
  const Value &var = need(in, 4, n);
  const double eps = n.attr_float("epsilon", 1e-5f);
  if (x.shape.size() < 2)
    throw ScorerError("BatchNormalization needs N x C x ... input");
  const std::int64_t C = x.shape[1];
  const std::size_t inner = volume(Shape64(x.shape.begin() + 2, x.shape.end()));
  Value out = make_float(x.shape);
  for (std::size_t i = 0; i < x.floats.size(); ++i) {
    const std::size_t c = (i / inner) % static_cast<std::size_t>(C);
    const double norm = (x.floats[i] - double(mean.floats[c])) /
                        std::sqrt(double(var.floats[c]) + eps);
    out.floats[i] = static_cast<float>(norm * scale.floats[c] + bias.floats[c]);
  }
  return out;
}

inline Value reshape_to(const Value &x, Shape64 shape) {
  Value out = x;
  out.shape = std::move(shape);
  if (volume(out.shape) != x.count())
    throw ScorerError("cannot reshape " + shape_str(x.shape) + " to " +
                      shape_str(out.shape));
  return out;
}

inline Value reshape(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  auto target = as_ints(need(in, 1, n));
  const bool allow_zero = n.attr_int("allowzero", 0) != 0;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 0 && !allow_zero)
      target[i] = x.shape.at(i);
    if (target[i] == -1) {
      if (infer >= 0)
        throw ScorerError("Reshape with more than one -1");
      infer = static_cast<int>(i);
    } else {
      known *= target[i];
    }
  }
  if (infer >= 0)
    target[static_cast<std::size_t>(infer)] =
        known ? static_cast<std::int64_t>(x.count()) / known : 0;
  return reshape_to(x, target);
}

inline Value flatten(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const auto axis = normalize_axis(n.attr_int("axis", 1), x.shape.size() + 1);
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i)
    outer *= x.shape[static_cast<std::size_t>(i)];
  return reshape_to(x, {outer, static_cast<std::int64_t>(x.count()) / std::max<std::int64_t>(outer, 1)});
}

inline std::vector<std::int64_t> axes_from(const Node &n,
                                           const std::vector<const Value *> &in,
                                           std::size_t input_index) {
  if (const auto *a = optional_input(in, input_index))
    return as_ints(*a);
  return n.attr_ints("axes");
}

inline Value unsqueeze(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  auto axes = axes_from(n, in, 1);
  const std::size_t rank = x.shape.size() + axes.size();
  for (auto &a : axes)
    a = normalize_axis(a, rank);
  std::sort(axes.begin(), axes.end());
  Shape64 shape;
  std::size_t src = 0;
  for (std::size_t d = 0; d < rank; ++d) {
    if (std::binary_search(axes.begin(), axes.end(), static_cast<std::int64_t>(d)))
      shape.push_back(1);
    else
      shape.push_back(x.shape.at(src++));
  }
  return reshape_to(x, shape);
}

inline Value squeeze(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  auto axes = axes_from(n, in, 1);
  for (auto &a : axes)
    a = normalize_axis(a, x.shape.size());
  Shape64 shape;
  for (std::size_t d = 0; d < x.shape.size(); ++d) {
    const bool listed = std::find(axes.begin(), axes.end(),
                                  static_cast<std::int64_t>(d)) != axes.end();
    if ((axes.empty() && x.shape[d] == 1) || (listed && x.shape[d] == 1))
      continue;
    shape.push_back(x.shape[d]);
  }
  return reshape_to(x, shape);
}

inline Value transpose(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const std::size_t rank = x.shape.size();
  auto perm = n.attr_ints("perm");
  if (perm.empty())
    for (std::size_t i = rank; i-- > 0;)
      perm.push_back(static_cast<std::int64_t>(i));
  Shape64 shape(rank);
  for (std::size_t d = 0; d < rank; ++d)
    shape[d] = x.shape.at(static_cast<std::size_t>(perm[d]));
  const auto in_strides = strides_of(x.shape);
  Value out = x;
  out.shape = shape;
  std::vector<std::int64_t> idx(rank, 0);
  const std::size_t total = x.count();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d)
      src += static_cast<std::size_t>(idx[d]) *
             in_strides[static_cast<std::size_t>(perm[d])];
    if (x.integer)
      out.ints[flat] = x.ints[src];
    else
      out.floats[flat] = x.floats[src];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < shape[d])
        break;
      idx[d] = 0;
    }
  }
  return out;
}

inline Value concat(const Node &n, const std::vector<const Value *> &in) {
  if (in.empty())
    throw ScorerError("Concat without inputs");
  const Value &first = need(in, 0, n);
  const auto axis = static_cast<std::size_t>(
      normalize_axis(n.attr_int("axis", 0), first.shape.size()));
  bool integer = true;
  Shape64 shape = first.shape;
  shape[axis] = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Value &v = need(in, i, n);
    integer = integer && v.integer;
    shape[axis] += v.shape.at(axis);
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d)
    outer *= static_cast<std::size_t>(shape[d]);
  Value out;
  out.shape = shape;
  out.integer = integer;
  for (std::size_t o = 0; o < outer; ++o)
    for (const Value *v : in) {
      const std::size_t chunk = v->count() / outer;
      if (integer) {
        out.ints.insert(out.ints.end(), v->ints.begin() + std::ptrdiff_t(o * chunk),
                        v->ints.begin() + std::ptrdiff_t((o + 1) * chunk));
      } else {
        const auto f = as_floats(*v);
        out.floats.insert(out.floats.end(), f.begin() + std::ptrdiff_t(o * chunk),
                          f.begin() + std::ptrdiff_t((o + 1) * chunk));
      }
    }
  return out;
}

inline Value gather(const Node &n, const std::vector<const Value *> &in) {
  const Value &data = need(in, 0, n);
  const auto indices = as_ints(need(in, 1, n));
  const Shape64 &ishape = in[1]->shape;
  const auto axis = static_cast<std::size_t>(
      normalize_axis(n.attr_int("axis", 0), data.shape.size()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d)
    outer *= static_cast<std::size_t>(data.shape[d]);
  for (std::size_t d = axis + 1; d < data.shape.size(); ++d)
    inner *= static_cast<std::size_t>(data.shape[d]);
  const std::int64_t extent = data.shape[axis];
  Shape64 shape(data.shape.begin(), data.shape.begin() + std::ptrdiff_t(axis));
  shape.insert(shape.end(), ishape.begin(), ishape.end());
  shape.insert(shape.end(), data.shape.begin() + std::ptrdiff_t(axis) + 1, data.shape.end());
  Value out;
  out.shape = shape;
  out.integer = data.integer;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::int64_t idx : indices) {
      if (idx < 0)
        idx += extent;
      if (idx < 0 || idx >= extent)
        throw ScorerError("Gather index out of range");
      const std::size_t base = (o * static_cast<std::size_t>(extent) + static_cast<std::size_t>(idx)) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        if (data.integer)
          out.ints.push_back(data.ints[base + i]);
        else
          out.floats.push_back(data.floats[base + i]);
      }
    }
  return out;
}

inline Value reduce_mean(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  auto axes = axes_from(n, in, 1);
  const bool keep = n.attr_int("keepdims", 1) != 0;
  const std::size_t rank = x.shape.size();
  std::vector<bool> reduce(rank, axes.empty());
  for (auto a : axes)
    reduce[static_cast<std::size_t>(normalize_axis(a, rank))] = true;
  Shape64 kept(rank);
  for (std::size_t d = 0; d < rank; ++d)
    kept[d] = reduce[d] ? 1 : x.shape[d];
  const auto map = broadcast_index(x.shape, kept);
  std::vector<double> acc(volume(kept), 0.0);
  const auto f = as_floats(x);
  for (std::size_t i = 0; i < f.size(); ++i)
    acc[map[i]] += f[i];
  const double denom = double(x.count()) / double(acc.size());
  Value out = make_float(kept);
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.floats[i] = static_cast<float>(acc[i] / denom);
  if (!keep) {
    Shape64 squeezed;
    for (std::size_t d = 0; d < rank; ++d)
      if (!reduce[d])
        squeezed.push_back(x.shape[d]);
    out.shape = squeezed;
  }
  return out;
}

inline Value softmax(const Node &n, const std::vector<const Value *> &in,
                     std::int64_t opset) {
  const Value &x = need(in, 0, n);
  const auto axis = static_cast<std::size_t>(normalize_axis(
      n.attr_int("axis", opset >= 13 ? -1 : 1), x.shape.size()));
  // opset < 13 coerces to 2-D at `axis`; opset >= 13 normalises one axis.
  std::size_t inner = 1;
  if (opset >= 13) {
    for (std::size_t d = axis + 1; d < x.shape.size(); ++d)
      inner *= static_cast<std::size_t>(x.shape[d]);
  }
  std::size_t extent = 1;
  if (opset >= 13) {
    extent = static_cast<std::size_t>(x.shape[axis]);
  } else {
    for (std::size_t d = axis; d < x.shape.size(); ++d)
      extent *= static_cast<std::size_t>(x.shape[d]);
  }
  const std::size_t outer = x.count() / (extent * inner);
  Value out = make_float(x.shape, as_floats(x));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      auto at = [&](std::size_t e) -> float & {
        return out.floats[(o * extent + e) * inner + i];
      };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < extent; ++e)
        mx = std::max(mx, double(at(e)));
      double sum = 0.0;
      for (std::size_t e = 0; e < extent; ++e)
        sum += std::exp(at(e) - mx);
      for (std::size_t e = 0; e < extent; ++e)
        at(e) = static_cast<float>(std::exp(at(e) - mx) / sum);
    }
  return out;
}

inline Value constant(const Node &n) {
  if (const auto *a = n.attr("value"); a && a->t)
    return *a->t;
  if (const auto *a = n.attr("value_float"); a && a->f)
    return make_float({}, {*a->f});
  if (const auto *a = n.attr("value_floats"))
    return make_float({static_cast<std::int64_t>(a->floats.size())}, a->floats);
  if (const auto *a = n.attr("value_int"); a && a->i)
    return make_int({}, {*a->i});
  if (const auto *a = n.attr("value_ints"))
    return make_int({static_cast<std::int64_t>(a->ints.size())}, a->ints);
  throw ScorerError("Constant node '" + n.name + "' has no supported value");
}

inline Value clip(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  float lo = n.attr_float("min", -std::numeric_limits<float>::infinity());
  float hi = n.attr_float("max", std::numeric_limits<float>::infinity());
  if (const auto *v = optional_input(in, 1))
    lo = as_floats(*v).at(0);
  if (const auto *v = optional_input(in, 2))
    hi = as_floats(*v).at(0);
  return unary(x, [&](float v) { return std::clamp(v, lo, hi); });
}

inline Value cast(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const auto to = static_cast<DataType>(n.attr_int("to", 1));
  if (to == DataType::Float || to == DataType::Double)
    return make_float(x.shape, as_floats(x));
  return make_int(x.shape, as_ints(x));
}

/// Output of `shape` whose element i is x's element map[i].
inline Value take(const Value &x, Shape64 shape, const std::vector<std::size_t> &map) {
  Value out;
  out.shape = std::move(shape);
  out.integer = x.integer;
  if (x.integer) {
    out.ints.reserve(map.size());
    for (auto i : map)
      out.ints.push_back(x.ints[i]);
  } else {
    out.floats.reserve(map.size());
    for (auto i : map)
      out.floats.push_back(x.floats[i]);
  }
  return out;
}

inline Value expand(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const Shape64 shape = broadcast_shape(x.shape, as_ints(need(in, 1, n)));
  return take(x, shape, broadcast_index(shape, x.shape));
}

inline Value tile(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const auto repeats = as_ints(need(in, 1, n));
  const std::size_t rank = x.shape.size();
  if (repeats.size() != rank)
    throw ScorerError("Tile repeats must match the input rank");
  Shape64 shape(rank);
  for (std::size_t d = 0; d < rank; ++d)
    shape[d] = x.shape[d] * repeats[d];
  const auto in_strides = strides_of(x.shape);
  std::vector<std::size_t> map(volume(shape));
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < map.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d)
      src += static_cast<std::size_t>(idx[d] % x.shape[d]) * in_strides[d];
    map[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < shape[d])
        break;
      idx[d] = 0;
    }
  }
  return take(x, shape, map);
}

inline Value slice(const Node &n, const std::vector<const Value *> &in) {
  const Value &x = need(in, 0, n);
  const std::size_t rank = x.shape.size();
  const auto starts = as_ints(need(in, 1, n));
  const auto ends = as_ints(need(in, 2, n));
  std::vector<std::int64_t> axes, steps;
  if (const auto *a = optional_input(in, 3))
    axes = as_ints(*a);
  else
    for (std::size_t i = 0; i < starts.size(); ++i)
      axes.push_back(static_cast<std::int64_t>(i));
  if (const auto *s = optional_input(in, 4))
    steps = as_ints(*s);
  else
    steps.assign(starts.size(), 1);
  if (ends.size() != starts.size() || axes.size() != starts.size() ||
      steps.size() != starts.size())
    throw ScorerError("Slice inputs differ in length");

  std::vector<std::int64_t> first(rank, 0), step(rank, 1);
  Shape64 shape = x.shape;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto d = static_cast<std::size_t>(normalize_axis(axes[i], rank));
    const std::int64_t dim = x.shape[d];
    const std::int64_t st = steps[i];
    if (st == 0)
      throw ScorerError("Slice step must be non-zero");
    auto clampi = [&](std::int64_t v, std::int64_t lo, std::int64_t hi) {
      if (v < 0)
        v += dim;
      return std::clamp(v, lo, hi);
    };
    std::int64_t b, e;
    if (st > 0) {
      b = clampi(starts[i], 0, dim);
      e = clampi(ends[i], 0, dim);
    } else {
      b = clampi(starts[i], 0, dim - 1);
      e = clampi(ends[i], -1, dim - 1);
      if (ends[i] < -dim)
        e = -1;
    }
    const std::int64_t len = st > 0 ? (e - b + st - 1) / st : (b - e - st - 1) / -st;
    shape[d] = std::max<std::int64_t>(len, 0);
    first[d] = b;
    step[d] = st;
  }
  const auto in_strides = strides_of(x.shape);
  std::vector<std::size_t> map(volume(shape));
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < map.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d)
      src += static_cast<std::size_t>(first[d] + idx[d] * step[d]) * in_strides[d];
    map[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < shape[d])
        break;
      idx[d] = 0;
    }
  }
  return take(x, shape, map);
}

inline Value constant_of_shape(const Node &n, const std::vector<const Value *> &in) {
  Shape64 shape = as_ints(need(in, 0, n));
  const std::size_t count = volume(shape);
  if (const auto *a = n.attr("value"); a && a->t) {
    if (a->t->integer)
      return make_int(shape, std::vector<std::int64_t>(count, a->t->ints.at(0)));
    return make_float(shape, std::vector<float>(count, a->t->floats.at(0)));
  }
  return make_float(shape, std::vector<float>(count, 0.0f));
}

} // namespace ops

/// Executes a parsed model. Nodes are evaluated in file order, which ONNX
/// requires to be a topological order.
class Interpreter {
public:
  using Kernel = std::function<Value(const Node &, const std::vector<const Value *> &,
                                     std::int64_t opset)>;

  explicit Interpreter(Model model) : model_(std::move(model)) {
    opset_ = model_.default_opset();
    for (const auto &node : model_.graph.nodes) {
      if (!node.domain.empty() && node.domain != "ai.onnx")
        throw ModelLoadError("operator " + node.op_type + " from unsupported domain '" +
                             node.domain + "'");
      if (!kernels().count(node.op_type))
        throw ModelLoadError("unsupported ONNX operator '" + node.op_type + "'");
    }
  }

  const Model &model() const { return model_; }
  std::int64_t opset() const { return opset_; }

  static bool supports(const std::string &op_type) {
    return kernels().count(op_type) != 0;
  }

  Value run(const std::string &input_name, const Value &input,
            const std::string &output_name) const {
    std::map<std::string, Value> env;
    env[input_name] = input;
    auto lookup = [&](const std::string &name) -> const Value * {
      if (name.empty())
        return nullptr;
      if (auto it = env.find(name); it != env.end())
        return &it->second;
      if (auto it = model_.graph.initializers.find(name);
          it != model_.graph.initializers.end())
        return &it->second;
      throw ScorerError("graph value '" + name + "' is not defined");
    };
    for (const auto &node : model_.graph.nodes) {
      std::vector<const Value *> args;
      args.reserve(node.inputs.size());
      for (const auto &name : node.inputs)
        args.push_back(lookup(name));
      // trailing optional inputs may be given as empty names
      while (!args.empty() && !args.back())
        args.pop_back();
      Value result = kernels().at(node.op_type)(node, args, opset_);
      if (!node.outputs.empty())
        env[node.outputs.front()] = std::move(result);
    }
    const Value *out = lookup(output_name);
    return *out;
  }

private:
  static const std::map<std::string, Kernel> &kernels() {
    using V = const std::vector<const Value *> &;
    static const std::map<std::string, Kernel> table = {
        {"Conv", [](const Node &n, V in, std::int64_t) { return ops::conv(n, in); }},
        {"MaxPool", [](const Node &n, V in, std::int64_t) { return ops::pool(n, in, true); }},
        {"AveragePool", [](const Node &n, V in, std::int64_t) { return ops::pool(n, in, false); }},
        {"GlobalAveragePool", [](const Node &n, V in, std::int64_t) { return ops::global_pool(n, in, false); }},
        {"GlobalMaxPool", [](const Node &n, V in, std::int64_t) { return ops::global_pool(n, in, true); }},
        {"Gemm", [](const Node &n, V in, std::int64_t) { return ops::gemm(n, in); }},
        {"MatMul", [](const Node &n, V in, std::int64_t) { return ops::matmul(n, in); }},
        {"BatchNormalization", [](const Node &n, V in, std::int64_t) { return ops::batch_norm(n, in); }},
        {"Relu", [](const Node &n, V in, std::int64_t) {
           return ops::unary(ops::need(in, 0, n), [](float v) { return v > 0.0f ? v : 0.0f; });
         }},
        {"LeakyRelu", [](const Node &n, V in, std::int64_t) {
           const float alpha = n.attr_float("alpha", 0.01f);
           return ops::unary(ops::need(in, 0, n), [alpha](float v) { return v >= 0.0f ? v : alpha * v; });
         }},
        {"Sigmoid", [](const Node &n, V in, std::int64_t) {
           return ops::unary(ops::need(in, 0, n), [](float v) {
             return static_cast<float>(1.0 / (1.0 + std::exp(-double(v))));
           });
         }},
        {"Tanh", [](const Node &n, V in, std::int64_t) {
           return ops::unary(ops::need(in, 0, n), [](float v) { return std::tanh(v); });
         }},
        {"Abs", [](const Node &n, V in, std::int64_t) {
           return ops::unary(ops::need(in, 0, n), [](float v) { return std::fabs(v); });
         }},
        {"Clip", [](const Node &n, V in, std::int64_t) { return ops::clip(n, in); }},
        {"Add", [](const Node &n, V in, std::int64_t) {
           return ops::binary(ops::need(in, 0, n), ops::need(in, 1, n), std::plus<float>(), std::plus<std::int64_t>());
         }},
        {"Sub", [](const Node &n, V in, std::int64_t) {
           return ops::binary(ops::need(in, 0, n), ops::need(in, 1, n), std::minus<float>(), std::minus<std::int64_t>());
         }},
        {"Mul", [](const Node &n, V in, std::int64_t) {
           return ops::binary(ops::need(in, 0, n), ops::need(in, 1, n), std::multiplies<float>(), std::multiplies<std::int64_t>());
         }},
        {"Div", [](const Node &n, V in, std::int64_t) {
           return ops::binary(ops::need(in, 0, n), ops::need(in, 1, n), std::divides<float>(),
                              [](std::int64_t a, std::int64_t b) {
                                if (b == 0)
                                  throw ScorerError("integer division by zero");
                                return a / b;
                              });
         }},
        {"Flatten", [](const Node &n, V in, std::int64_t) { return ops::flatten(n, in); }},
        {"Reshape", [](const Node &n, V in, std::int64_t) { return ops::reshape(n, in); }},
        {"Squeeze", [](const Node &n, V in, std::int64_t) { return ops::squeeze(n, in); }},
        {"Unsqueeze", [](const Node &n, V in, std::int64_t) { return ops::unsqueeze(n, in); }},
        {"Transpose", [](const Node &n, V in, std::int64_t) { return ops::transpose(n, in); }},
        {"Concat", [](const Node &n, V in, std::int64_t) { return ops::concat(n, in); }},
        {"Gather", [](const Node &n, V in, std::int64_t) { return ops::gather(n, in); }},
        {"Expand", [](const Node &n, V in, std::int64_t) { return ops::expand(n, in); }},
        {"Tile", [](const Node &n, V in, std::int64_t) { return ops::tile(n, in); }},
        {"Slice", [](const Node &n, V in, std::int64_t) { return ops::slice(n, in); }},
        {"ConstantOfShape", [](const Node &n, V in, std::int64_t) { return ops::constant_of_shape(n, in); }},
        {"ReduceMean", [](const Node &n, V in, std::int64_t) { return ops::reduce_mean(n, in); }},
        {"Softmax", [](const Node &n, V in, std::int64_t opset) { return ops::softmax(n, in, opset); }},
        {"Cast", [](const Node &n, V in, std::int64_t) { return ops::cast(n, in); }},
        {"Constant", [](const Node &n, V, std::int64_t) { return ops::constant(n); }},
        {"Shape", [](const Node &n, V in, std::int64_t) {
           const Value &x = ops::need(in, 0, n);
           return ops::make_int({static_cast<std::int64_t>(x.shape.size())}, x.shape);
         }},
        {"Identity", [](const Node &n, V in, std::int64_t) { return ops::need(in, 0, n); }},
        {"Dropout", [](const Node &n, V in, std::int64_t) { return ops::need(in, 0, n); }},
    };
    return table;
  }

  Model model_;
  std::int64_t opset_ = 0;
};

} // namespace camkit::onnx
