// Copyright 2026 The vtsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vtsim/learn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "vtsim/error.hpp"
#include "vtsim/rng.hpp"

namespace vtsim {

using Mat = Eigen::MatrixXd;
using nlohmann::json;

Tensor Tensor::zeros(int n, int c, int h, int w) {
  Tensor t{n, c, h, w, {}};
  t.v.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
  return t;
}

// ----- configuration and layout -----

void LearnerConfig::validate() const {
  const auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kConfig, "learner config: " + what);
  };
  if (input_w < 8 || input_h < 8 || input_w % 8 != 0 || input_h % 8 != 0) {
    bad("input_w and input_h must be positive multiples of 8");
  }
  if (latent_dim < 1) bad("latent_dim must be >= 1");
  for (int c : channels) {
    if (c < 1) bad("channel widths must be >= 1");
  }
  if (marker_hidden < 1 || pose_hidden < 1) bad("hidden widths must be >= 1");
  if (!(lambda_s >= 0.0 && lambda_c >= 0.0 && lambda_p >= 0.0)) bad("loss weights must be >= 0");
  if (!(lambda_s + lambda_c + lambda_p > 0.0)) bad("at least one loss weight must be positive");
  if (!(lr > 0.0 && std::isfinite(lr))) bad("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum must lie in [0, 1)");
  if (batch < 1) bad("batch must be >= 1");
  if (epochs < 1) bad("epochs must be >= 1");
}

Architecture Architecture::from(const LearnerConfig& c, int n_markers) {
  c.validate();
  if (n_markers < 1) throw Error(ErrorCode::kConfig, "learner: n_markers must be >= 1");
  return Architecture{c.input_w,      c.input_h,     c.latent_dim, c.channels,
                      c.marker_hidden, c.pose_hidden, n_markers};
}

namespace {

struct Slot {
  std::size_t off = 0;
  int rows = 0;
  int cols = 0;
};
struct Dense {
  Slot w, b;
};
struct Head {
  Dense fc, up1, up2, up3;
  int out_channels = 0;
};
struct Mlp {
  Dense fc1, fc2;
};
struct Layout {
  std::array<Dense, 3> conv;
  Dense enc_fc;
  std::array<Head, 3> heads;  // marked, pure, depth
  Mlp markers, pose;
  std::size_t total = 0;
  int h[4] = {}, w[4] = {};
  int feat = 0;  // c3 * h3 * w3
};

constexpr std::array<const char*, 3> kHeadNames = {"marked", "pure", "depth"};

Layout make_layout(const Architecture& a) {
  Layout l;
  std::size_t cur = 0;
  const auto slot = [&](int rows, int cols) {
    Slot s{cur, rows, cols};
    cur += static_cast<std::size_t>(rows) * cols;
    return s;
  };
  const auto dense = [&](int rows, int cols) {
    Dense d;
    d.w = slot(rows, cols);
    d.b = slot(rows, 1);
    return d;
  };
  const auto deconv = [&](int out_c, int in_c) {
    Dense d;
    d.w = slot(out_c * 16, in_c);
    d.b = slot(out_c, 1);
    return d;
  };
  for (int k = 0; k < 4; ++k) {
    l.h[k] = a.input_h >> k;
    l.w[k] = a.input_w >> k;
  }
  const auto& c = a.channels;
  l.feat = c[2] * l.h[3] * l.w[3];
  l.conv[0] = dense(c[0], 3 * 16);
  l.conv[1] = dense(c[1], c[0] * 16);
  l.conv[2] = dense(c[2], c[1] * 16);
  l.enc_fc = dense(a.latent_dim, l.feat);
  const std::array<int, 3> outs = {3, 3, 1};
  for (int k = 0; k < 3; ++k) {
    Head& hd = l.heads[k];
    hd.out_channels = outs[k];
    hd.fc = dense(l.feat, a.latent_dim);
    hd.up1 = deconv(c[1], c[2]);
    hd.up2 = deconv(c[0], c[1]);
    hd.up3 = deconv(outs[k], c[0]);
  }
  l.markers.fc1 = dense(a.marker_hidden, a.latent_dim);
  l.markers.fc2 = dense(2 * a.n_markers, a.marker_hidden);
  l.pose.fc1 = dense(a.pose_hidden, a.latent_dim);
  l.pose.fc2 = dense(7, a.pose_hidden);
  l.total = cur;
  return l;
}

}  // namespace

std::vector<Architecture::Block> Architecture::index_map() const {
  const Layout l = make_layout(*this);
  std::vector<Block> out;
  const auto add = [&](const std::string& name, const Dense& d) {
    out.push_back(Block{name + ".w", d.w.off, d.w.rows, d.w.cols});
    out.push_back(Block{name + ".b", d.b.off, d.b.rows, d.b.cols});
  };
  for (int k = 0; k < 3; ++k) add("encoder.conv" + std::to_string(k + 1), l.conv[k]);
  add("encoder.fc", l.enc_fc);
  for (int k = 0; k < 3; ++k) {
    const std::string p = std::string(kHeadNames[k]) + ".";
    add(p + "fc", l.heads[k].fc);
    add(p + "up1", l.heads[k].up1);
    add(p + "up2", l.heads[k].up2);
    add(p + "up3", l.heads[k].up3);
  }
  add("markers.fc1", l.markers.fc1);
  add("markers.fc2", l.markers.fc2);
  add("pose.fc1", l.pose.fc1);
  add("pose.fc2", l.pose.fc2);
  return out;
}

std::size_t Architecture::param_count() const { return make_layout(*this).total; }

json Architecture::to_json() const {
  return json{{"input_w", input_w},
              {"input_h", input_h},
              {"latent_dim", latent_dim},
              {"channels", channels},
              {"marker_hidden", marker_hidden},
              {"pose_hidden", pose_hidden},
              {"n_markers", n_markers}};
}

Architecture Architecture::from_json(const json& j) {
  try {
    Architecture a;
    a.input_w = j.at("input_w").get<int>();
    a.input_h = j.at("input_h").get<int>();
    a.latent_dim = j.at("latent_dim").get<int>();
    a.channels = j.at("channels").get<std::array<int, 3>>();
    a.marker_hidden = j.at("marker_hidden").get<int>();
    a.pose_hidden = j.at("pose_hidden").get<int>();
    a.n_markers = j.at("n_markers").get<int>();
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, std::string("architecture header: ") + e.what());
  }
}

LearnerParams init_params(const Architecture& arch, std::uint64_t seed) {
  const Layout l = make_layout(arch);
  LearnerParams p{arch, std::vector<double>(l.total, 0.0)};
  Rng rng(seed);
  const auto fill = [&](const Slot& s, int fan_in) {
    const double a = std::sqrt(3.0 / fan_in);
    for (std::size_t k = 0; k < static_cast<std::size_t>(s.rows) * s.cols; ++k) {
      p.w[s.off + k] = rng.uniform(-a, a);
    }
  };
  for (const auto& d : l.conv) fill(d.w, d.w.cols);
  fill(l.enc_fc.w, l.enc_fc.w.cols);
  for (const auto& h : l.heads) {
    fill(h.fc.w, h.fc.w.cols);
    // A k4 s2 transposed convolution feeds each output from 4 taps per channel.
    fill(h.up1.w, 4 * h.up1.w.cols);
    fill(h.up2.w, 4 * h.up2.w.cols);
    fill(h.up3.w, 4 * h.up3.w.cols);
  }
  for (const Mlp* m : {&l.markers, &l.pose}) {
    fill(m->fc1.w, m->fc1.w.cols);
    fill(m->fc2.w, m->fc2.w.cols);
  }
  return p;
}

// ----- normalization and examples -----

Normalizer Normalizer::from_profile(const SensorProfile& p) {
  return Normalizer{p.max_indent, static_cast<double>(p.image_width),
                    static_cast<double>(p.image_height),
                    0.5 * std::hypot(p.gel_width, p.gel_height)};
}

json Normalizer::to_json() const {
  return json{{"max_indent", max_indent},
              {"image_w", image_w},
              {"image_h", image_h},
              {"half_diagonal", half_diagonal}};
}

Normalizer Normalizer::from_json(const json& j) {
  try {
    return Normalizer{j.at("max_indent").get<double>(), j.at("image_w").get<double>(),
                      j.at("image_h").get<double>(), j.at("half_diagonal").get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, std::string("normalization header: ") + e.what());
  }
}

namespace {

// Overlap weights of each destination cell with the source cells, summing to 1.
std::vector<std::vector<std::pair<int, double>>> area_weights(int src, int dst) {
  std::vector<std::vector<std::pair<int, double>>> out(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    const double lo = d * scale;
    const double hi = (d + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < std::min(src, static_cast<int>(std::ceil(hi)));
         ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (overlap > 0.0) out[d].emplace_back(s, overlap / scale);
    }
  }
  return out;
}

template <typename Get>
std::vector<double> resample(int src_w, int src_h, int w, int h, int channels, Get get) {
  if (w < 1 || h < 1 || src_w < 1 || src_h < 1) {
    throw Error(ErrorCode::kShapeMismatch, "downsample: empty image");
  }
  const auto wx = area_weights(src_w, w);
  const auto wy = area_weights(src_h, h);
  std::vector<double> rows(static_cast<std::size_t>(channels) * src_h * w, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < src_h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (const auto& [s, wt] : wx[x]) acc += wt * get(c, y, s);
        rows[(static_cast<std::size_t>(c) * src_h + y) * w + x] = acc;
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(channels) * h * w, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (const auto& [s, wt] : wy[y]) {
          acc += wt * rows[(static_cast<std::size_t>(c) * src_h + s) * w + x];
        }
        out[(static_cast<std::size_t>(c) * h + y) * w + x] = acc;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> downsample_rgb(const TactileImage& image, int w, int h) {
  return resample(image.width, image.height, w, h, 3, [&](int c, int y, int x) {
    return image.at(x, y, c) / 255.0;
  });
}

std::vector<double> downsample_map(const std::vector<float>& map, int src_w, int src_h, int w,
                                   int h) {
  if (map.size() != static_cast<std::size_t>(src_w) * src_h) {
    throw Error(ErrorCode::kShapeMismatch, "downsample: map size does not match dims");
  }
  return resample(src_w, src_h, w, h, 1, [&](int, int y, int x) {
    return static_cast<double>(map[static_cast<std::size_t>(y) * src_w + x]);
  });
}

Example make_example(const Sample& s, const Normalizer& norm, int w, int h) {
  Example e;
  e.marked = downsample_rgb(s.i_marked, w, h);
  e.pure = downsample_rgb(s.i_pure, w, h);
  e.depth = downsample_map(s.depth, s.i_marked.width, s.i_marked.height, w, h);
  for (double& d : e.depth) d = norm.depth(d);
  e.markers.resize(s.markers_px.size());
  for (std::size_t k = 0; k < s.marker_count(); ++k) {
    e.markers[2 * k] = norm.marker_x(s.markers_px[2 * k]);
    e.markers[2 * k + 1] = norm.marker_y(s.markers_px[2 * k + 1]);
  }
  for (int k = 0; k < 3; ++k) e.pose[k] = norm.translation(s.pose[k]);
  for (int k = 3; k < 7; ++k) e.pose[k] = s.pose[k];
  return e;
}

Batch make_batch(const std::vector<Example>& ex, const std::vector<std::size_t>& idx, int w,
                 int h) {
  if (idx.empty()) throw Error(ErrorCode::kEmptyInput, "make_batch: no examples");
  const int b = static_cast<int>(idx.size());
  const int m = static_cast<int>(ex[idx[0]].markers.size());
  Batch out{Tensor::zeros(b, 3, h, w), Tensor::zeros(b, 3, h, w), Tensor::zeros(b, 3, h, w),
            Tensor::zeros(b, 1, h, w), Tensor::zeros(b, m, 1, 1), Tensor::zeros(b, 7, 1, 1)};
  const std::size_t img = static_cast<std::size_t>(3) * h * w;
  const std::size_t map = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < b; ++k) {
    const Example& e = ex.at(idx[k]);
    if (e.marked.size() != img || e.pure.size() != img || e.depth.size() != map ||
        e.markers.size() != static_cast<std::size_t>(m)) {
      throw Error(ErrorCode::kShapeMismatch, "make_batch: example dims differ");
    }
    std::copy(e.marked.begin(), e.marked.end(), out.input.v.begin() + k * img);
    std::copy(e.marked.begin(), e.marked.end(), out.marked.v.begin() + k * img);
    std::copy(e.pure.begin(), e.pure.end(), out.pure.v.begin() + k * img);
    std::copy(e.depth.begin(), e.depth.end(), out.depth.v.begin() + k * map);
    std::copy(e.markers.begin(), e.markers.end(), out.markers.v.begin() + k * m);
    std::copy(e.pose.begin(), e.pose.end(), out.pose.v.begin() + k * 7);
  }
  return out;
}

// ----- network -----

namespace {

Eigen::Map<const Mat> view(const std::vector<double>& w, const Slot& s) {
  return Eigen::Map<const Mat>(w.data() + s.off, s.rows, s.cols);
}
Eigen::Map<Mat> view(std::vector<double>& w, const Slot& s) {
  return Eigen::Map<Mat>(w.data() + s.off, s.rows, s.cols);
}

// Columns of a k4 s2 p1 convolution over (c x b*h*w) producing (h/2, w/2).
Mat im2col(const Mat& x, int c, int b, int h, int w) {
  const int ho = h / 2, wo = w / 2;
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(c) * 16, static_cast<Eigen::Index>(b) * ho * wo);
  for (int n = 0; n < b; ++n) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(n) * ho + oy) * wo + ox;
        for (int ky = 0; ky < 4; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 4; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(n) * h + iy) * w + ix;
            for (int ch = 0; ch < c; ++ch) cols(ch * 16 + ky * 4 + kx, col) = x(ch, src);
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col.
Mat col2im(const Mat& cols, int c, int b, int h, int w) {
  const int ho = h / 2, wo = w / 2;
  Mat x = Mat::Zero(c, static_cast<Eigen::Index>(b) * h * w);
  for (int n = 0; n < b; ++n) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(n) * ho + oy) * wo + ox;
        for (int ky = 0; ky < 4; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 4; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const Eigen::Index dst = (static_cast<Eigen::Index>(n) * h + iy) * w + ix;
            for (int ch = 0; ch < c; ++ch) x(ch, dst) += cols(ch * 16 + ky * 4 + kx, col);
          }
        }
      }
    }
  }
  return x;
}

// (c x b*p) <-> (c*p x b)
Mat flatten(const Mat& x, int c, int b, int p) {
  Mat out(static_cast<Eigen::Index>(c) * p, b);
  for (int n = 0; n < b; ++n) {
    for (int ch = 0; ch < c; ++ch) {
      for (int k = 0; k < p; ++k) {
        out(static_cast<Eigen::Index>(ch) * p + k, n) = x(ch, static_cast<Eigen::Index>(n) * p + k);
      }
    }
  }
  return out;
}
Mat unflatten(const Mat& f, int c, int b, int p) {
  Mat out(c, static_cast<Eigen::Index>(b) * p);
  for (int n = 0; n < b; ++n) {
    for (int ch = 0; ch < c; ++ch) {
      for (int k = 0; k < p; ++k) {
        out(ch, static_cast<Eigen::Index>(n) * p + k) = f(static_cast<Eigen::Index>(ch) * p + k, n);
      }
    }
  }
  return out;
}

Mat silu(const Mat& x) {
  return x.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}
Mat silu_back(const Mat& pre, const Mat& grad) {
  return grad.binaryExpr(pre, [](double g, double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return g * s * (1.0 + v * (1.0 - s));
  });
}

Mat image_to_mat(const Tensor& t) {
  Mat m(t.c, static_cast<Eigen::Index>(t.n) * t.h * t.w);
  const Eigen::Index p = static_cast<Eigen::Index>(t.h) * t.w;
  for (int n = 0; n < t.n; ++n) {
    for (int c = 0; c < t.c; ++c) {
      for (Eigen::Index k = 0; k < p; ++k) {
        m(c, n * p + k) = t.v[(static_cast<std::size_t>(n) * t.c + c) * p + k];
      }
    }
  }
  return m;
}
Tensor mat_to_image(const Mat& m, int n, int c, int h, int w) {
  Tensor t = Tensor::zeros(n, c, h, w);
  const Eigen::Index p = static_cast<Eigen::Index>(h) * w;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (Eigen::Index k = 0; k < p; ++k) {
        t.v[(static_cast<std::size_t>(b) * c + ch) * p + k] = m(ch, b * p + k);
      }
    }
  }
  return t;
}
Mat vector_to_mat(const Tensor& t) {
  Mat m(t.c, t.n);
  for (int n = 0; n < t.n; ++n) {
    for (int c = 0; c < t.c; ++c) m(c, n) = t.v[static_cast<std::size_t>(n) * t.c + c];
  }
  return m;
}
Tensor mat_to_vector(const Mat& m) {
  Tensor t = Tensor::zeros(static_cast<int>(m.cols()), static_cast<int>(m.rows()), 1, 1);
  for (Eigen::Index n = 0; n < m.cols(); ++n) {
    for (Eigen::Index c = 0; c < m.rows(); ++c) t.v[n * m.rows() + c] = m(c, n);
  }
  return t;
}

struct EncoderCache {
  std::array<Mat, 3> cols, pre, act;
  Mat flat, z;
};
struct HeadCache {
  Mat pre_fc, small, pre1, a1, pre2, a2, out;
};
struct MlpCache {
  Mat pre1, a1, out;
};
struct Cache {
  int b = 0;
  EncoderCache enc;
  std::array<HeadCache, 3> heads;
  MlpCache markers, pose;
};

Mat affine(const std::vector<double>& w, const Dense& d, const Mat& x) {
  Mat y = view(w, d.w) * x;
  y.colwise() += view(w, d.b).col(0);
  return y;
}

void run_forward(const LearnerParams& p, const Layout& l, const Tensor& input, Cache& c) {
  const Architecture& a = p.arch;
  if (input.c != 3 || input.h != a.input_h || input.w != a.input_w || input.n < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "forward: expected (B, 3, " + std::to_string(a.input_h) + ", " +
                    std::to_string(a.input_w) + ") input");
  }
  if (p.w.size() != l.total) {
    throw Error(ErrorCode::kShapeMismatch, "forward: parameter vector length mismatch");
  }
  const int b = input.n;
  c.b = b;
  const std::array<int, 4> ch = {3, a.channels[0], a.channels[1], a.channels[2]};
  Mat x = image_to_mat(input);
  for (int k = 0; k < 3; ++k) {
    c.enc.cols[k] = im2col(k == 0 ? x : c.enc.act[k - 1], ch[k], b, l.h[k], l.w[k]);
    c.enc.pre[k] = affine(p.w, l.conv[k], c.enc.cols[k]);
    c.enc.act[k] = silu(c.enc.pre[k]);
  }
  const int p3 = l.h[3] * l.w[3];
  c.enc.flat = flatten(c.enc.act[2], ch[3], b, p3);
  c.enc.z = affine(p.w, l.enc_fc, c.enc.flat);

  for (int k = 0; k < 3; ++k) {
    const Head& hd = l.heads[k];
    HeadCache& hc = c.heads[k];
    hc.pre_fc = affine(p.w, hd.fc, c.enc.z);
    hc.small = unflatten(silu(hc.pre_fc), ch[3], b, p3);
    hc.pre1 = col2im(view(p.w, hd.up1.w) * hc.small, ch[2], b, l.h[2], l.w[2]);
    hc.pre1.colwise() += view(p.w, hd.up1.b).col(0);
    hc.a1 = silu(hc.pre1);
    hc.pre2 = col2im(view(p.w, hd.up2.w) * hc.a1, ch[1], b, l.h[1], l.w[1]);
    hc.pre2.colwise() += view(p.w, hd.up2.b).col(0);
    hc.a2 = silu(hc.pre2);
    hc.out = col2im(view(p.w, hd.up3.w) * hc.a2, hd.out_channels, b, l.h[0], l.w[0]);
    hc.out.colwise() += view(p.w, hd.up3.b).col(0);
  }
  for (auto [m, mc] : {std::pair{&l.markers, &c.markers}, std::pair{&l.pose, &c.pose}}) {
    mc->pre1 = affine(p.w, m->fc1, c.enc.z);
    mc->a1 = silu(mc->pre1);
    mc->out = affine(p.w, m->fc2, mc->a1);
  }
}

Predictions to_predictions(const Cache& c, const Layout& l, const Architecture& a) {
  Predictions out;
  out.marked = mat_to_image(c.heads[0].out, c.b, 3, l.h[0], l.w[0]);
  out.pure = mat_to_image(c.heads[1].out, c.b, 3, l.h[0], l.w[0]);
  out.depth = mat_to_image(c.heads[2].out, c.b, 1, l.h[0], l.w[0]);
  out.markers = mat_to_vector(c.markers.out);
  out.pose = mat_to_vector(c.pose.out);
  out.latent = mat_to_vector(c.enc.z);
  (void)a;
  return out;
}

void check_target(const Tensor& pred, const Tensor& target, const char* what) {
  if (pred.shape() != target.shape()) {
    throw Error(ErrorCode::kShapeMismatch, std::string("loss: ") + what + " shape mismatch");
  }
}

}  // namespace

Predictions forward(const LearnerParams& params, const Tensor& input) {
  const Layout l = make_layout(params.arch);
  Cache c;
  run_forward(params, l, input, c);
  return to_predictions(c, l, params.arch);
}

// ----- losses -----

double mse(const Tensor& pred, const Tensor& target) {
  check_target(pred, target, "tensor");
  if (pred.v.empty()) throw Error(ErrorCode::kEmptyInput, "mse: empty tensors");
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.v.size(); ++k) {
    const double d = pred.v[k] - target.v[k];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.v.size());
}

double loss_shape(const Predictions& p, const Batch& t) {
  return mse(p.marked, t.marked) + mse(p.pure, t.pure);
}
double loss_contact(const Predictions& p, const Batch& t) {
  return mse(p.depth, t.depth) + mse(p.markers, t.markers);
}
double loss_pose(const Predictions& p, const Batch& t) { return mse(p.pose, t.pose); }

double loss_total(double shape, double contact, double pose, const LearnerConfig& c) {
  return c.lambda_s * shape + c.lambda_c * contact + c.lambda_p * pose;
}

// ----- backward -----

namespace {

// d(weight * mse)/d(pred) in the internal layout.
Mat mse_grad(const Mat& pred, const Mat& target, double weight) {
  return (2.0 * weight / static_cast<double>(pred.size())) * (pred - target);
}

void dense_back(std::vector<double>& g, const Dense& d, const Mat& dy, const Mat& x) {
  view(g, d.w) += dy * x.transpose();
  view(g, d.b).col(0) += dy.rowwise().sum();
}

GradientResult backward_impl(const LearnerParams& p, const Batch& batch,
                             const LearnerConfig& cfg) {
  const Layout l = make_layout(p.arch);
  Cache c;
  run_forward(p, l, batch.input, c);
  const Predictions pred = to_predictions(c, l, p.arch);

  GradientResult r;
  r.losses.shape = loss_shape(pred, batch);
  r.losses.contact = loss_contact(pred, batch);
  r.losses.pose = loss_pose(pred, batch);
  r.losses.total = loss_total(r.losses.shape, r.losses.contact, r.losses.pose, cfg);
  r.grad.assign(l.total, 0.0);
  std::vector<double>& g = r.grad;

  const int b = c.b;
  const std::array<int, 4> ch = {3, p.arch.channels[0], p.arch.channels[1], p.arch.channels[2]};
  const int p3 = l.h[3] * l.w[3];
  Mat dz = Mat::Zero(c.enc.z.rows(), c.enc.z.cols());

  const std::array<Mat, 3> head_grads = {
      mse_grad(c.heads[0].out, image_to_mat(batch.marked), cfg.lambda_s),
      mse_grad(c.heads[1].out, image_to_mat(batch.pure), cfg.lambda_s),
      mse_grad(c.heads[2].out, image_to_mat(batch.depth), cfg.lambda_c)};
  for (int k = 0; k < 3; ++k) {
    const Head& hd = l.heads[k];
    const HeadCache& hc = c.heads[k];
    const Mat& dout = head_grads[k];
    view(g, hd.up3.b).col(0) += dout.rowwise().sum();
    const Mat dcols3 = im2col(dout, hd.out_channels, b, l.h[0], l.w[0]);
    view(g, hd.up3.w) += dcols3 * hc.a2.transpose();
    const Mat dpre2 = silu_back(hc.pre2, view(p.w, hd.up3.w).transpose() * dcols3);
    view(g, hd.up2.b).col(0) += dpre2.rowwise().sum();
    const Mat dcols2 = im2col(dpre2, ch[1], b, l.h[1], l.w[1]);
    view(g, hd.up2.w) += dcols2 * hc.a1.transpose();
    const Mat dpre1 = silu_back(hc.pre1, view(p.w, hd.up2.w).transpose() * dcols2);
    view(g, hd.up1.b).col(0) += dpre1.rowwise().sum();
    const Mat dcols1 = im2col(dpre1, ch[2], b, l.h[2], l.w[2]);
    view(g, hd.up1.w) += dcols1 * hc.small.transpose();
    const Mat dsmall = view(p.w, hd.up1.w).transpose() * dcols1;
    const Mat dpre_fc = silu_back(hc.pre_fc, flatten(dsmall, ch[3], b, p3));
    dense_back(g, hd.fc, dpre_fc, c.enc.z);
    dz += view(p.w, hd.fc.w).transpose() * dpre_fc;
  }

  const auto mlp_back = [&](const Mlp& m, const MlpCache& mc, const Mat& dout) {
    dense_back(g, m.fc2, dout, mc.a1);
    const Mat dpre1 = silu_back(mc.pre1, view(p.w, m.fc2.w).transpose() * dout);
    dense_back(g, m.fc1, dpre1, c.enc.z);
    dz += view(p.w, m.fc1.w).transpose() * dpre1;
  };
  mlp_back(l.markers, c.markers,
           mse_grad(c.markers.out, vector_to_mat(batch.markers), cfg.lambda_c));
  mlp_back(l.pose, c.pose, mse_grad(c.pose.out, vector_to_mat(batch.pose), cfg.lambda_p));

  dense_back(g, l.enc_fc, dz, c.enc.flat);
  Mat dact = unflatten(view(p.w, l.enc_fc.w).transpose() * dz, ch[3], b, p3);
  for (int k = 2; k >= 0; --k) {
    const Mat dpre = silu_back(c.enc.pre[k], dact);
    dense_back(g, l.conv[k], dpre, c.enc.cols[k]);
    if (k > 0) {
      dact = col2im(view(p.w, l.conv[k].w).transpose() * dpre, ch[k], b, l.h[k], l.w[k]);
    }
  }
  return r;
}

void check_batch(const Batch& batch, const Architecture& a) {
  const int b = batch.size();
  const std::array<int, 4> img = {b, 3, a.input_h, a.input_w};
  if (batch.marked.shape() != img || batch.pure.shape() != img ||
      batch.depth.shape() != std::array<int, 4>{b, 1, a.input_h, a.input_w} ||
      batch.markers.shape() != std::array<int, 4>{b, 2 * a.n_markers, 1, 1} ||
      batch.pose.shape() != std::array<int, 4>{b, 7, 1, 1}) {
    throw Error(ErrorCode::kShapeMismatch, "batch targets do not match the architecture");
  }
}

}  // namespace

GradientResult backward(const LearnerParams& params, const Batch& batch,
                        const LearnerConfig& config) {
  check_batch(batch, params.arch);
  GradientResult r = backward_impl(params, batch, config);
  for (std::size_t k = 0; k < r.grad.size(); ++k) {
    if (!std::isfinite(r.grad[k])) {
      throw Error(ErrorCode::kNonfiniteGradient,
                  "non-finite gradient at parameter index " + std::to_string(k));
    }
  }
  return r;
}

Losses evaluate_losses(const LearnerParams& params, const Batch& batch,
                       const LearnerConfig& config) {
  check_batch(batch, params.arch);
  const Predictions p = forward(params, batch.input);
  Losses out;
  out.shape = loss_shape(p, batch);
  out.contact = loss_contact(p, batch);
  out.pose = loss_pose(p, batch);
  out.total = loss_total(out.shape, out.contact, out.pose, config);
  return out;
}

GradCheckResult gradient_check(const LearnerParams& params, const Batch& batch,
                               const LearnerConfig& config, int coords, std::uint64_t seed,
                               double step) {
  const GradientResult analytic = backward(params, batch, config);
  LearnerParams probe = params;
  Rng rng(seed);
  GradCheckResult out;
  for (int k = 0; k < coords; ++k) {
    const std::size_t i = rng.next_u64() % params.w.size();
    const double w0 = probe.w[i];
    probe.w[i] = w0 + step;
    const double up = evaluate_losses(probe, batch, config).total;
    probe.w[i] = w0 - step;
    const double down = evaluate_losses(probe, batch, config).total;
    probe.w[i] = w0;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.grad[i];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
    if (k == 0 || rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = i;
    }
  }
  return out;
}

// ----- training -----

TrainResult train(const LearnerConfig& config, const std::vector<Example>& data, int n_markers) {
  config.validate();
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "train: no examples");
  const Architecture arch = Architecture::from(config, n_markers);
  TrainResult out{init_params(arch, config.seed), {}};
  std::vector<double> velocity(out.params.w.size(), 0.0);
  Rng shuffle(mix64(config.seed ^ 0x5eedULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[shuffle.next_u64() % k]);
    }
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      const Batch batch = make_batch(data, idx, config.input_w, config.input_h);
      check_batch(batch, arch);
      const GradientResult r = backward_impl(out.params, batch, config);
      if (!std::isfinite(r.losses.total)) {
        throw Error(ErrorCode::kDivergence,
                    "training diverged in epoch " + std::to_string(epoch + 1));
      }
      for (std::size_t i = 0; i < r.grad.size(); ++i) {
        if (!std::isfinite(r.grad[i])) {
          throw Error(ErrorCode::kNonfiniteGradient,
                      "non-finite gradient at parameter index " + std::to_string(i));
        }
      }
      for (std::size_t i = 0; i < r.grad.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] - config.lr * r.grad[i];
        out.params.w[i] += velocity[i];
      }
      sum += r.losses.total * static_cast<double>(idx.size());
    }
    out.epoch_loss.push_back(sum / static_cast<double>(data.size()));
  }
  return out;
}

std::vector<double> embed(const LearnerParams& params, const std::vector<double>& image) {
  const Architecture& a = params.arch;
  Tensor t = Tensor::zeros(1, 3, a.input_h, a.input_w);
  if (image.size() != t.v.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embed: image size does not match the architecture");
  }
  t.v = image;
  const Predictions p = forward(params, t);
  return p.latent.v;
}

LinearProbe LinearProbe::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge) {
  if (x.rows() == 0 || x.rows() != y.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "probe: feature and target rows differ");
  }
  Mat xa(x.rows(), x.cols() + 1);
  xa << x, Mat::Ones(x.rows(), 1);
  Mat gram = xa.transpose() * xa;
  for (Eigen::Index k = 0; k < x.cols(); ++k) gram(k, k) += ridge;
  return LinearProbe{gram.ldlt().solve(xa.transpose() * y)};
}

Eigen::MatrixXd LinearProbe::predict(const Eigen::MatrixXd& x) const {
  Mat xa(x.rows(), x.cols() + 1);
  xa << x, Mat::Ones(x.rows(), 1);
  return xa * weights;
}

// ----- I/O -----

std::vector<Example> load_examples(const std::filesystem::path& dir, const LearnerConfig& config,
                                   std::size_t limit, Normalizer* norm_out, int* n_markers_out) {
  const Manifest m = read_manifest(dir);
  const Normalizer norm = Normalizer::from_profile(m.sensor_profile);
  const FrameDims dims = FrameDims::of(m.sensor_profile);
  std::vector<Example> out;
  for (const auto& e : m.episode_index) {
    if (out.size() >= limit) break;
    std::ifstream in(dir / e.file, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + (dir / e.file).string() + "'");
    EpisodeReader reader(in, dims);
    Sample s;
    while (out.size() < limit && reader.next(s)) {
      out.push_back(make_example(s, norm, config.input_w, config.input_h));
    }
  }
  if (norm_out) *norm_out = norm;
  if (n_markers_out) *n_markers_out = m.sensor_profile.marker_count();
  return out;
}

void write_params(const std::filesystem::path& path, const LearnerParams& params,
                  const Normalizer& norm, const json& extra) {
  json blocks = json::array();
  for (const auto& b : params.arch.index_map()) {
    blocks.push_back(json{{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
  }
  const json header{{"format", "vtsim-learner-params"},
                    {"version", 1},
                    {"architecture", params.arch.to_json()},
                    {"normalization", norm.to_json()},
                    {"param_count", params.w.size()},
                    {"index_map", blocks},
                    {"extra", extra}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create '" + path.string() + "'");
  const auto put_u32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  put_u32(static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double w : params.w) put_u32(std::bit_cast<std::uint32_t>(static_cast<float>(w)));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

LearnerParams read_params(const std::filesystem::path& path, Normalizer* norm_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  const auto get_u32 = [&](const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw Error(ErrorCode::kTruncatedFile, std::string("params: ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const std::uint32_t len = get_u32("header length");
  if (len > (1u << 26)) throw Error(ErrorCode::kCorruptRecord, "params: implausible header");
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (static_cast<std::uint32_t>(in.gcount()) != len) {
    throw Error(ErrorCode::kTruncatedFile, "params: header");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptRecord, std::string("params header: ") + e.what());
  }
  if (header.value("format", "") != "vtsim-learner-params") {
    throw Error(ErrorCode::kBadMagic, "params: not a learner parameter file");
  }
  LearnerParams p;
  p.arch = Architecture::from_json(header.at("architecture"));
  const std::size_t n = p.arch.param_count();
  if (header.value("param_count", std::size_t{0}) != n) {
    throw Error(ErrorCode::kDimMismatch, "params: parameter count disagrees with architecture");
  }
  p.w.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.w[k] = static_cast<double>(std::bit_cast<float>(get_u32("weights")));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kTrailingData, "params: trailing bytes");
  }
  if (norm_out) *norm_out = Normalizer::from_json(header.at("normalization"));
  return p;
}

}  // namespace vtsim
