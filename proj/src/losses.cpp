// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "aerosplat/errors.hpp"

namespace aerosplat {

void LossConfig::validate() const {
  if (lambda_dssim < 0.0 || lambda_l2 < 0.0) {
    throw DomainError("loss config: lambda weights must be non-negative");
  }
  if (edge_floor < 0.0) throw DomainError("loss config: edge floor must be non-negative");
  std::set<int> seen;
  for (int s : sobel_scales) {
    if (s <= 0 || !seen.insert(s).second) {
      throw DomainError("loss config: sobel scales must be distinct positive integers");
    }
  }
}

namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b)) throw DomainError(std::string(op) + ": image shape mismatch");
}

std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Single-channel plane, row-major.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable "valid" correlation with the SSIM window.
Plane filter_valid(const Plane& in, const std::array<double, kSsimWindow>& k) {
  const int ow = in.w - kSsimWindow + 1;
  const int oh = in.h - kSsimWindow + 1;
  Plane tmp(ow, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * in(x + i, y);
      tmp(x, y) = s;
    }
  }
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * tmp(x, y + i);
      out(x, y) = s;
    }
  }
  return out;
}

// Transpose of filter_valid: scatters a window map back to input pixels.
Plane filter_valid_adjoint(const Plane& in, int w, int h,
                           const std::array<double, kSsimWindow>& k) {
  Plane tmp(in.w, h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      for (int i = 0; i < kSsimWindow; ++i) tmp(x, y + i) += k[i] * in(x, y);
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      for (int i = 0; i < kSsimWindow; ++i) out(x + i, y) += k[i] * tmp(x, y);
    }
  }
  return out;
}

Plane channel_plane(const Image& img, int c) {
  Plane p(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) p(x, y) = img.at(x, y, c);
  }
  return p;
}

Plane sobel_plane(const Plane& p) {
  Plane out(p.w, p.h);
  auto at = [&](int x, int y) {
    return p(std::clamp(x, 0, p.w - 1), std::clamp(y, 0, p.h - 1));
  };
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
      out(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw DomainError("mse: empty image");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

double ssim(const Image& a, const Image& b, Image* grad_a) {
  require_same_shape(a, b, "ssim");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw DomainError("ssim: image smaller than the 11x11 window");
  }
  const auto k = ssim_kernel();
  const int w = a.width();
  const int h = a.height();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  const double norm = 1.0 / (static_cast<double>(ow) * oh * a.channels());
  if (grad_a) *grad_a = Image(w, h, a.channels());

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const Plane x = channel_plane(a, c);
    const Plane y = channel_plane(b, c);
    Plane xx(w, h), yy(w, h), xy(w, h);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      xx.v[i] = x.v[i] * x.v[i];
      yy.v[i] = y.v[i] * y.v[i];
      xy.v[i] = x.v[i] * y.v[i];
    }
    const Plane mx = filter_valid(x, k);
    const Plane my = filter_valid(y, k);
    const Plane fxx = filter_valid(xx, k);
    const Plane fyy = filter_valid(yy, k);
    const Plane fxy = filter_valid(xy, k);

    Plane coef_mean(ow, oh), coef_var(ow, oh), coef_cov(ow, oh);
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
      const double mux = mx.v[i], muy = my.v[i];
      const double sxx = fxx.v[i] - mux * mux;
      const double syy = fyy.v[i] - muy * muy;
      const double sxy = fxy.v[i] - mux * muy;
      const double a1 = 2.0 * mux * muy + kSsimC1;
      const double a2 = 2.0 * sxy + kSsimC2;
      const double b1 = mux * mux + muy * muy + kSsimC1;
      const double b2 = sxx + syy + kSsimC2;
      total += a1 * a2 / (b1 * b2);
      if (grad_a) {
        // Partials w.r.t. mu_x, sigma_x^2 and sigma_xy as independent inputs.
        const double d_mu = (2.0 * muy * a2) / (b1 * b2) - a1 * a2 * 2.0 * mux / (b1 * b1 * b2);
        const double d_var = -a1 * a2 / (b1 * b2 * b2);
        const double d_cov = 2.0 * a1 / (b1 * b2);
        coef_mean.v[i] = norm * (d_mu - 2.0 * d_var * mux - d_cov * muy);
        coef_var.v[i] = norm * 2.0 * d_var;
        coef_cov.v[i] = norm * d_cov;
      }
    }
    if (grad_a) {
      const Plane g_mean = filter_valid_adjoint(coef_mean, w, h, k);
      const Plane g_var = filter_valid_adjoint(coef_var, w, h, k);
      const Plane g_cov = filter_valid_adjoint(coef_cov, w, h, k);
      for (int yy_ = 0; yy_ < h; ++yy_) {
        for (int xx_ = 0; xx_ < w; ++xx_) {
          grad_a->at(xx_, yy_, c) = g_mean(xx_, yy_) + x(xx_, yy_) * g_var(xx_, yy_) +
                                    y(xx_, yy_) * g_cov(xx_, yy_);
        }
      }
    }
  }
  return total * norm;
}

double dssim(const Image& a, const Image& b, Image* grad_a) {
  const double s = ssim(a, b, grad_a);
  if (grad_a) {
    for (double& g : grad_a->data()) g *= -0.5;
  }
  return (1.0 - s) / 2.0;
}

Image sobel_magnitude(const Image& img) {
  Image out(img.width(), img.height(), 1);
  for (int c = 0; c < img.channels(); ++c) {
    const Plane m = sobel_plane(channel_plane(img, c));
    for (std::size_t i = 0; i < m.v.size(); ++i) out.data()[i] += m.v[i];
  }
  for (double& v : out.data()) v /= img.channels();
  return out;
}

double edge_weighted_l2(const Image& pred, const Image& target, const LossConfig& cfg,
                        Image* grad_pred) {
  require_same_shape(pred, target, "edge_weighted_l2");
  cfg.validate();
  if (grad_pred) *grad_pred = Image(pred.width(), pred.height(), pred.channels());
  double total = 0.0;
  for (int s : cfg.sobel_scales) {
    const Image p = downsample_average(pred, s);
    const Image t = downsample_average(target, s);
    if (p.empty()) throw DomainError("edge_weighted_l2: scale larger than the image");
    Image edges = sobel_magnitude(t);
    const double peak = *std::max_element(edges.data().begin(), edges.data().end());
    for (double& e : edges.data()) e = cfg.edge_floor + (peak > 0.0 ? e / peak : 0.0);
    const double inv_n = 1.0 / static_cast<double>(p.size());
    Image g(p.width(), p.height(), p.channels());
    double term = 0.0;
    for (int y = 0; y < p.height(); ++y) {
      for (int x = 0; x < p.width(); ++x) {
        const double wgt = edges.at(x, y);
        for (int c = 0; c < p.channels(); ++c) {
          const double d = p.at(x, y, c) - t.at(x, y, c);
          term += wgt * d * d;
          g.at(x, y, c) = 2.0 * wgt * d * inv_n;
        }
      }
    }
    total += term * inv_n;
    if (grad_pred) {
      const Image back = downsample_average_adjoint(g, s, pred.width(), pred.height());
      for (std::size_t i = 0; i < back.size(); ++i) grad_pred->data()[i] += back.data()[i];
    }
  }
  return total;
}

LossValue splat_loss(const Image& render, const Image& gt, const LossConfig& cfg,
                     Image* grad_render) {
  require_same_shape(render, gt, "splat_loss");
  LossValue v;
  v.l2 = mse(render, gt);
  Image g_dssim;
  if (cfg.lambda_dssim > 0.0) {
    v.dssim = dssim(render, gt, grad_render ? &g_dssim : nullptr);
  }
  v.total = cfg.lambda_dssim * v.dssim + cfg.lambda_l2 * v.l2;
  if (grad_render) {
    *grad_render = Image(render.width(), render.height(), render.channels());
    const double scale = 2.0 * cfg.lambda_l2 / static_cast<double>(render.size());
    for (std::size_t i = 0; i < render.size(); ++i) {
      double g = scale * (render.data()[i] - gt.data()[i]);
      if (cfg.lambda_dssim > 0.0) g += cfg.lambda_dssim * g_dssim.data()[i];
      grad_render->data()[i] = g;
    }
  }
  return v;
}

}  // namespace aerosplat
