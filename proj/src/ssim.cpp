#include <algorithm>
#include <cmath>

#include "absvo/errors.hpp"
#include "absvo/losses.hpp"

namespace absvo {

namespace {

struct WindowStats {
  int n = 0;
  double mu_a = 0.0, mu_b = 0.0;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
};

// 3x3 window around (r, c) restricted to the image and to masked pixels.
template <typename Visit>
void for_window(int h, int w, int r, int c, const Mask* mask, Visit&& visit) {
  for (int rr = std::max(r - 1, 0); rr <= std::min(r + 1, h - 1); ++rr)
    for (int cc = std::max(c - 1, 0); cc <= std::min(c + 1, w - 1); ++cc) {
      const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
      if (mask && !(*mask)[j]) continue;
      visit(j);
    }
}

WindowStats window_stats(const ImageBuffer& a, const ImageBuffer& b, int r, int c, int ch,
                         const Mask* mask) {
  WindowStats s;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  const int nc = a.channels();
  for_window(a.height(), a.width(), r, c, mask, [&](std::size_t j) {
    const double va = a.values()[j * nc + ch];
    const double vb = b.values()[j * nc + ch];
    sa += va;
    sb += vb;
    saa += va * va;
    sbb += vb * vb;
    sab += va * vb;
    ++s.n;
  });
  const double inv = 1.0 / s.n;
  s.mu_a = sa * inv;
  s.mu_b = sb * inv;
  s.var_a = saa * inv - s.mu_a * s.mu_a;
  s.var_b = sbb * inv - s.mu_b * s.mu_b;
  s.cov = sab * inv - s.mu_a * s.mu_b;
  return s;
}

double ssim_from_stats(const WindowStats& s) {
  const double a1 = 2.0 * s.mu_a * s.mu_b + kSsimC1;
  const double a2 = 2.0 * s.cov + kSsimC2;
  const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1;
  const double b2 = s.var_a + s.var_b + kSsimC2;
  return (a1 * a2) / (b1 * b2);
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_s >= 0.0 && lambda_s <= 1.0)) throw ConfigError("lambda_s must lie in [0, 1]");
  for (double v : {lambda_p, lambda_o, w_spatial_photo, w_disp, w_pose, w_temporal_photo, w_geo})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be non-negative");
}

ImageBuffer ssim(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("ssim: image shapes differ");
  ImageBuffer out(a.height(), a.width(), a.channels());
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c)
      for (int ch = 0; ch < a.channels(); ++ch)
        out.at(r, c, ch) = ssim_from_stats(window_stats(a, b, r, c, ch, nullptr));
  return out;
}

PhotometricLoss photometric_loss(const ImageBuffer& orig, const ImageBuffer& synth,
                                 const Mask& mask, double lambda_s) {
  if (!orig.same_shape(synth)) throw DimensionMismatch("photometric_loss: image shapes differ");
  if (mask.size() != orig.pixel_count())
    throw DimensionMismatch("photometric_loss: mask size differs from image");

  PhotometricLoss out;
  out.valid_pixels = count_valid(mask);
  if (out.valid_pixels == 0) throw EmptyMask("photometric_loss: no valid pixels");
  out.grad_synth = ImageBuffer(orig.height(), orig.width(), orig.channels());

  const int h = orig.height(), w = orig.width(), nc = orig.channels();
  const double norm = 1.0 / (static_cast<double>(out.valid_pixels) * nc);
  auto o = orig.values();
  auto s = synth.values();
  auto g = out.grad_synth.values();

  double l1 = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    for (int ch = 0; ch < nc; ++ch) {
      const std::size_t k = i * nc + ch;
      const double d = s[k] - o[k];
      l1 += std::abs(d);
      g[k] += (1.0 - lambda_s) * norm * ((d > 0.0) - (d < 0.0));
    }
  }
  out.l1_term = l1 * norm;

  double dissim = 0.0;
  if (lambda_s > 0.0) {
    const double coef = -0.5 * lambda_s * norm;  // d(value)/d(SSIM_i)
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        if (!mask[static_cast<std::size_t>(r) * w + c]) continue;
        for (int ch = 0; ch < nc; ++ch) {
          const WindowStats st = window_stats(orig, synth, r, c, ch, &mask);
          const double a1 = 2.0 * st.mu_a * st.mu_b + kSsimC1;
          const double a2 = 2.0 * st.cov + kSsimC2;
          const double b1 = st.mu_a * st.mu_a + st.mu_b * st.mu_b + kSsimC1;
          const double b2 = st.var_a + st.var_b + kSsimC2;
          const double value = (a1 * a2) / (b1 * b2);
          dissim += 0.5 * (1.0 - value);

          const double d_mu_b = 2.0 * st.mu_a * a2 / (b1 * b2) - value * 2.0 * st.mu_b / b1;
          const double d_var_b = -value / b2;
          const double d_cov = 2.0 * a1 / (b1 * b2);
          const double inv_n = 1.0 / st.n;
          for_window(h, w, r, c, &mask, [&](std::size_t j) {
            const std::size_t k = j * nc + ch;
            const double dv = d_mu_b * inv_n + d_var_b * 2.0 * (s[k] - st.mu_b) * inv_n +
                              d_cov * (o[k] - st.mu_a) * inv_n;
            g[k] += coef * dv;
          });
        }
      }
  }
  out.ssim_term = dissim * norm;
  out.value = lambda_s * out.ssim_term + (1.0 - lambda_s) * out.l1_term;
  return out;
}

}  // namespace absvo
