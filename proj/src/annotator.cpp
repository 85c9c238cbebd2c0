#include "panelkit/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail_sum.hpp"
#include "panelkit/errors.hpp"

namespace panelkit::annotator {

void validate(const AnnotatorSpec& a) {
  if (!(a.var_w >= 0.0) || !(a.var_c >= 0.0) || !(a.var_eps >= 0.0))
    throw ValidationError("variances must be non-negative");
  if (!(std::abs(a.cov_wc) <= std::sqrt(a.var_w * a.var_c) + 1e-15))
    throw ValidationError(
        "cov_wc violates the Cauchy-Schwarz bound sqrt(var_w var_c)");
  if (!(a.gamma >= 0.0 && a.gamma < 1.0))
    throw ValidationError("gamma must lie in [0,1)");
  if (total_variance(a) < 0.0)
    throw ValidationError("total variance is negative");
}

double total_bias(const AnnotatorSpec& a) { return a.mu_w + a.mu_c; }

double total_variance(const AnnotatorSpec& a) {
  // single rounding of the exact sum; 2*cov_wc is itself exact
  detail::Dd v = detail::two_sum(a.var_w, a.var_c);
  v = detail::dd_add(v, 2.0 * a.cov_wc);
  v = detail::dd_add(v, a.var_eps);
  return detail::dd_value(v);
}

Panel sample_panel(const AnnotatorSpec& a, double f_star, std::size_t k,
                   rng::Stream& stream, bool clip) {
  validate(a);
  if (k < 1) throw ValidationError("panel size k must be at least 1");

  double v = total_variance(a);
  double center = f_star + total_bias(a);
  double shared_scale = std::sqrt(v) * std::sqrt(a.gamma);
  double own_scale = std::sqrt(v) * std::sqrt(1.0 - a.gamma);

  Panel panel;
  panel.truth = f_star;
  panel.predictions.resize(k);
  double shared = shared_scale * stream.normal();
  for (std::size_t i = 0; i < k; ++i) {
    double p = center + shared + own_scale * stream.normal();
    if (clip) p = std::clamp(p, 0.0, 1.0);
    panel.predictions[i] = p;
  }
  return panel;
}

PanelComponents sample_panel_components(const AnnotatorSpec& a, std::size_t k,
                                        rng::Stream& stream) {
  validate(a);
  if (k < 1) throw ValidationError("panel size k must be at least 1");

  // Cholesky factors of the 2x2 bias covariance; the clamp absorbs the
  // roundoff when |cov_wc| sits exactly on the Cauchy-Schwarz boundary.
  double sw = std::sqrt(a.var_w);
  double c10 = sw > 0.0 ? a.cov_wc / sw : 0.0;
  double c11 = std::sqrt(std::max(0.0, a.var_c - c10 * c10));
  double se = std::sqrt(a.var_eps);

  auto draw_joint = [&](double& bw, double& bc) {
    double z1 = stream.normal();
    double z2 = stream.normal();
    bw = sw * z1;
    bc = c10 * z1 + c11 * z2;
  };

  // One shared component plus per-annotator components, weighted so each
  // error part keeps its marginal moments while the summed residuals get
  // pairwise correlation gamma.
  double wg = std::sqrt(a.gamma);
  double wo = std::sqrt(1.0 - a.gamma);
  double w0, c0;
  draw_joint(w0, c0);
  double e0 = se * stream.normal();

  PanelComponents out;
  out.repr.resize(k);
  out.proc.resize(k);
  out.noise.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double wi, ci;
    draw_joint(wi, ci);
    double ei = se * stream.normal();
    out.repr[i] = a.mu_w + wg * w0 + wo * wi;
    out.proc[i] = a.mu_c + wg * c0 + wo * ci;
    out.noise[i] = wg * e0 + wo * ei;
  }
  return out;
}

double aggregate(const Panel& p) {
  if (p.predictions.empty())
    throw ValidationError("cannot aggregate an empty panel");
  double s = 0.0;
  for (double x : p.predictions) s += x;
  return s / static_cast<double>(p.predictions.size());
}

}  // namespace panelkit::annotator
