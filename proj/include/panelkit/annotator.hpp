#pragma once

#include <cstddef>
#include <vector>

#include "panelkit/rng.hpp"

namespace panelkit::annotator {

// Generative model of one estimator class (a human perspective-taking pool,
// an LLM sampled k times, ...). The systematic error has two additive
// sources: misweighting who is being judged for (the _w fields, for
// "wide" / representation) and misreading how they judge (the _c fields,
// for "clear" / processing). Residuals share one exchangeable pairwise
// correlation gamma, the part of the error budget no amount of aggregation
// removes.
struct AnnotatorSpec {
  double mu_w = 0.0;      // mean representation bias
  double mu_c = 0.0;      // mean processing bias
  double var_w = 0.0;     // per-annotator variation of the representation part
  double var_c = 0.0;     // per-annotator variation of the processing part
  double cov_wc = 0.0;    // covariance between the two parts
  double var_eps = 0.0;   // idiosyncratic noise variance
  double gamma = 0.0;     // exchangeable residual correlation, in [0,1)
};

// Enforces: variances non-negative, |cov_wc| <= sqrt(var_w var_c),
// gamma in [0,1), and total variance non-negative.
void validate(const AnnotatorSpec& a);

double total_bias(const AnnotatorSpec& a);       // mu_w + mu_c

// V = var_w + var_c + 2 cov_wc + var_eps, with the sum rounded once so the
// value is exact even when a negative covariance cancels most of it.
double total_variance(const AnnotatorSpec& a);

struct Panel {
  std::vector<double> predictions;  // one per simulated annotator
  double truth = 0.0;               // the f_star the panel was asked about
};

// Draws k predictions f_star + total_bias + r_i with residuals
// r_i = sqrt(V) (sqrt(gamma) z0 + sqrt(1-gamma) z_i), z0 shared across the
// panel. Equal variance V, pairwise correlation gamma, exact for every k.
// With clip the predictions are clamped to [0,1] and moments become
// approximate.
Panel sample_panel(const AnnotatorSpec& a, double f_star, std::size_t k,
                   rng::Stream& stream, bool clip = false);

// Component-wise draw for diagnostics that need to see the error parts
// separately (e.g. checking that noise is uncorrelated with bias). Values
// include the mean biases; prediction_i = f_star + repr[i] + proc[i] +
// noise[i]. The joint law of the implied predictions matches sample_panel.
struct PanelComponents {
  std::vector<double> repr;
  std::vector<double> proc;
  std::vector<double> noise;
};

PanelComponents sample_panel_components(const AnnotatorSpec& a, std::size_t k,
                                        rng::Stream& stream);

// Arithmetic mean of the panel's predictions.
double aggregate(const Panel& p);

}  // namespace panelkit::annotator
