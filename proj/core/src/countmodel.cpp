#include "rope/countmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "rope/error.hpp"
#include "rope/optimize.hpp"
#include "rope/rng.hpp"

namespace rope {
namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();
constexpr double kEdgeMargin = 1e-6;

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_bb(int B, double mu, double sigma) {
  require(B >= 0, "beta-binomial: B must be >= 0");
  require(mu > 0.0 && mu < 1.0, "beta-binomial: mu must be in (0, 1)");
  require(sigma > 0.0 && std::isfinite(sigma), "beta-binomial: sigma must be positive");
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_add_exp(double a, double b) {
  if (a == kMinusInf) return b;
  if (b == kMinusInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Unnormalised alternative masses (f_BB(w) - f_BB(c))_+ on {0..B}.
std::vector<double> alt_unnormalised(int B, double mu2, int c) {
  const auto logf = beta_binomial_log_pmf(B, mu2, mu2);
  const double base = std::exp(logf[static_cast<std::size_t>(c)]);
  std::vector<double> out(static_cast<std::size_t>(B) + 1, 0.0);
  for (int w = c + 1; w <= B; ++w)
    out[static_cast<std::size_t>(w)] = std::max(0.0, std::exp(logf[static_cast<std::size_t>(w)]) - base);
  return out;
}

}  // namespace

double beta_binomial_pmf(int w, int B, double mu, double sigma) {
  check_bb(B, mu, sigma);
  require(w >= 0 && w <= B, "beta-binomial: w outside [0, B]");
  const double a = mu / sigma;
  const double b = (1.0 - mu) / sigma;
  return std::exp(log_choose(B, w) + log_beta(w + a, B - w + b) - log_beta(a, b));
}

std::vector<double> beta_binomial_log_pmf(int B, double mu, double sigma) {
  check_bb(B, mu, sigma);
  const double a = mu / sigma;
  const double b = (1.0 - mu) / sigma;
  std::vector<double> out(static_cast<std::size_t>(B) + 1);
  // log f(0) from log-beta functions, then the ratio recurrence
  // f(w+1)/f(w) = (B-w)(w+a) / ((w+1)(B-w-1+b)).
  out[0] = log_beta(a, B + b) - log_beta(a, b);
  for (int w = 0; w < B; ++w) {
    out[static_cast<std::size_t>(w) + 1] =
        out[static_cast<std::size_t>(w)] +
        std::log(((B - w) * (w + a)) / ((w + 1.0) * (B - w - 1.0 + b)));
  }
  return out;
}

std::vector<double> null_pmf_vector(int B, double mu1, double sigma1, double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), "null_pmf: gamma must be positive");
  auto logf = beta_binomial_log_pmf(B, mu1, sigma1);
  for (auto& v : logf) v *= gamma;
  const double norm = log_sum_exp(logf);
  for (auto& v : logf) v = std::exp(v - norm);
  return logf;
}

double null_pmf(int w, int B, double mu1, double sigma1, double gamma) {
  require(w >= 0 && w <= B, "null_pmf: w outside [0, B]");
  return null_pmf_vector(B, mu1, sigma1, gamma)[static_cast<std::size_t>(w)];
}

std::vector<double> alt_pmf_vector(int B, double mu2, int c) {
  require(mu2 > 0.5 && mu2 < 1.0, "alt_pmf: mu2 must be in (0.5, 1)");
  require(c >= 0 && c < B, "alt_pmf: cutoff must satisfy 0 <= c < B");
  auto out = alt_unnormalised(B, mu2, c);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("alt_pmf: no mass above the cutoff");
  for (auto& v : out) v /= total;
  return out;
}

double alt_pmf(int w, int B, double mu2, int c) {
  require(w >= 0 && w <= B, "alt_pmf: w outside [0, B]");
  return alt_pmf_vector(B, mu2, c)[static_cast<std::size_t>(w)];
}

void MixtureParams::validate(int B) const {
  require(pi >= 0.0 && pi <= 1.0, "mixture: pi must be in [0, 1]");
  require(tau1 >= 0.0 && tau1 <= 1.0 && tau2 >= 0.0 && tau2 <= 1.0, "mixture: tau must be in [0, 1]");
  require(mu1 > 0.0 && sigma1 > 0.0 && mu1 + sigma1 < 1.0, "mixture: need mu1, sigma1 > 0 and mu1 + sigma1 < 1");
  require(mu2 > 0.5 && mu2 < 1.0, "mixture: mu2 must be in (0.5, 1)");
  require(gamma > 0.0, "mixture: gamma must be positive");
  require(c >= 0 && c < B, "mixture: cutoff must satisfy 0 <= c < B");
}

std::vector<double> null_component(const MixtureParams& params, int B) {
  auto f = null_pmf_vector(B, params.mu1, params.sigma1, params.gamma);
  for (int w = 0; w <= B; ++w) {
    auto& v = f[static_cast<std::size_t>(w)];
    v *= 1.0 - params.tau1;
    if (w <= params.c) v += params.tau1 / (params.c + 1.0);
  }
  return f;
}

std::vector<double> alt_component(const MixtureParams& params, int B) {
  auto f = alt_pmf_vector(B, params.mu2, params.c);
  for (auto& v : f) v *= 1.0 - params.tau2;
  f[static_cast<std::size_t>(B)] += params.tau2;
  return f;
}

std::vector<double> mixture_pmf_vector(const MixtureParams& params, int B) {
  params.validate(B);
  const auto f1 = null_component(params, B);
  const auto f2 = alt_component(params, B);
  std::vector<double> f(f1.size());
  for (std::size_t w = 0; w < f.size(); ++w) f[w] = (1.0 - params.pi) * f1[w] + params.pi * f2[w];
  return f;
}

double mixture_pmf(int w, const MixtureParams& params, int B) {
  require(w >= 0 && w <= B, "mixture_pmf: w outside [0, B]");
  return mixture_pmf_vector(params, B)[static_cast<std::size_t>(w)];
}

double separation(std::span<const double> f1, std::span<const double> f2, double pi, std::int64_t p) {
  require(f1.size() == f2.size(), "separation: component lengths differ");
  double g = 0.0;
  for (std::size_t w = 0; w < f1.size(); ++w) g += std::max(0.0, pi * f2[w] - (1.0 - pi) * f1[w]);
  return static_cast<double>(p) * g;
}

double separation(const MixtureParams& params, int B, std::int64_t p) {
  return separation(null_component(params, B), alt_component(params, B), params.pi, p);
}

int choose_cutoff(const CountHistogram& h, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "choose_cutoff: fraction must be in (0, 1]");
  const auto total = static_cast<double>(h.p());
  require(total > 0.0, "choose_cutoff: empty histogram");
  std::int64_t cumulative = 0;
  for (int w = 0; w <= h.B; ++w) {
    cumulative += h[w];
    if (static_cast<double>(cumulative) >= fraction * total) return w;
  }
  return h.B;
}

bool is_u_shaped(const CountHistogram& h, double inflation_fraction, const UShapeOptions& opt) {
  if (h.B < 2 || h.p() == 0) return false;
  const int c = choose_cutoff(h, inflation_fraction);
  const int top_start = std::max(1, static_cast<int>(std::ceil((1.0 - opt.top_fraction) * h.B)));
  const std::int64_t top_total = h.tail(top_start);
  if (top_total < opt.min_top_count) return false;
  const double top_mean = static_cast<double>(top_total) / (h.B - top_start + 1);

  const int lo = c + 1;
  const int hi = h.B - 1;  // valley is [lo, hi]
  if (hi < lo) return false;
  const int width = std::min(opt.smoothing_window, hi - lo + 1);
  double valley = std::numeric_limits<double>::infinity();
  for (int start = lo; start + width - 1 <= hi; ++start) {
    double s = 0.0;
    for (int w = start; w < start + width; ++w) s += static_cast<double>(h[w]);
    valley = std::min(valley, s / width);
  }
  return top_mean > opt.min_ratio * valley;
}

namespace {

struct WindowModel {
  std::vector<double> log_null;  // log f_null on {0..B}
  std::vector<double> log_alt;   // log f_alt on {0..B}, -inf on {0..c}
};

WindowModel window_model(int B, int c, const WindowParams& t) {
  WindowModel m;
  m.log_null = beta_binomial_log_pmf(B, t.mu1, t.sigma1);
  for (auto& v : m.log_null) v *= t.gamma;
  const double norm = log_sum_exp(m.log_null);
  for (auto& v : m.log_null) v -= norm;

  auto alt = alt_unnormalised(B, t.mu2, c);
  const double total = std::accumulate(alt.begin(), alt.end(), 0.0);
  m.log_alt.resize(alt.size());
  for (std::size_t w = 0; w < alt.size(); ++w)
    m.log_alt[w] = (alt[w] > 0.0 && total > 0.0) ? std::log(alt[w] / total) : kMinusInf;
  return m;
}

struct WindowCounts {
  std::int64_t low = 0;     // {0..c}
  std::int64_t window = 0;  // {c+1..B-1}
  std::int64_t top = 0;     // {B}
  std::int64_t p = 0;
};

WindowCounts window_counts(const CountHistogram& h, int c) {
  WindowCounts n;
  for (int w = 0; w <= h.B; ++w) {
    if (w <= c) n.low += h[w];
    else if (w < h.B) n.window += h[w];
    else n.top += h[w];
  }
  n.p = n.low + n.window + n.top;
  return n;
}

double window_loglik(const CountHistogram& h, int c, const WindowParams& t, const WindowModel& m,
                     WindowLikelihood kind) {
  const double log_keep = std::log1p(-t.pi_within);
  const double log_alt_share = std::log(t.pi_within);
  double ll = 0.0;
  double log_z = kMinusInf;
  std::int64_t n_window = 0;
  for (int w = c + 1; w < h.B; ++w) {
    const auto k = static_cast<std::size_t>(w);
    const double log_mix = log_add_exp(log_keep + m.log_null[k], log_alt_share + m.log_alt[k]);
    log_z = log_add_exp(log_z, log_mix);
    if (h[w] == 0) continue;
    if (log_mix == kMinusInf) return kMinusInf;
    ll += static_cast<double>(h[w]) * log_mix;
    n_window += h[w];
  }
  if (kind == WindowLikelihood::unnormalised) return ll;
  if (n_window == 0) return 0.0;
  return ll - static_cast<double>(n_window) * log_z;
}

struct Recovered {
  MixtureParams params;
  double violation = 0.0;  // mass the null or alternative over-predicts on {0..c} or at B
};

Recovered recover(const CountHistogram& h, int c, const WindowParams& t, const WindowModel& m) {
  const WindowCounts n = window_counts(h, c);
  const auto p = static_cast<double>(n.p);
  double z = 0.0;
  double null_low = 0.0;
  for (int w = 0; w <= h.B; ++w) {
    const auto k = static_cast<std::size_t>(w);
    if (w > c && w < h.B)
      z += (1.0 - t.pi_within) * std::exp(m.log_null[k]) + t.pi_within * std::exp(m.log_alt[k]);
    if (w <= c) null_low += std::exp(m.log_null[k]);
  }
  const auto B = static_cast<std::size_t>(h.B);
  // Scale factors so that p * a * f_null and p * b * f_alt reproduce the
  // observed window counts: a = (1 - pi)(1 - tau1), b = pi (1 - tau2).
  const double a = z > 0.0 ? static_cast<double>(n.window) * (1.0 - t.pi_within) / (z * p) : 0.0;
  const double b = z > 0.0 ? static_cast<double>(n.window) * t.pi_within / (z * p) : 0.0;
  // Remaining mass on {0..c} is uniform null inflation, at B alternative
  // inflation. Negative remainders mean tau1 or tau2 would leave [0, 1].
  const double low_raw = static_cast<double>(n.low) / p - a * null_low;
  const double top_raw =
      static_cast<double>(n.top) / p - a * std::exp(m.log_null[B]) - b * std::exp(m.log_alt[B]);
  const double low = std::max(0.0, low_raw);
  const double top = std::max(0.0, top_raw);
  const double total = a + b + low + top;

  Recovered r;
  auto& out = r.params;
  out.mu1 = t.mu1;
  out.sigma1 = t.sigma1;
  out.gamma = t.gamma;
  out.mu2 = t.mu2;
  out.c = c;
  out.pi = total > 0.0 ? std::clamp((b + top) / total, 0.0, 1.0) : 0.0;
  out.tau1 = (a + low) > 0.0 ? low / (a + low) : 0.0;
  out.tau2 = (b + top) > 0.0 ? top / (b + top) : 0.0;
  r.violation = std::max(0.0, -low_raw) + std::max(0.0, -top_raw);
  return r;
}

constexpr double kClampU = 30.0;

// Deterministic start points (pi', mu1, sigma1 / (1 - mu1), gamma, mu2).
constexpr std::array<std::array<double, 5>, 8> kStarts{{
    {0.20, 0.10, 0.20, 1.0, 0.90},
    {0.50, 0.05, 0.10, 1.2, 0.95},
    {0.10, 0.30, 0.30, 0.8, 0.80},
    {0.30, 0.02, 0.50, 1.0, 0.70},
    {0.05, 0.15, 0.05, 2.0, 0.99},
    {0.70, 0.10, 0.70, 0.6, 0.90},
    {0.40, 0.25, 0.15, 1.5, 0.60},
    {0.20, 0.05, 0.30, 3.0, 0.85},
}};

}  // namespace

std::vector<double> to_unconstrained(const WindowParams& t) {
  const double mu1 = std::clamp(t.mu1, kEdgeMargin * 2, 1.0 - kEdgeMargin * 2);
  const double room = 1.0 - mu1 - kEdgeMargin;
  const double s = std::clamp(t.sigma1 / room, 1e-9, 1.0 - 1e-9);
  const double m2 = std::clamp((t.mu2 - 0.5 - kEdgeMargin) / (0.5 - 2 * kEdgeMargin), 1e-9, 1.0 - 1e-9);
  return {logit(std::clamp(t.pi_within, 1e-9, 1.0 - 1e-9)),
          logit((mu1 - kEdgeMargin) / (1.0 - 2 * kEdgeMargin)), logit(s), std::log(t.gamma),
          logit(m2)};
}

WindowParams from_unconstrained(const std::vector<double>& u) {
  require(u.size() == 5, "from_unconstrained: need 5 coordinates");
  auto at = [&](std::size_t k) { return std::clamp(u[k], -kClampU, kClampU); };
  WindowParams t;
  t.pi_within = std::clamp(sigmoid(at(0)), 1e-12, 1.0 - 1e-12);
  t.mu1 = kEdgeMargin + (1.0 - 2 * kEdgeMargin) * sigmoid(at(1));
  t.sigma1 = std::max(1e-12, (1.0 - t.mu1 - kEdgeMargin) * sigmoid(at(2)));
  t.gamma = std::exp(std::clamp(u[3], -7.0, 7.0));
  t.mu2 = 0.5 + kEdgeMargin + (0.5 - 2 * kEdgeMargin) * sigmoid(at(4));
  return t;
}

double window_log_likelihood(const CountHistogram& h, int c, const WindowParams& theta,
                             WindowLikelihood kind) {
  require(c >= 0 && c < h.B, "window_log_likelihood: cutoff must satisfy 0 <= c < B");
  return window_loglik(h, c, theta, window_model(h.B, c, theta), kind);
}

MixtureParams recover_mixture(const CountHistogram& h, int c, const WindowParams& theta) {
  require(c >= 0 && c < h.B, "recover_mixture: cutoff must satisfy 0 <= c < B");
  return recover(h, c, theta, window_model(h.B, c, theta)).params;
}

LambdaFit fit_lambda(const CountHistogram& h, const FitOptions& options, double lambda) {
  if (h.B < 10) throw NotFittable("fit_lambda: need B >= 10");
  if (!is_u_shaped(h, options.inflation_fraction, options.u_shape))
    throw NotFittable("fit_lambda: selection-count histogram is not U-shaped");
  const int c = choose_cutoff(h, options.inflation_fraction);
  if (c >= h.B - 1) throw NotFittable("fit_lambda: empty fitting window above the cutoff");
  if (window_counts(h, c).window == 0) throw NotFittable("fit_lambda: no counts in the fitting window");
  if (options.pi_max) require(*options.pi_max >= 0.0 && *options.pi_max <= 1.0, "fit_lambda: pi_max in [0, 1]");

  // Infeasible points get a large finite value that still decreases towards
  // the feasible region so the simplex can walk out of it.
  constexpr double kInfeasible = 1e12;
  auto objective = [&](std::span<const double> u) {
    const WindowParams t = from_unconstrained({u.begin(), u.end()});
    const WindowModel m = window_model(h.B, c, t);
    const double ll = window_loglik(h, c, t, m, options.likelihood);
    if (!std::isfinite(ll)) return kInfeasible * 10.0;
    const Recovered r = recover(h, c, t, m);
    double excess = options.mass_constraint ? r.violation : 0.0;
    if (options.pi_max) excess += std::max(0.0, r.params.pi - *options.pi_max);
    if (excess > 0.0) return kInfeasible * (1.0 + excess);
    return -ll;
  };

  std::vector<std::vector<double>> starts;
  if (options.warm_start) starts.push_back(to_unconstrained(*options.warm_start));
  Rng jitter = make_stream(options.seed, 0x66697473ULL);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (int r = 0; r < options.restarts; ++r) {
    const auto& s = kStarts[static_cast<std::size_t>(r) % kStarts.size()];
    auto u = to_unconstrained({s[0], s[1], s[2] * (1.0 - s[1]), s[3], s[4]});
    if (options.seed != 0 || r >= static_cast<int>(kStarts.size()))
      for (auto& v : u) v += noise(jitter);
    starts.push_back(std::move(u));
  }
  require(!starts.empty(), "fit_lambda: need at least one start point");

  SimplexOptions simplex;
  simplex.initial_step = 0.7;
  simplex.size_tolerance = 1e-5;
  simplex.max_iterations = 3000;
  QuasiNewtonOptions newton;
  newton.gradient_tolerance = 1e-5;

  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    auto coarse = simplex_minimize(objective, start, simplex);
    auto refined = quasi_newton_minimize(objective, coarse.x, newton);
    const auto& candidate = refined.value <= coarse.value ? refined : coarse;
    if (candidate.value < best.value) best = candidate;
  }
  if (!(best.value < kInfeasible))
    throw NotFittable(options.pi_max ? "fit_lambda: no parameters satisfy pi <= " +
                                           std::to_string(*options.pi_max)
                                     : std::string("fit_lambda: likelihood is -inf at every start"));

  LambdaFit fit;
  fit.lambda = lambda;
  fit.B = h.B;
  fit.window = from_unconstrained(best.x);
  fit.params = recover_mixture(h, c, fit.window);
  fit.loglik = -best.value;
  fit.separation = separation(fit.params, h.B, h.p());
  fit.u_shaped = true;
  fit.fitted = true;
  return fit;
}

}  // namespace rope
