#include "vesselsynth/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vesselsynth/errors.hpp"

namespace vsynth::diffusion {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + " holds a non-finite value");
  }
}

void check_shape(const Tensor2D& a, const Tensor2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                     " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

}  // namespace

Tensor2D::Tensor2D(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw ShapeError("tensor dimensions must be >= 0");
  if (!std::isfinite(fill)) throw DomainError("tensor fill must be finite");
  values_.assign(std::size_t(height) * std::size_t(width), fill);
}

Tensor2D::Tensor2D(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height < 0 || width < 0) throw ShapeError("tensor dimensions must be >= 0");
  if (values_.size() != std::size_t(height) * std::size_t(width)) throw ShapeError("tensor value count mismatch");
  check_finite(values_, "tensor");
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas, SigmaKind sigma) : beta_(std::move(betas)) {
  if (beta_.empty()) throw DomainError("schedule needs at least one step");
  double prod = 1.0;
  for (double b : beta_) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("beta must lie in (0, 1)");
    prod *= 1.0 - b;
    alpha_bar_.push_back(prod);
  }
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    if (sigma == SigmaKind::sqrt_beta) {
      sigma_.push_back(std::sqrt(beta_[i]));
    } else {
      const double prev = i == 0 ? 1.0 : alpha_bar_[i - 1];
      sigma_.push_back(std::sqrt(beta_[i] * (1.0 - prev) / (1.0 - alpha_bar_[i])));
    }
  }
}

void NoiseSchedule::check_step(int t, int lo) const {
  if (t < lo || t > steps()) {
    throw DomainError("step " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(steps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_step(t, 1);
  return beta_[std::size_t(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_step(t, 0);
  return t == 0 ? 1.0 : alpha_bar_[std::size_t(t - 1)];
}

double NoiseSchedule::sigma(int t) const {
  check_step(t, 1);
  return sigma_[std::size_t(t - 1)];
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end, SigmaKind sigma) {
  if (steps < 1) throw DomainError("T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw DomainError("need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : double(i) / double(steps - 1);
    betas[std::size_t(i)] = beta_start + (beta_end - beta_start) * f;
  }
  return NoiseSchedule(std::move(betas), sigma);
}

Tensor2D forward_step(const Tensor2D& x_prev, int t, const Tensor2D& eps, const NoiseSchedule& s) {
  check_shape(x_prev, eps, "forward_step");
  const double b = s.beta(t);
  const double a = std::sqrt(1.0 - b), n = std::sqrt(b);
  Tensor2D out(x_prev.height(), x_prev.width());
  auto o = out.values();
  auto x = x_prev.values();
  auto e = eps.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + n * e[i];
  return out;
}

Tensor2D forward_closed(const Tensor2D& x0, int t, const Tensor2D& eps, const NoiseSchedule& s) {
  check_shape(x0, eps, "forward_closed");
  const double ab = s.alpha_bar(t);
  const double a = std::sqrt(ab), n = std::sqrt(1.0 - ab);
  Tensor2D out(x0.height(), x0.width());
  auto o = out.values();
  auto x = x0.values();
  auto e = eps.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + n * e[i];
  return out;
}

Tensor2D reverse_step(const Tensor2D& x_t, int t, const NoisePredictor& predictor, const Tensor2D& eps_t,
                      const NoiseSchedule& s) {
  check_shape(x_t, eps_t, "reverse_step");
  const double sig = s.sigma(t);
  Tensor2D out = predictor.predict(x_t, t);
  if (!out.same_shape(x_t)) throw ShapeError("predictor changed the tensor shape");
  auto o = out.values();
  auto e = eps_t.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += sig * e[i];
  return out;
}

double diffusion_loss(const Tensor2D& eps, const Tensor2D& eps_pred) {
  check_shape(eps, eps_pred, "diffusion_loss");
  if (eps.size() == 0) throw ShapeError("diffusion_loss on an empty tensor");
  double acc = 0.0;
  auto a = eps.values();
  auto b = eps_pred.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / double(a.size());
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double denom = std::sqrt(aa) * std::sqrt(bb);
  return denom > 1e-12 ? ab / denom : 0.0;
}

void check_stacks(const FeatureStack& a, const FeatureStack& p, const FeatureStack& n) {
  if (a.empty()) throw ShapeError("feature stack has no layers");
  if (p.size() != a.size() || n.size() != a.size()) throw ShapeError("feature stacks differ in layer count");
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].empty()) throw ShapeError("feature layer has no patches");
    if (p[r].size() != a[r].size() || n[r].size() != a[r].size()) {
      throw ShapeError("feature stacks differ in patch count at layer " + std::to_string(r));
    }
    const std::size_t d = a[r][0].size();
    for (const auto* layer : {&a[r], &p[r], &n[r]}) {
      for (const auto& v : *layer) {
        if (v.size() != d) throw ShapeError("feature dimension mismatch at layer " + std::to_string(r));
        check_finite(v, "feature");
      }
    }
  }
}

}  // namespace

double mask_contrastive_loss(const FeatureStack& anchor, const FeatureStack& positive, const FeatureStack& negatives,
                             double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("temperature must be > 0");
  check_stacks(anchor, positive, negatives);
  double total = 0.0;
  std::vector<double> logits;
  for (std::size_t r = 0; r < anchor.size(); ++r) {
    double layer = 0.0;
    for (std::size_t q = 0; q < anchor[r].size(); ++q) {
      logits.clear();
      logits.push_back(cosine(anchor[r][q], positive[r][q]) / tau);
      for (const auto& neg : negatives[r]) logits.push_back(cosine(anchor[r][q], neg) / tau);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      // -log softmax of the positive; clamp rounding below zero.
      layer += std::max(0.0, mx + std::log(z) - logits[0]);
    }
    total += layer / double(anchor[r].size());
  }
  return total;
}

double cycle_loss(const Tensor2D& m, const Tensor2D& m_reconstructed) {
  check_shape(m, m_reconstructed, "cycle_loss");
  if (m.size() == 0) throw ShapeError("cycle_loss on an empty tensor");
  double acc = 0.0;
  auto a = m.values();
  auto b = m_reconstructed.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / double(a.size());
}

AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw DomainError("discriminator outputs must be non-empty");
  check_finite(d_real, "d_real");
  check_finite(d_fake, "d_fake");
  double g = 0.0, dr = 0.0, df = 0.0;
  for (double v : d_fake) {
    g += (v - 1.0) * (v - 1.0);
    df += v * v;
  }
  for (double v : d_real) dr += (v - 1.0) * (v - 1.0);
  AdversarialLosses out;
  out.generator = g / double(d_fake.size());
  out.discriminator = 0.5 * dr / double(d_real.size()) + 0.5 * df / double(d_fake.size());
  out.total = out.generator + out.discriminator;
  return out;
}

double total_loss(double l_diff, double l_mask, double l_adv, double l_cyc, const LossWeights& w) {
  for (double v : {l_diff, l_mask, l_adv, l_cyc, w.lambda_alpha, w.lambda_beta, w.lambda_gamma}) {
    if (!std::isfinite(v)) throw DomainError("loss terms and weights must be finite");
  }
  if (w.lambda_alpha < 0.0 || w.lambda_beta < 0.0 || w.lambda_gamma < 0.0) {
    throw DomainError("loss weights must be >= 0");
  }
  return l_diff + w.lambda_alpha * l_mask + w.lambda_beta * l_adv + w.lambda_gamma * l_cyc;
}

}  // namespace vsynth::diffusion
