#pragma once

#include <functional>
#include <span>
#include <vector>

namespace vsynth::diffusion {

/// Dense row-major 2-D array of finite doubles.
class Tensor2D {
 public:
  Tensor2D() = default;
  Tensor2D(int height, int width, double fill = 0.0);
  Tensor2D(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  double& operator()(int y, int x) { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  double operator()(int y, int x) const { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  bool same_shape(const Tensor2D& o) const { return height_ == o.height_ && width_ == o.width_; }

  bool operator==(const Tensor2D&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

enum class SigmaKind {
  sqrt_beta,  ///< sigma_t = sqrt(beta_t)
  posterior,  ///< sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t)
};

/// Steps are 1-based: beta(t), alpha_bar(t), sigma(t) for t in 1..T, and
/// alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> betas, SigmaKind sigma = SigmaKind::sqrt_beta);

  int steps() const { return int(beta_.size()); }
  double beta(int t) const;
  double alpha_bar(int t) const;
  double sigma(int t) const;
  std::span<const double> betas() const { return beta_; }
  std::span<const double> alpha_bars() const { return alpha_bar_; }  ///< entries for t = 1..T
  std::span<const double> sigmas() const { return sigma_; }

 private:
  void check_step(int t, int lo) const;

  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
  std::vector<double> sigma_;
};

/// Linear beta ramp from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02,
                            SigmaKind sigma = SigmaKind::sqrt_beta);

/// x_t = sqrt(1 - beta_t) x_{t-1} + sqrt(beta_t) eps
Tensor2D forward_step(const Tensor2D& x_prev, int t, const Tensor2D& eps, const NoiseSchedule& s);

/// x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps, t in 0..T.
Tensor2D forward_closed(const Tensor2D& x0, int t, const Tensor2D& eps, const NoiseSchedule& s);

/// Model interface: (x_t, t) -> tensor of the same shape. Used both for
/// denoised-image predictors and noise predictors.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual Tensor2D predict(const Tensor2D& x_t, int t) const = 0;
};

class FunctionPredictor final : public NoisePredictor {
 public:
  using Fn = std::function<Tensor2D(const Tensor2D&, int)>;
  explicit FunctionPredictor(Fn fn) : fn_(std::move(fn)) {}
  Tensor2D predict(const Tensor2D& x_t, int t) const override { return fn_(x_t, t); }

 private:
  Fn fn_;
};

/// x_{t-1} = f(x_t, t) + sigma_t eps_t with a denoised-image predictor f.
/// Throws ShapeError if the predictor changes the shape.
Tensor2D reverse_step(const Tensor2D& x_t, int t, const NoisePredictor& predictor, const Tensor2D& eps_t,
                      const NoiseSchedule& s);

/// Mean squared difference.
double diffusion_loss(const Tensor2D& eps, const Tensor2D& eps_pred);

/// Layers r = 1..R, each a list of Q_r patch feature vectors.
using FeatureLayer = std::vector<std::vector<double>>;
using FeatureStack = std::vector<FeatureLayer>;

/// Patch-wise InfoNCE: for each layer and patch q, cross-entropy of the
/// softmax over cosine similarities / tau, where the positive is
/// positive[r][q] and the negatives are all patches of negatives[r].
/// Summed over layers, averaged over patches.
double mask_contrastive_loss(const FeatureStack& anchor, const FeatureStack& positive,
                             const FeatureStack& negatives, double tau = 0.07);

/// Mean absolute difference.
double cycle_loss(const Tensor2D& m, const Tensor2D& m_reconstructed);

struct AdversarialLosses {
  double generator = 0.0;      ///< mean((d_fake - 1)^2)
  double discriminator = 0.0;  ///< (mean((d_real - 1)^2) + mean(d_fake^2)) / 2
  double total = 0.0;
};

AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake);

struct LossWeights {
  double lambda_alpha = 1.0;  ///< mask contrastive
  double lambda_beta = 1.0;   ///< adversarial
  double lambda_gamma = 1.0;  ///< cycle
};

double total_loss(double l_diff, double l_mask, double l_adv, double l_cyc, const LossWeights& w);

}  // namespace vsynth::diffusion
