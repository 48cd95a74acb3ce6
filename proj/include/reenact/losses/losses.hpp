#pragma once

#include <torch/torch.h>

#include "reenact/editing/editing.hpp"
#include "reenact/models/model.hpp"

namespace reenact::losses {

inline constexpr double kDefaultLambdaPerceptual = 20.0;
inline constexpr double kDefaultLambdaExpression = 20.0;

// Scalar values of one evaluation of the objective.
struct LossReport {
  double rec = 0.0;
  double per = 0.0;
  double exp = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double r1 = 0.0;
  double total = 0.0;  // rec + lambda_p * per + lambda_e * exp + adv_g
};

// Differentiable terms; `total` is the generator-side objective.
struct LossTerms {
  torch::Tensor rec, per, exp, adv_g, total;
  double lambda_p = kDefaultLambdaPerceptual;
  double lambda_e = kDefaultLambdaExpression;
  // Scalars with `total` recomposed in double precision from the reported parts.
  LossReport report() const;
};

double compose_total(const LossReport& parts, double lambda_p, double lambda_e);

// Mean absolute error between two image batches.
torch::Tensor mae(const torch::Tensor& a, const torch::Tensor& b);

// L_C(S'',D) + L_C(D'',S) + L_C(S',D').
torch::Tensor reconstruction_loss(const editing::CyclicBatch& batch);

// Sum over layers of mean |phi_l(x) - phi_l(y)|.
torch::Tensor perceptual_distance(models::PerceptualExtractor& phi, const torch::Tensor& x,
                                  const torch::Tensor& y);

// The three cyclic pairs plus <e(S,S),S> and <p(S,S),S> when `self_pairs` is set.
torch::Tensor perceptual_loss(const editing::CyclicBatch& batch, models::PerceptualExtractor& phi,
                              bool self_pairs = true);

// L_E(S',D) + L_E(D',D) on frozen expression probe features.
torch::Tensor expression_loss(const editing::CyclicBatch& batch, const models::Probe& probe);

// Generator side: mean softplus(-Dsc(S'')) + mean softplus(-Dsc(D'')).
torch::Tensor adversarial_generator_loss(const editing::CyclicBatch& batch,
                                         models::Discriminator& disc);

struct DiscriminatorLoss {
  torch::Tensor adv;  // softplus(-Dsc(real)) + softplus(Dsc(S''.detach())) + softplus(Dsc(D''.detach()))
  torch::Tensor r1;   // gamma/2 * E ||grad_x Dsc(real)||^2, zero tensor when gamma == 0
};

DiscriminatorLoss adversarial_discriminator_loss(const editing::CyclicBatch& batch,
                                                 const torch::Tensor& real_images,
                                                 models::Discriminator& disc, double r1_gamma);

struct LossWeights {
  double lambda_p = kDefaultLambdaPerceptual;
  double lambda_e = kDefaultLambdaExpression;
  bool self_reconstruction_pairs = true;
};

LossTerms generator_losses(const editing::CyclicBatch& batch, models::ReenactModel& model,
                           const LossWeights& weights);

// Full report: generator-side terms plus the discriminator terms on `real_images`.
LossReport total_loss(const editing::CyclicBatch& batch, const torch::Tensor& real_images,
                      models::ReenactModel& model, const LossWeights& weights,
                      double r1_gamma = 1.0);

}  // namespace reenact::losses
