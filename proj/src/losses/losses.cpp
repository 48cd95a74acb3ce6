#include "reenact/losses/losses.hpp"

#include "reenact/errors.hpp"

namespace reenact::losses {

namespace {

void require_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.defined() || !b.defined()) throw ShapeError(std::string(what) + ": batch not populated");
  if (a.sizes() != b.sizes()) throw ShapeError(std::string(what) + ": image shapes differ");
}

double value(const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; }

}  // namespace

LossReport LossTerms::report() const {
  LossReport r;
  r.rec = value(rec);
  r.per = value(per);
  r.exp = value(exp);
  r.adv_g = value(adv_g);
  r.total = compose_total(r, lambda_p, lambda_e);
  return r;
}

double compose_total(const LossReport& parts, double lambda_p, double lambda_e) {
  return parts.rec + lambda_p * parts.per + lambda_e * parts.exp + parts.adv_g;
}

torch::Tensor mae(const torch::Tensor& a, const torch::Tensor& b) {
  require_same(a, b, "mae");
  return (a - b).abs().mean();
}

torch::Tensor reconstruction_loss(const editing::CyclicBatch& batch) {
  return mae(batch.S_dprime, batch.D) + mae(batch.D_dprime, batch.S) +
         mae(batch.S_prime, batch.D_prime);
}

torch::Tensor perceptual_distance(models::PerceptualExtractor& phi, const torch::Tensor& x,
                                  const torch::Tensor& y) {
  require_same(x, y, "perceptual_distance");
  const auto fx = phi->forward(x);
  const auto fy = phi->forward(y);
  torch::Tensor sum;
  for (std::size_t l = 0; l < fx.size(); ++l) {
    const auto term = (fx[l] - fy[l]).abs().mean();
    sum = sum.defined() ? sum + term : term;
  }
  return sum;
}

torch::Tensor perceptual_loss(const editing::CyclicBatch& batch, models::PerceptualExtractor& phi,
                              bool self_pairs) {
  if (phi.is_empty()) throw StateError("perceptual_loss: no feature extractor configured");
  auto loss = perceptual_distance(phi, batch.S_dprime, batch.D) +
              perceptual_distance(phi, batch.D_dprime, batch.S) +
              perceptual_distance(phi, batch.S_prime, batch.D_prime);
  if (self_pairs) {
    loss = loss + perceptual_distance(phi, batch.self_e, batch.S) +
           perceptual_distance(phi, batch.self_p, batch.S);
  }
  return loss;
}

torch::Tensor expression_loss(const editing::CyclicBatch& batch, const models::Probe& probe) {
  require_same(batch.S_prime, batch.D, "expression_loss");
  require_same(batch.D_prime, batch.D, "expression_loss");
  const auto target = probe.features(batch.D);
  return (probe.features(batch.S_prime) - target).abs().mean() +
         (probe.features(batch.D_prime) - target).abs().mean();
}

torch::Tensor adversarial_generator_loss(const editing::CyclicBatch& batch,
                                         models::Discriminator& disc) {
  return torch::softplus(-disc->forward(batch.S_dprime)).mean() +
         torch::softplus(-disc->forward(batch.D_dprime)).mean();
}

DiscriminatorLoss adversarial_discriminator_loss(const editing::CyclicBatch& batch,
                                                 const torch::Tensor& real_images,
                                                 models::Discriminator& disc, double r1_gamma) {
  DiscriminatorLoss out;
  auto real = real_images.detach();
  if (r1_gamma > 0.0) real.set_requires_grad(true);
  const auto real_logits = disc->forward(real);
  out.adv = torch::softplus(-real_logits).mean() +
            torch::softplus(disc->forward(batch.S_dprime.detach())).mean() +
            torch::softplus(disc->forward(batch.D_dprime.detach())).mean();
  if (r1_gamma > 0.0) {
    const auto grad = torch::autograd::grad({real_logits.sum()}, {real}, {}, true, true)[0];
    out.r1 = 0.5 * r1_gamma * grad.pow(2).flatten(1).sum(1).mean();
  } else {
    out.r1 = torch::zeros({}, real_logits.options());
  }
  return out;
}

LossTerms generator_losses(const editing::CyclicBatch& batch, models::ReenactModel& model,
                           const LossWeights& weights) {
  LossTerms terms;
  terms.lambda_p = weights.lambda_p;
  terms.lambda_e = weights.lambda_e;
  terms.rec = reconstruction_loss(batch);
  terms.per = perceptual_loss(batch, model.perceptual, weights.self_reconstruction_pairs);
  terms.exp = expression_loss(batch, model.probes.expression);
  terms.adv_g = adversarial_generator_loss(batch, model.discriminator);
  terms.total = terms.rec + weights.lambda_p * terms.per + weights.lambda_e * terms.exp + terms.adv_g;
  return terms;
}

LossReport total_loss(const editing::CyclicBatch& batch, const torch::Tensor& real_images,
                      models::ReenactModel& model, const LossWeights& weights, double r1_gamma) {
  LossReport report = generator_losses(batch, model, weights).report();
  const auto d = adversarial_discriminator_loss(batch, real_images, model.discriminator, r1_gamma);
  report.adv_d = d.adv.item<double>();
  report.r1 = d.r1.item<double>();
  return report;
}

}  // namespace reenact::losses
