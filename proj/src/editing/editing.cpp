#include "reenact/editing/editing.hpp"

#include "reenact/errors.hpp"

namespace reenact::editing {

namespace {

void check_pair(const torch::Tensor& source, const torch::Tensor& driving) {
  if (source.sizes() != driving.sizes()) {
    throw ShapeError("motion_edit: source and driving batches differ in shape");
  }
}

torch::Tensor generate(models::ReenactModel& model, const EditedCode& edited,
                       EditIndicator indicator) {
  return indicator == EditIndicator::exp
             ? model.generate_expression(edited.code, edited.pyramid)
             : model.generate_pose(edited.code, edited.pyramid);
}

}  // namespace

EditedCode motion_edit(models::ReenactModel& model, const models::Encoding& source,
                       const models::Encoding& driving, EditIndicator indicator) {
  const auto motion = model.disentangle(driving.code);
  const auto& selected = indicator == EditIndicator::exp ? motion.expression : motion.pose;
  return {source.code + selected, source.pyramid};
}

EditedCode motion_edit(models::ReenactModel& model, const torch::Tensor& source,
                       const torch::Tensor& driving, EditIndicator indicator) {
  check_pair(source, driving);
  const auto s = model.encode(source);
  const auto d = model.encode(driving);
  return motion_edit(model, s, d, indicator);
}

torch::Tensor transfer_expression(models::ReenactModel& model, const torch::Tensor& source,
                                  const torch::Tensor& driving) {
  return generate(model, motion_edit(model, source, driving, EditIndicator::exp),
                  EditIndicator::exp);
}

torch::Tensor transfer_pose(models::ReenactModel& model, const torch::Tensor& source,
                            const torch::Tensor& driving) {
  return generate(model, motion_edit(model, source, driving, EditIndicator::pose),
                  EditIndicator::pose);
}

CyclicBatch cyclic_forward(models::ReenactModel& model, const torch::Tensor& source,
                           const torch::Tensor& driving, bool with_self_pairs) {
  check_pair(source, driving);
  CyclicBatch batch;
  batch.S = source;
  batch.D = driving;
  const auto enc_s = model.encode(source);
  const auto enc_d = model.encode(driving);

  batch.S_prime = generate(model, motion_edit(model, enc_s, enc_d, EditIndicator::exp),
                           EditIndicator::exp);
  const auto enc_s1 = model.encode(batch.S_prime);
  batch.S_dprime = generate(model, motion_edit(model, enc_s1, enc_d, EditIndicator::pose),
                            EditIndicator::pose);

  batch.D_prime = generate(model, motion_edit(model, enc_d, enc_s, EditIndicator::pose),
                           EditIndicator::pose);
  const auto enc_d1 = model.encode(batch.D_prime);
  batch.D_dprime = generate(model, motion_edit(model, enc_d1, enc_s, EditIndicator::exp),
                            EditIndicator::exp);

  if (with_self_pairs) {
    batch.self_e = generate(model, motion_edit(model, enc_s, enc_s, EditIndicator::exp),
                            EditIndicator::exp);
    batch.self_p = generate(model, motion_edit(model, enc_s, enc_s, EditIndicator::pose),
                            EditIndicator::pose);
  }
  return batch;
}

}  // namespace reenact::editing
