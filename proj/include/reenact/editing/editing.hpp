#pragma once

#include <torch/torch.h>

#include <vector>

#include "reenact/models/model.hpp"

namespace reenact::editing {

enum class EditIndicator { pose, exp };

struct EditedCode {
  torch::Tensor code;                  // c_s + (e_d or p_d)
  std::vector<torch::Tensor> pyramid;  // always encode(S).pyramid
};

// Motion editing module: encode both images, add the driving image's selected motion code
// to the source code.
EditedCode motion_edit(models::ReenactModel& model, const torch::Tensor& source,
                       const torch::Tensor& driving, EditIndicator indicator);

// Same, from already computed encodings (used to share encoder passes).
EditedCode motion_edit(models::ReenactModel& model, const models::Encoding& source,
                       const models::Encoding& driving, EditIndicator indicator);

torch::Tensor transfer_expression(models::ReenactModel& model, const torch::Tensor& source,
                                  const torch::Tensor& driving);
torch::Tensor transfer_pose(models::ReenactModel& model, const torch::Tensor& source,
                            const torch::Tensor& driving);

struct CyclicBatch {
  torch::Tensor S, D;
  torch::Tensor S_prime, S_dprime;  // e(S, D), p(S', D)
  torch::Tensor D_prime, D_dprime;  // p(D, S), e(D', S)
  torch::Tensor self_e, self_p;     // e(S, S), p(S, S); undefined when not requested
};

// Bidirectional cyclic pass. Each image is encoded once; S' and D' are re-encoded for the
// second hop.
CyclicBatch cyclic_forward(models::ReenactModel& model, const torch::Tensor& source,
                           const torch::Tensor& driving, bool with_self_pairs = true);

}  // namespace reenact::editing
