#pragma once

// Training objective: photometric ray reconstruction everywhere, pose
// supervision where labels exist, and a light penalty on the scene
// encoding. The total is a fixed weighted sum.

#include "lucid/tensor.hpp"

namespace lucid {

struct LossWeights {
  double photometric = 100.0;
  double translation = 30.0;
  double rotation = 20.0;
  double encoding = 1e-6;
};

enum class EncodingLossMode {
  kMeanSquare,  // mean of z^2: a proper magnitude penalty (default)
  kSignedMean,  // plain mean of z: can go negative, kept for comparison
};

// Sum of squared color differences over all rays and channels. [n,3] each.
ad::Tensor photometric_loss(const ad::Tensor& pred, const ad::Tensor& target);

// Squared euclidean gap between predicted and reference translation. [3]
ad::Tensor translation_loss(const ad::Tensor& t_hat, const ad::Tensor& t_ref);

// Squared Frobenius gap between rotation matrices. [3,3]
ad::Tensor rotation_loss(const ad::Tensor& r_hat, const ad::Tensor& r_ref);

ad::Tensor encoding_loss(const ad::Tensor& z, EncodingLossMode mode);

struct LossTerms {
  ad::Tensor photometric;
  ad::Tensor translation;
  ad::Tensor rotation;
  ad::Tensor encoding;
};

// weights.photometric * terms.photometric + ... ; every term must be a
// scalar (pass Tensor::scalar(0) for absent supervision).
ad::Tensor total_loss(const LossTerms& terms, const LossWeights& weights);

}  // namespace lucid
