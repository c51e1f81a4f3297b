#include "lucid/losses.hpp"

namespace lucid {

using ad::Tensor;

namespace {

void require_shape(const Tensor& t, const ad::Shape& want, const char* who) {
  if (!t.defined() || t.shape() != want) {
    throw DimensionError(std::string(who) + ": expected " +
                         ad::shape_str(want) + ", got " +
                         (t.defined() ? ad::shape_str(t.shape())
                                      : std::string("undefined")));
  }
}

}  // namespace

Tensor photometric_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.defined() || !target.defined() ||
      pred.shape() != target.shape() || pred.shape().size() != 2 ||
      pred.shape()[1] != 3) {
    throw DimensionError("photometric_loss expects matching [n,3] colors");
  }
  return ad::reduce_sum(ad::square(ad::sub(pred, target)));
}

Tensor translation_loss(const Tensor& t_hat, const Tensor& t_ref) {
  require_shape(t_hat, {3}, "translation_loss");
  require_shape(t_ref, {3}, "translation_loss");
  return ad::reduce_sum(ad::square(ad::sub(t_hat, t_ref)));
}

Tensor rotation_loss(const Tensor& r_hat, const Tensor& r_ref) {
  require_shape(r_hat, {3, 3}, "rotation_loss");
  require_shape(r_ref, {3, 3}, "rotation_loss");
  return ad::reduce_sum(ad::square(ad::sub(r_hat, r_ref)));
}

Tensor encoding_loss(const Tensor& z, EncodingLossMode mode) {
  if (!z.defined() || z.size() == 0) {
    throw DimensionError("encoding_loss expects a non-empty encoding");
  }
  switch (mode) {
    case EncodingLossMode::kMeanSquare:
      return ad::reduce_mean(ad::square(z));
    case EncodingLossMode::kSignedMean:
      return ad::reduce_mean(z);
  }
  throw ConfigError("unknown encoding loss mode");
}

Tensor total_loss(const LossTerms& terms, const LossWeights& weights) {
  require_shape(terms.photometric, {1}, "total_loss(photometric)");
  require_shape(terms.translation, {1}, "total_loss(translation)");
  require_shape(terms.rotation, {1}, "total_loss(rotation)");
  require_shape(terms.encoding, {1}, "total_loss(encoding)");
  return ad::add(
      ad::add(ad::scale(terms.photometric, weights.photometric),
              ad::scale(terms.translation, weights.translation)),
      ad::add(ad::scale(terms.rotation, weights.rotation),
              ad::scale(terms.encoding, weights.encoding)));
}

}  // namespace lucid
