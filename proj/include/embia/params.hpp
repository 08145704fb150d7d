#pragma once

#include "embia/numeric.hpp"

#include <string_view>
#include <variant>
#include <vector>

namespace embia {

// Mixing proportions tau_g. Entries lie in [0, 1] and sum to one.
struct MixingWeights {
  Vector tau;

  MixingWeights() = default;
  explicit MixingWeights(Vector values);

  Index groups() const { return tau.size(); }
};

enum class CovarianceStructure {
  VVV,  // unconstrained ellipsoidal
  EEV,  // equal volume and shape, free orientation
};

std::string_view to_string(CovarianceStructure s);
CovarianceStructure covariance_structure_from_string(std::string_view s);

struct GaussianParams {
  MixingWeights tau;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  CovarianceStructure structure = CovarianceStructure::VVV;
};

// Item-response probabilities for latent class analysis; theta is G x M.
struct LcaParams {
  MixingWeights tau;
  Matrix theta;
};

// Block connection probabilities; theta is symmetric G x G.
struct SbmParams {
  MixingWeights tau;
  Matrix theta;
};

using ModelParams = std::variant<GaussianParams, LcaParams, SbmParams>;

const MixingWeights& mixing_weights(const ModelParams& params);

}  // namespace embia
