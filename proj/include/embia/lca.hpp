#pragma once

#include "embia/core.hpp"

namespace embia {

// Item probabilities produced by the M-step stay inside
// [kThetaClamp, 1 - kThetaClamp].
inline constexpr double kThetaClamp = 1e-10;

// sum_m x_m log theta_m + (1 - x_m) log(1 - theta_m), with 0 log 0 = 0.
double lca_log_density(const Vector& x, const Vector& theta_g);

EStepResult lca_e_step(const Matrix& data, const LcaParams& params);
LcaParams lca_m_step(const Matrix& data, const Responsibilities& resp);
int lca_param_count(int groups, int items);

class LatentClassModel final : public IndependentMixtureFamily {
 public:
  // Throws std::invalid_argument unless every entry is 0 or 1.
  explicit LatentClassModel(const Matrix& data);

  std::string_view name() const override { return "lca"; }
  Index observations() const override { return data_.rows(); }
  ModelParams m_step(const Responsibilities& z, FitFlags& flags) const override;
  Matrix log_component_densities(const ModelParams& params) const override;
  int param_count(int groups) const override;

 private:
  Matrix data_;
};

}  // namespace embia
