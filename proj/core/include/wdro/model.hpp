#pragma once

#include "wdro/ot.hpp"
#include "wdro/types.hpp"

#include <memory>
#include <string>

namespace wdro {

/// Value of sup_{x′} {λᵀh(x′, θ) − c(x, x′)} and h at the maximizer, which is
/// the gradient of that supremum in λ.
struct ProfileInner {
  double value = kInf;
  Vector h_at_max;
};

/// Loss ℓ(x, θ) with the derivatives used by the estimators and the limit
/// theory. Samples are rows x ∈ R^m; θ ∈ R^d; the estimating function
/// h = D_θℓ has d components.
class EstimatingModel {
 public:
  virtual ~EstimatingModel() = default;

  virtual std::string name() const = 0;
  virtual Index sample_dim() const = 0;
  virtual Index param_dim() const = 0;

  virtual double loss(const Vector& x, const Vector& theta) const = 0;
  virtual Vector grad_x(const Vector& x, const Vector& theta) const = 0;
  virtual Vector h(const Vector& x, const Vector& theta) const = 0;
  /// D_x h, d × m.
  virtual Matrix jac_x_h(const Vector& x, const Vector& theta) const = 0;
  /// D_θ h, d × d.
  virtual Matrix jac_theta_h(const Vector& x, const Vector& theta) const = 0;

  /// Whether inner_sup has a closed form for this cost.
  virtual bool has_inner_sup(const CostSpec&) const { return false; }
  /// sup_Δ {ℓ(x + Δ, θ) − λ c(x, x + Δ)}; +∞ where unbounded.
  virtual double inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const;
  /// inner_sup(·, λ) is finite for λ above this value (and possibly at it).
  virtual double lambda_threshold(const Vector& theta, const CostSpec& cost) const;

  virtual bool has_profile_inner(const CostSpec&) const { return false; }
  virtual ProfileInner profile_inner(const Vector& x, const Vector& theta, const Vector& lambda,
                                     const CostSpec& cost) const;

  /// Empirical risk minimizer over the rows of `samples`.
  virtual Vector fit_erm(const Matrix& samples) const;

  double empirical_risk(const Matrix& samples, const Vector& theta) const;
  Vector mean_h(const Matrix& samples, const Vector& theta) const;
};

/// ℓ = (y − θᵀx)². Sample rows are (x, y) with x ∈ R^d.
class RegressionModel final : public EstimatingModel {
 public:
  explicit RegressionModel(Index d) : d_(d) {}

  std::string name() const override { return "regression"; }
  Index sample_dim() const override { return d_ + 1; }
  Index param_dim() const override { return d_; }

  double loss(const Vector& x, const Vector& theta) const override;
  Vector grad_x(const Vector& x, const Vector& theta) const override;
  Vector h(const Vector& x, const Vector& theta) const override;
  Matrix jac_x_h(const Vector& x, const Vector& theta) const override;
  Matrix jac_theta_h(const Vector& x, const Vector& theta) const override;

  bool has_inner_sup(const CostSpec& cost) const override;
  double inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const override;
  double lambda_threshold(const Vector& theta, const CostSpec& cost) const override;

  bool has_profile_inner(const CostSpec& cost) const override;
  ProfileInner profile_inner(const Vector& x, const Vector& theta, const Vector& lambda,
                             const CostSpec& cost) const override;

  Vector fit_erm(const Matrix& samples) const override;

  /// ‖W⁻¹(−θ, 1)‖_p² with p dual to the cost's q: the slope at which the
  /// inner supremum blows up.
  double growth_constant(const Vector& theta, const CostSpec& cost) const;

 private:
  Index d_;
};

/// ℓ = ½‖x − θ‖², h = θ − x. The ERM is the sample mean.
class MeanModel final : public EstimatingModel {
 public:
  explicit MeanModel(Index d) : d_(d) {}

  std::string name() const override { return "mean"; }
  Index sample_dim() const override { return d_; }
  Index param_dim() const override { return d_; }

  double loss(const Vector& x, const Vector& theta) const override;
  Vector grad_x(const Vector& x, const Vector& theta) const override;
  Vector h(const Vector& x, const Vector& theta) const override;
  Matrix jac_x_h(const Vector& x, const Vector& theta) const override;
  Matrix jac_theta_h(const Vector& x, const Vector& theta) const override;

  bool has_inner_sup(const CostSpec& cost) const override;
  double inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const override;
  double lambda_threshold(const Vector& theta, const CostSpec& cost) const override;

  bool has_profile_inner(const CostSpec& cost) const override;
  ProfileInner profile_inner(const Vector& x, const Vector& theta, const Vector& lambda,
                             const CostSpec& cost) const override;

  Vector fit_erm(const Matrix& samples) const override;

 private:
  Index d_;
};

/// ℓ = −θᵀx (negative portfolio return).
class PortfolioModel final : public EstimatingModel {
 public:
  explicit PortfolioModel(Index d) : d_(d) {}

  std::string name() const override { return "portfolio"; }
  Index sample_dim() const override { return d_; }
  Index param_dim() const override { return d_; }

  double loss(const Vector& x, const Vector& theta) const override;
  Vector grad_x(const Vector& x, const Vector& theta) const override;
  Vector h(const Vector& x, const Vector& theta) const override;
  Matrix jac_x_h(const Vector& x, const Vector& theta) const override;
  Matrix jac_theta_h(const Vector& x, const Vector& theta) const override;

  bool has_inner_sup(const CostSpec& cost) const override;
  double inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const override;
  double lambda_threshold(const Vector& theta, const CostSpec& cost) const override;

 private:
  Index d_;
};

/// ‖W⁻¹v‖_p over the coordinates with finite weight; +∞ if v is nonzero on a
/// zero-weight (free) coordinate.
double weighted_dual_norm(const Vector& v, const Vector& weights, double p);

std::unique_ptr<EstimatingModel> make_model(const std::string& name, Index param_dim);

}  // namespace wdro
