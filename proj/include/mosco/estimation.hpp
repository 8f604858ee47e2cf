#ifndef MOSCO_ESTIMATION_HPP_
#define MOSCO_ESTIMATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mosco/convex.hpp"
#include "mosco/hilbert.hpp"

namespace mosco {

// Observations Z_i = (y_i, x_i) from the regression model y = <x,theta> + eps.
struct Observation {
  double y;
  HVec x;
};

class SampleSet {
 public:
  SampleSet(std::vector<Observation> observations, int dim);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(observations_.size()); }
  const std::vector<Observation>& observations() const { return observations_; }
  const Observation& operator[](int i) const { return observations_[i]; }

 private:
  std::vector<Observation> observations_;
  int dim_;
};

struct NoiseSpec {
  enum class Kind { kLaplace, kGaussian, kStudentT };
  Kind kind = Kind::kLaplace;
  double param = 1.0;  // scale for Laplace/Gaussian, df for StudentT

  static NoiseSpec laplace(double scale) { return {Kind::kLaplace, scale}; }
  static NoiseSpec gaussian(double sigma) { return {Kind::kGaussian, sigma}; }
  static NoiseSpec student_t(double df) { return {Kind::kStudentT, df}; }
};

// Density of the (symmetric, median-zero) noise at 0; enters the closed-form
// Hessian V = 2 f_eps(0) E[x x^T] of the population L1 objective.
double noise_density_at_zero(const NoiseSpec& noise);

// Regressor law: x = D g with g ~ N(0, covariance) and D the diagonal decay
// diag(k^{-decay_exponent}), k = 1..dim. Keeps the second moment decaying the
// way a trace-class design would inside a truncation.
struct DesignSpec {
  SymOp covariance;
  double decay_exponent = 1.0;

  explicit DesignSpec(SymOp cov, double decay = 1.0)
      : covariance(std::move(cov)), decay_exponent(decay) {}
  static DesignSpec standard(int dim, double decay = 1.0) {
    return DesignSpec(SymOp::identity(dim), decay);
  }
};

struct ModelSpec {
  HVec theta0;
  DesignSpec design;
  NoiseSpec noise;
  int n = 0;
};

// E[x x^T] = D C D in closed form.
SymOp design_second_moment(const DesignSpec& design);
// Generalized Hessian of the population L1 objective: 2 f_eps(0) E[x x^T].
SymOp model_hessian(const ModelSpec& spec);
// Covariance of the L1 score at theta0: E[x x^T] (sgn^2 = 1 a.s.).
SymOp model_score_covariance(const ModelSpec& spec);

SampleSet simulate_dataset(const ModelSpec& spec, std::uint64_t seed);

struct FitOptions {
  double penalty_weight = 0.0;
  ConvexFunctional::PenaltyForm penalty_form = ConvexFunctional::PenaltyForm::kNorm;
  std::optional<ConvexSet> constraint;
  double tol = 1e-8;
  int max_iter = 200000;
  // Consensus prox step; <= 0 picks a data-driven default.
  double gamma = 0.0;
  std::optional<HVec> start;
};

struct FitResult {
  HVec theta_hat;
  double objective_value = 0.0;
  // Norm of the best subgradient selection; for constrained fits the cone of
  // the active constraint takes part in the selection, so this is the
  // distance from -g to the normal cone.
  double optimality_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective at each accepted (improving) iterate, non-increasing.
  std::vector<double> objective_trace;
};

// (1/n) sum |y_i - <x_i,theta>| terms plus the norm penalty as a ScaledSum.
ConvexFunctional empirical_objective(const SampleSet& samples, double penalty_weight,
                                     ConvexFunctional::PenaltyForm penalty_form);

FitResult fit(const SampleSet& samples, const FitOptions& opts = {});

// Same as fit but with any number of indicator constraints (used by the
// likelihood-ratio layer where the null is the intersection full * null).
FitResult fit_constrained(const SampleSet& samples, const FitOptions& opts,
                          const std::vector<ConvexSet>& constraints);

// V^{-1} A V^{-1}.
SymOp sandwich_covariance(const SymOp& v, const SymOp& a);

// (1/sqrt n) sum_i of the selected subgradient of rho(.,Z_i) at theta0. The
// population mean is zero at the true parameter for the L1 model, so no
// centering term is subtracted.
HVec score_clt_statistic(const SampleSet& samples, const HVec& theta0,
                         const SelectorRule& rule = SelectorRule::midpoint());

// Kernel-smoothed empirical L1 score: sgn replaced by clamp(r/delta, -1, 1).
// Lipschitz in theta, suitable as input to the generalized-Hessian estimator.
std::function<HVec(const HVec&)> smoothed_score_oracle(const SampleSet& samples, double delta);

}  // namespace mosco

#endif  // MOSCO_ESTIMATION_HPP_
