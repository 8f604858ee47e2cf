#ifndef MOSCO_MOSCO_DIAG_HPP_
#define MOSCO_MOSCO_DIAG_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "mosco/convex.hpp"
#include "mosco/hilbert.hpp"

namespace mosco {

// Finite stand-in for a dense subset of the space: the graph metric sums
// capped resolvent discrepancies over these points with weights 2^{-k}.
class DenseFamily {
 public:
  DenseFamily(std::vector<HVec> points, double lambda0);

  // First min(16,dim) basis vectors plus 16 seeded random unit vectors.
  static DenseFamily default_family(int dim, std::uint64_t seed = 0x6d6f73636f);
  // First K basis vectors (K <= dim).
  static DenseFamily basis_family(int dim, int k, double lambda0 = 1.0);

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<HVec>& points() const { return points_; }
  double lambda0() const { return lambda0_; }
  // Weight mass beyond the K retained terms: 2^{-K}.
  double tail_bound() const;

 private:
  std::vector<HVec> points_;
  double lambda0_;
};

// q(h) = 1/2 <Vh, h> with V symmetric positive; the shape of every
// generalized second-order limit.
struct QuadraticForm {
  SymOp op;
  double operator()(const HVec& h) const {
    return 0.5 * inner(HVec(Eigen::VectorXd(op.entries() * h.coeffs())), h);
  }
};

// d_G(df, dg) = sum_k 2^{-k} min(1, |J_{l0}(f) p_k - J_{l0}(g) p_k|),
// truncated at the family size. Pseudometric; zero iff the resolvents agree
// on the family.
double mosco_distance(const ConvexFunctional& f, const ConvexFunctional& g,
                      const DenseFamily& fam);

// distances(i, j) = |J_lambda(seq[i]) probes[j] - J_lambda(limit) probes[j]|.
Eigen::MatrixXd resolvent_convergence_probe(const std::vector<ConvexFunctional>& seq,
                                            const ConvexFunctional& limit,
                                            const std::vector<HVec>& probes, double lambda);

// f*(eta) = sup { <eta,theta> - f(theta) : |theta| <= search_radius }, by
// consensus minimization of the negated objective. Throws BoundaryWarning
// when the maximizer lands on the search boundary.
double conjugate_eval(const ConvexFunctional& f, const HVec& eta, double search_radius = 1e3);

// (f(theta + t h) - f(theta) - t <eta,h>) / t^2; +infinity passes through.
double second_difference_quotient(const ConvexFunctional& f, const HVec& theta, const HVec& eta,
                                  double t, const HVec& h);

using SubgradientOracle = std::function<HVec(const HVec&)>;

struct HessianEstimate {
  SymOp op;
  // Frobenius norm of the antisymmetric part removed by symmetrization.
  double asymmetry = 0.0;
};

// k_n = 2^{-n}, n = 3..10.
std::vector<double> default_hessian_steps();

// Columns V h from one-sided difference quotients of the subgradient oracle,
// Richardson-extrapolated over the last three steps, then symmetrized.
// Throws InstabilityError when the quotient sequence is too erratic.
HessianEstimate estimate_generalized_hessian(const SubgradientOracle& oracle,
                                             const HVec& theta_hat,
                                             const std::vector<double>& steps,
                                             const std::vector<HVec>& directions);

struct DualityReport {
  HVec eta;
  Eigen::MatrixXd conjugate_hessian;
  Eigen::MatrixXd reference_inverse;
  double relative_error = 0.0;
};

// Estimates the Hessian of f* at eta = grad f(theta) from second differences
// of conjugate_eval and reports the deviation from V^{-1}, relative to
// |V^{-1}| in operator norm.
DualityReport hessian_duality_check(const SymOp& v, const ConvexFunctional& f, const HVec& theta,
                                    double search_radius = 1e3, double step = 0.5);

}  // namespace mosco

#endif  // MOSCO_MOSCO_DIAG_HPP_
