#ifndef MOSCO_HILBERT_HPP_
#define MOSCO_HILBERT_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mosco/errors.hpp"

namespace mosco {

// Finite truncation of a real separable Hilbert space: elements are the
// coefficient vectors in a fixed orthonormal basis. Immutable after
// construction and safe to share across threads.
class HVec {
 public:
  HVec() = default;
  explicit HVec(Eigen::VectorXd coeffs);
  explicit HVec(std::vector<double> coeffs);

  static HVec zero(int dim);
  static HVec basis(int dim, int k);  // e_k, 0-based index

  int dim() const { return static_cast<int>(coeffs_.size()); }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  double operator[](int i) const { return coeffs_[i]; }

  double norm() const { return coeffs_.norm(); }

  friend HVec operator+(const HVec& u, const HVec& v);
  friend HVec operator-(const HVec& u, const HVec& v);
  friend HVec operator*(double a, const HVec& v);
  HVec operator-() const { return HVec(Eigen::VectorXd(-coeffs_)); }

  bool operator==(const HVec& other) const { return coeffs_ == other.coeffs_; }

 private:
  Eigen::VectorXd coeffs_;
};

double inner(const HVec& u, const HVec& v);

// Symmetric positive semidefinite operator in the truncated basis. The
// spectral decomposition is computed once at construction and reused by
// apply/solve/sqrt paths.
class SymOp {
 public:
  explicit SymOp(Eigen::MatrixXd entries);

  static SymOp identity(int dim);
  static SymOp diagonal(const Eigen::VectorXd& d);
  // pi_k: projection onto the first k coordinates.
  static SymOp coordinate_projection(int dim, int k);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double trace() const { return entries_.trace(); }

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
  double operator_norm() const { return eigenvalues_.cwiseAbs().maxCoeff(); }

  HVec apply(const HVec& v) const;

  // Solves (T + ridge I) z = b through the cached spectrum. Throws
  // SingularOperator when the shifted spectrum is below tolerance.
  HVec solve(const HVec& b, double ridge = 0.0) const;

  // Spectral square root with eigenvalues below the clip threshold set to 0.
  SymOp sqrt() const;
  // U diag(1/sqrt(lambda)) U^T; throws SingularOperator when near-singular.
  SymOp inverse_sqrt() const;
  SymOp inverse() const;

  SymOp scaled(double a) const;

 private:
  Eigen::MatrixXd entries_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

HVec apply_op(const SymOp& op, const HVec& v);
HVec solve_op(const SymOp& op, const HVec& b, double ridge = 0.0);

// Gaussian measure N(mean, covariance) on the truncated space. The
// covariance factor is computed once (spectral, eigenvalues below 1e-12
// clipped to 0) so that scaling laws hold at the factorization level.
class GaussianMeasure {
 public:
  explicit GaussianMeasure(SymOp covariance);
  GaussianMeasure(SymOp covariance, HVec mean);

  int dim() const { return covariance_.dim(); }
  const SymOp& covariance() const { return covariance_; }
  const HVec& mean() const { return mean_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  SymOp covariance_;
  HVec mean_;
  Eigen::MatrixXd factor_;
};

// Deterministic given seed; one mt19937_64 stream per call.
std::vector<HVec> sample_gaussian(const GaussianMeasure& m, int n, std::uint64_t seed);

// Eigenvalues below this are treated as zero when factoring covariances.
inline constexpr double kCovarianceClip = 1e-12;
// PSD acceptance tolerance for SymOp construction.
inline constexpr double kPsdTolerance = -1e-10;
// Shifted spectrum below this is singular for solve paths.
inline constexpr double kSolveSingularTol = 1e-12;

}  // namespace mosco

#endif  // MOSCO_HILBERT_HPP_
