#include "mosco/hilbert.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <utility>

namespace mosco {

namespace {

void check_finite(const Eigen::VectorXd& c, const char* where) {
  if (c.size() < 1) throw InvariantViolation(std::string(where) + ": dim must be >= 1");
  if (!c.allFinite()) throw InvariantViolation(std::string(where) + ": non-finite coefficient");
}

}  // namespace

HVec::HVec(Eigen::VectorXd coeffs) : coeffs_(std::move(coeffs)) {
  check_finite(coeffs_, "HVec");
}

HVec::HVec(std::vector<double> coeffs)
    : HVec(Eigen::Map<Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()))) {}

HVec HVec::zero(int dim) { return HVec(Eigen::VectorXd::Zero(dim)); }

HVec HVec::basis(int dim, int k) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  c[k] = 1.0;
  return HVec(std::move(c));
}

HVec operator+(const HVec& u, const HVec& v) {
  if (u.dim() != v.dim()) throw DimensionMismatch("HVec::operator+", v.dim(), u.dim());
  return HVec(Eigen::VectorXd(u.coeffs_ + v.coeffs_));
}

HVec operator-(const HVec& u, const HVec& v) {
  if (u.dim() != v.dim()) throw DimensionMismatch("HVec::operator-", v.dim(), u.dim());
  return HVec(Eigen::VectorXd(u.coeffs_ - v.coeffs_));
}

HVec operator*(double a, const HVec& v) { return HVec(Eigen::VectorXd(a * v.coeffs_)); }

double inner(const HVec& u, const HVec& v) {
  if (u.dim() != v.dim()) throw DimensionMismatch("inner", v.dim(), u.dim());
  return u.coeffs().dot(v.coeffs());
}

SymOp::SymOp(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols())
    throw InvariantViolation("SymOp: entries must be square with dim >= 1");
  if (!entries_.allFinite()) throw InvariantViolation("SymOp: non-finite entry");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < entries_.cols(); ++j) {
      const double a = entries_(i, j), b = entries_(j, i);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
        throw InvariantViolation("SymOp: asymmetric entries at (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
    }
  }
  // Work on the symmetrized matrix so the cached spectrum is exactly symmetric.
  entries_ = ((entries_ + entries_.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_);
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  if (eigenvalues_.minCoeff() < kPsdTolerance)
    throw InvariantViolation("SymOp: not positive semidefinite, smallest eigenvalue " +
                             std::to_string(eigenvalues_.minCoeff()));
}

SymOp SymOp::identity(int dim) { return SymOp(Eigen::MatrixXd::Identity(dim, dim)); }

SymOp SymOp::diagonal(const Eigen::VectorXd& d) {
  return SymOp(Eigen::MatrixXd(d.asDiagonal()));
}

SymOp SymOp::coordinate_projection(int dim, int k) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < std::min(k, dim); ++i) d[i] = 1.0;
  return diagonal(d);
}

HVec SymOp::apply(const HVec& v) const {
  if (v.dim() != dim()) throw DimensionMismatch("SymOp::apply", v.dim(), dim());
  return HVec(Eigen::VectorXd(entries_ * v.coeffs()));
}

HVec SymOp::solve(const HVec& b, double ridge) const {
  if (b.dim() != dim()) throw DimensionMismatch("SymOp::solve", b.dim(), dim());
  if (ridge < 0) throw InvariantViolation("SymOp::solve: ridge must be nonnegative");
  const double smallest = eigenvalues_.minCoeff() + ridge;
  if (smallest <= kSolveSingularTol) throw SingularOperator("SymOp::solve", smallest);
  Eigen::VectorXd w = eigenvectors_.transpose() * b.coeffs();
  w.array() /= (eigenvalues_.array() + ridge);
  return HVec(Eigen::VectorXd(eigenvectors_ * w));
}

SymOp SymOp::sqrt() const {
  Eigen::VectorXd s = eigenvalues_.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = s[i] < kCovarianceClip ? 0.0 : std::sqrt(s[i]);
  return SymOp(Eigen::MatrixXd(eigenvectors_ * s.asDiagonal() * eigenvectors_.transpose()));
}

SymOp SymOp::inverse_sqrt() const {
  const double smallest = eigenvalues_.minCoeff();
  if (smallest <= kSolveSingularTol) throw SingularOperator("SymOp::inverse_sqrt", smallest);
  Eigen::VectorXd s = eigenvalues_.array().sqrt().inverse();
  return SymOp(Eigen::MatrixXd(eigenvectors_ * s.asDiagonal() * eigenvectors_.transpose()));
}

SymOp SymOp::inverse() const {
  const double smallest = eigenvalues_.minCoeff();
  if (smallest <= kSolveSingularTol) throw SingularOperator("SymOp::inverse", smallest);
  Eigen::VectorXd s = eigenvalues_.cwiseInverse();
  return SymOp(Eigen::MatrixXd(eigenvectors_ * s.asDiagonal() * eigenvectors_.transpose()));
}

SymOp SymOp::scaled(double a) const {
  if (a < 0) throw InvariantViolation("SymOp::scaled: factor must be nonnegative");
  return SymOp(Eigen::MatrixXd(a * entries_));
}

HVec apply_op(const SymOp& op, const HVec& v) { return op.apply(v); }

HVec solve_op(const SymOp& op, const HVec& b, double ridge) { return op.solve(b, ridge); }

namespace {

Eigen::MatrixXd covariance_factor(const SymOp& cov) {
  Eigen::VectorXd s = cov.eigenvalues().cwiseMax(0.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = s[i] < kCovarianceClip ? 0.0 : std::sqrt(s[i]);
  return cov.eigenvectors() * s.asDiagonal() * cov.eigenvectors().transpose();
}

}  // namespace

GaussianMeasure::GaussianMeasure(SymOp covariance)
    : GaussianMeasure(covariance, HVec::zero(covariance.dim())) {}

GaussianMeasure::GaussianMeasure(SymOp covariance, HVec mean)
    : covariance_(std::move(covariance)), mean_(std::move(mean)) {
  if (mean_.dim() != covariance_.dim())
    throw DimensionMismatch("GaussianMeasure", mean_.dim(), covariance_.dim());
  factor_ = covariance_factor(covariance_);
}

std::vector<HVec> sample_gaussian(const GaussianMeasure& m, int n, std::uint64_t seed) {
  if (n < 1) throw InvariantViolation("sample_gaussian: n must be >= 1");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = m.dim();
  std::vector<HVec> out;
  out.reserve(n);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z[j] = normal(gen);
    out.emplace_back(Eigen::VectorXd(m.mean().coeffs() + m.factor() * z));
  }
  return out;
}

}  // namespace mosco
