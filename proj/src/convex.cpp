#include "mosco/convex.hpp"

#include <algorithm>
#include <cmath>

#include "mosco/errors.hpp"

namespace mosco {

// ---------------------------------------------------------------------------
// ConvexSet

ConvexSet ConvexSet::ball(double radius, HVec center) {
  if (!(radius > 0)) throw InvariantViolation("ConvexSet::ball: radius must be positive");
  ConvexSet s(Kind::kBall, center.dim());
  s.radius_ = radius;
  s.center_ = std::move(center);
  return s;
}

ConvexSet ConvexSet::half_space(HVec normal, double offset) {
  if (normal.norm() == 0.0)
    throw InvariantViolation("ConvexSet::half_space: normal must be nonzero");
  ConvexSet s(Kind::kHalfSpace, normal.dim());
  s.normal_ = std::move(normal);
  s.offset_ = offset;
  return s;
}

ConvexSet ConvexSet::whole_space(int dim) {
  if (dim < 1) throw InvariantViolation("ConvexSet::whole_space: dim must be >= 1");
  return ConvexSet(Kind::kWholeSpace, dim);
}

bool ConvexSet::contains(const HVec& v, double tol) const {
  if (v.dim() != dim_) throw DimensionMismatch("ConvexSet::contains", v.dim(), dim_);
  switch (kind_) {
    case Kind::kBall:
      return (v - center_).norm() <= radius_ * (1.0 + tol) + tol;
    case Kind::kHalfSpace:
      return inner(normal_, v) <= offset_ + tol * std::max(1.0, std::abs(offset_));
    case Kind::kWholeSpace:
      return true;
  }
  return false;
}

HVec ConvexSet::project(const HVec& v) const {
  if (v.dim() != dim_) throw DimensionMismatch("ConvexSet::project", v.dim(), dim_);
  switch (kind_) {
    case Kind::kBall: {
      const HVec d = v - center_;
      const double n = d.norm();
      if (n <= radius_) return v;
      return center_ + (radius_ / n) * d;
    }
    case Kind::kHalfSpace: {
      const double excess = inner(normal_, v) - offset_;
      if (excess <= 0) return v;
      const double n2 = normal_.coeffs().squaredNorm();
      return v - (excess / n2) * normal_;
    }
    case Kind::kWholeSpace:
      return v;
  }
  return v;
}

bool ConvexSet::on_boundary(const HVec& v, double tol) const {
  switch (kind_) {
    case Kind::kBall:
      return std::abs((v - center_).norm() - radius_) <= tol * std::max(1.0, radius_);
    case Kind::kHalfSpace:
      return std::abs(inner(normal_, v) - offset_) <= tol * std::max(1.0, std::abs(offset_));
    case Kind::kWholeSpace:
      return false;
  }
  return false;
}

HVec ConvexSet::outward_normal(const HVec& v) const {
  switch (kind_) {
    case Kind::kBall: {
      const HVec d = v - center_;
      const double n = d.norm();
      if (n == 0.0) throw DomainViolation("ConvexSet::outward_normal: ball center has no normal");
      return (1.0 / n) * d;
    }
    case Kind::kHalfSpace:
      return (1.0 / normal_.norm()) * normal_;
    case Kind::kWholeSpace:
      throw DomainViolation("ConvexSet::outward_normal: whole space has no boundary");
  }
  throw DomainViolation("ConvexSet::outward_normal: unreachable");
}

HVec ConvexSet::anchor() const {
  switch (kind_) {
    case Kind::kBall:
      return center_;
    case Kind::kHalfSpace: {
      // offset/|normal|^2 * normal lies on the boundary hyperplane.
      const double n2 = normal_.coeffs().squaredNorm();
      return (offset_ / n2) * normal_;
    }
    case Kind::kWholeSpace:
      return HVec::zero(dim_);
  }
  return HVec::zero(dim_);
}

// ---------------------------------------------------------------------------
// SelectorRule

double SelectorRule::pick(double lo, double hi) const {
  switch (kind_) {
    case Kind::kMidpoint:
      return (lo + hi) / 2.0;
    case Kind::kLower:
      return lo;
    case Kind::kUpper:
      return hi;
    case Kind::kRandom: {
      std::uniform_real_distribution<double> u(lo, hi);
      return u(gen_);
    }
  }
  return (lo + hi) / 2.0;
}

// ---------------------------------------------------------------------------
// ConvexFunctional: construction

ConvexFunctional ConvexFunctional::abs_residual(double y, HVec x) {
  if (!std::isfinite(y)) throw InvariantViolation("abs_residual: y must be finite");
  ConvexFunctional f(Kind::kAbsResidual, x.dim());
  f.y_ = y;
  f.x_ = std::move(x);
  return f;
}

ConvexFunctional ConvexFunctional::norm_penalty(double weight, PenaltyForm form, int dim) {
  if (!(weight >= 0)) throw InvariantViolation("norm_penalty: weight must be nonnegative");
  ConvexFunctional f(Kind::kNormPenalty, dim);
  f.weight_ = weight;
  f.form_ = form;
  return f;
}

ConvexFunctional ConvexFunctional::indicator(ConvexSet set) {
  ConvexFunctional f(Kind::kIndicator, set.dim());
  f.set_ = std::make_shared<const ConvexSet>(std::move(set));
  return f;
}

ConvexFunctional ConvexFunctional::quadratic(SymOp op, HVec center) {
  if (op.dim() != center.dim())
    throw DimensionMismatch("quadratic", center.dim(), op.dim());
  ConvexFunctional f(Kind::kQuadratic, op.dim());
  f.op_ = std::make_shared<const SymOp>(std::move(op));
  f.center_ = std::move(center);
  return f;
}

ConvexFunctional ConvexFunctional::scaled_sum(
    std::vector<std::pair<double, ConvexFunctional>> terms, int dim) {
  ConvexFunctional f(Kind::kScaledSum, dim);
  for (const auto& [c, g] : terms) {
    if (!(c >= 0)) throw InvariantViolation("scaled_sum: coefficients must be nonnegative");
    if (g.dim() != dim) throw DimensionMismatch("scaled_sum", g.dim(), dim);
  }
  f.terms_ = std::move(terms);
  return f;
}

ConvexFunctional ConvexFunctional::zero(int dim) { return scaled_sum({}, dim); }

// ---------------------------------------------------------------------------
// Evaluation

double ConvexFunctional::eval(const HVec& theta) const {
  if (theta.dim() != dim_) throw DimensionMismatch("ConvexFunctional::eval", theta.dim(), dim_);
  switch (kind_) {
    case Kind::kAbsResidual:
      return std::abs(y_ - inner(x_, theta));
    case Kind::kNormPenalty:
      return form_ == PenaltyForm::kNorm ? (weight_ / 2.0) * theta.norm()
                                         : (weight_ / 2.0) * theta.coeffs().squaredNorm();
    case Kind::kIndicator:
      return set_->contains(theta) ? 0.0 : kInfinity;
    case Kind::kQuadratic: {
      const Eigen::VectorXd d = theta.coeffs() - center_.coeffs();
      return 0.5 * d.dot(op_->entries() * d);
    }
    case Kind::kScaledSum: {
      double total = 0.0;
      for (const auto& [c, g] : terms_) {
        if (c == 0.0) continue;
        const double v = g.eval(theta);
        if (v == kInfinity) return kInfinity;
        total += c * v;
      }
      return total;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Subgradient selection

Subgradient ConvexFunctional::subgradient(const HVec& theta, const SelectorRule& rule) const {
  if (theta.dim() != dim_)
    throw DimensionMismatch("ConvexFunctional::subgradient", theta.dim(), dim_);
  switch (kind_) {
    case Kind::kAbsResidual: {
      const double r = y_ - inner(x_, theta);
      const double xn = x_.norm();
      if (std::abs(r) <= kKinkTol * std::max(1.0, std::abs(y_))) {
        if (xn == 0.0) return {HVec::zero(dim_), false};
        // Subdifferential is [-1,1] x; selection parameter tau.
        return {rule.pick(-1.0, 1.0) * x_, true};
      }
      return {(r > 0 ? -1.0 : 1.0) * x_, false};
    }
    case Kind::kNormPenalty: {
      if (weight_ == 0.0) return {HVec::zero(dim_), false};
      if (form_ == PenaltyForm::kSquaredNorm) return {weight_ * theta, false};
      const double n = theta.norm();
      if (n <= kKinkTol) {
        // Ball of radius weight/2; select along the first basis direction.
        const double tau = rule.pick(-weight_ / 2.0, weight_ / 2.0);
        return {tau * HVec::basis(dim_, 0), true};
      }
      return {(weight_ / (2.0 * n)) * theta, false};
    }
    case Kind::kIndicator: {
      if (!set_->contains(theta))
        throw DomainViolation("subgradient: point outside the indicator's set");
      if (set_->on_boundary(theta)) {
        const HVec nu = set_->outward_normal(theta);
        return {rule.pick(0.0, 1.0) * nu, true};
      }
      return {HVec::zero(dim_), false};
    }
    case Kind::kQuadratic:
      return {op_->apply(theta - center_), false};
    case Kind::kScaledSum: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
      bool kink = false;
      for (const auto& [c, f] : terms_) {
        if (c == 0.0) continue;
        const Subgradient sg = f.subgradient(theta, rule);
        g += c * sg.g.coeffs();
        kink = kink || sg.at_kink;
      }
      return {HVec(std::move(g)), kink};
    }
  }
  return {HVec::zero(dim_), false};
}

// ---------------------------------------------------------------------------
// Proximal maps

namespace {

// prox of lambda |y - <x,z>| at theta: move along x by the thresholded
// residual step.
Eigen::VectorXd prox_abs_residual(double y, const Eigen::VectorXd& x, double lambda,
                                  const Eigen::VectorXd& theta) {
  const double s = x.squaredNorm();
  if (s == 0.0) return theta;
  const double r = y - x.dot(theta);
  const double cap = lambda * s;
  const double u = std::clamp(r, -cap, cap);
  return theta + (u / s) * x;
}

}  // namespace

HVec ConvexFunctional::prox(double lambda, const HVec& theta) const {
  if (!(lambda > 0)) throw InvariantViolation("prox: lambda must be positive");
  if (theta.dim() != dim_) throw DimensionMismatch("ConvexFunctional::prox", theta.dim(), dim_);
  switch (kind_) {
    case Kind::kAbsResidual:
      return HVec(prox_abs_residual(y_, x_.coeffs(), lambda, theta.coeffs()));
    case Kind::kNormPenalty: {
      if (weight_ == 0.0) return theta;
      if (form_ == PenaltyForm::kSquaredNorm) return (1.0 / (1.0 + lambda * weight_)) * theta;
      const double n = theta.norm();
      const double threshold = lambda * weight_ / 2.0;
      if (n <= threshold) return HVec::zero(dim_);
      return (1.0 - threshold / n) * theta;
    }
    case Kind::kIndicator:
      return set_->project(theta);
    case Kind::kQuadratic: {
      // (I + lambda V)^{-1} (theta + lambda V center) through the cached spectrum.
      const Eigen::MatrixXd& u = op_->eigenvectors();
      const Eigen::VectorXd& ev = op_->eigenvalues();
      Eigen::VectorXd rhs = theta.coeffs() + lambda * (op_->entries() * center_.coeffs());
      Eigen::VectorXd w = u.transpose() * rhs;
      w.array() /= (1.0 + lambda * ev.array());
      return HVec(Eigen::VectorXd(u * w));
    }
    case Kind::kScaledSum: {
      if (terms_.empty()) return theta;
      if (terms_.size() == 1) {
        const auto& [c, f] = terms_.front();
        if (c == 0.0) return theta;
        return f.prox(lambda * c, theta);
      }
      // Consensus splitting: blocks are the scaled members plus the quadratic
      // coupling 1/2 |z - theta|^2.
      std::vector<ConsensusTerm> blocks;
      blocks.reserve(terms_.size() + 1);
      ConvexFunctional coupling = quadratic(SymOp::identity(dim_), theta);
      for (const auto& [c, f] : terms_) {
        if (c == 0.0) continue;
        blocks.push_back(ConsensusTerm::scaled(lambda * c, &f));
      }
      blocks.push_back(ConsensusTerm::scaled(1.0, &coupling));
      ConsensusOptions opts;
      ConsensusSolver solver(std::move(blocks), dim_, opts, &theta);
      constexpr int kMaxIter = 100000;
      constexpr double kStepTol = 1e-9;
      while (solver.iterations() < kMaxIter) {
        solver.iterate(50);
        if (solver.last_step() <= kStepTol) return solver.consensus();
      }
      throw ConvergenceFailure("ConvexFunctional::prox(ScaledSum)", solver.last_step(),
                               solver.iterations());
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// ConsensusSolver

ConsensusSolver::ConsensusSolver(std::vector<ConsensusTerm> terms, int dim, ConsensusOptions opts,
                                 const HVec* start)
    : terms_(std::move(terms)), dim_(dim), opts_(opts) {
  if (terms_.empty()) throw InvariantViolation("ConsensusSolver: needs at least one term");
  const auto m = static_cast<Eigen::Index>(terms_.size());
  w_.resize(m, dim_);
  x_.resize(m, dim_);
  if (start != nullptr) {
    if (start->dim() != dim_) throw DimensionMismatch("ConsensusSolver", start->dim(), dim_);
    w_.rowwise() = start->coeffs().transpose();
  } else {
    w_.setZero();
  }
}

void ConsensusSolver::apply_proxes() {
  const double gamma = opts_.gamma;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(terms_.size()); ++j) {
    const ConsensusTerm& t = terms_[static_cast<std::size_t>(j)];
    if (t.functional == nullptr) {
      x_.row(j) = w_.row(j) - gamma * t.linear.coeffs().transpose();
      continue;
    }
    const ConvexFunctional& f = *t.functional;
    const double step = gamma * t.coeff;
    if (f.kind() == ConvexFunctional::Kind::kAbsResidual) {
      // Inlined to keep the hot path allocation-free.
      const Eigen::VectorXd& xv = f.x().coeffs();
      const double s = xv.squaredNorm();
      if (s == 0.0) {
        x_.row(j) = w_.row(j);
        continue;
      }
      const double r = f.y() - w_.row(j).dot(xv);
      const double cap = step * s;
      const double u = std::clamp(r, -cap, cap);
      x_.row(j) = w_.row(j) + (u / s) * xv.transpose();
      continue;
    }
    const HVec z = f.kind() == ConvexFunctional::Kind::kIndicator
                       ? f.prox(1.0, HVec(Eigen::VectorXd(w_.row(j).transpose())))
                       : f.prox(step, HVec(Eigen::VectorXd(w_.row(j).transpose())));
    x_.row(j) = z.coeffs().transpose();
  }
}

void ConsensusSolver::iterate(int count) {
  const auto m = static_cast<double>(terms_.size());
  for (int it = 0; it < count; ++it) {
    apply_proxes();
    const Eigen::RowVectorXd xbar = x_.colwise().mean();
    const Eigen::RowVectorXd wbar = w_.colwise().mean();
    const Eigen::RowVectorXd ybar = 2.0 * xbar - wbar;
    const double k = static_cast<double>(iterations_);
    const double alpha =
        1.0 + (opts_.relax0 - 1.0) * opts_.relax_decay / (opts_.relax_decay + k);
    // w_j += alpha (ybar - x_j)
    double sq = 0.0;
    for (Eigen::Index j = 0; j < x_.rows(); ++j) {
      const Eigen::RowVectorXd d = ybar - x_.row(j);
      sq += d.squaredNorm();
      w_.row(j) += alpha * d;
    }
    last_step_ = alpha * std::sqrt(sq / m);
    ++iterations_;
  }
}

HVec ConsensusSolver::consensus() const {
  return HVec(Eigen::VectorXd(x_.colwise().mean().transpose()));
}

}  // namespace mosco
