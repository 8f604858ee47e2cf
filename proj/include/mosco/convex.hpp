#ifndef MOSCO_CONVEX_HPP_
#define MOSCO_CONVEX_HPP_

#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "mosco/hilbert.hpp"

namespace mosco {

// |y - <x,theta>| counts as a kink when the residual is below this (scaled
// by max(1,|y|)). Same band flags norm-penalty and indicator-boundary kinks.
inline constexpr double kKinkTol = 1e-9;

// Constraint-set descriptor with projection and normal-cone support.
class ConvexSet {
 public:
  enum class Kind { kBall, kHalfSpace, kWholeSpace };

  static ConvexSet ball(double radius, HVec center);
  // {theta : <normal,theta> <= offset}, normal != 0.
  static ConvexSet half_space(HVec normal, double offset);
  static ConvexSet whole_space(int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  bool contains(const HVec& v, double tol = kKinkTol) const;
  HVec project(const HVec& v) const;
  bool on_boundary(const HVec& v, double tol = kKinkTol) const;
  // Unit outward normal at a boundary point.
  HVec outward_normal(const HVec& v) const;
  // A point where the indicator is finite (ball center / offset point / 0).
  HVec anchor() const;

  double radius() const { return radius_; }
  const HVec& center() const { return center_; }
  const HVec& normal() const { return normal_; }
  double offset() const { return offset_; }

 private:
  ConvexSet(Kind k, int dim) : kind_(k), dim_(dim) {}
  Kind kind_;
  int dim_;
  double radius_ = 0.0;
  HVec center_;
  HVec normal_;
  double offset_ = 0.0;
};

// Fixes which element of a set-valued subdifferential gets returned. Every
// choice is a legitimate selection; non-random kinds are deterministic
// functions of the evaluation point. The random kind owns its generator and
// must not be shared across threads.
class SelectorRule {
 public:
  enum class Kind { kMidpoint, kLower, kUpper, kRandom };

  static SelectorRule midpoint() { return SelectorRule(Kind::kMidpoint, 0); }
  static SelectorRule lower() { return SelectorRule(Kind::kLower, 0); }
  static SelectorRule upper() { return SelectorRule(Kind::kUpper, 0); }
  static SelectorRule random(std::uint64_t seed) { return SelectorRule(Kind::kRandom, seed); }

  Kind kind() const { return kind_; }
  // Selection parameter from [lo, hi].
  double pick(double lo, double hi) const;

 private:
  SelectorRule(Kind k, std::uint64_t seed) : kind_(k), gen_(seed) {}
  Kind kind_;
  mutable std::mt19937_64 gen_;
};

struct Subgradient {
  HVec g;
  bool at_kink = false;
};

// Proper l.s.c. convex functional on the truncated space with explicit
// subgradient selection and a proximal map, closed form per kind; the
// ScaledSum prox runs a product-space Douglas-Rachford consensus loop.
class ConvexFunctional {
 public:
  enum class Kind { kAbsResidual, kNormPenalty, kIndicator, kQuadratic, kScaledSum };
  enum class PenaltyForm { kNorm, kSquaredNorm };

  static ConvexFunctional abs_residual(double y, HVec x);
  static ConvexFunctional norm_penalty(double weight, PenaltyForm form, int dim);
  static ConvexFunctional indicator(ConvexSet set);
  static ConvexFunctional quadratic(SymOp op, HVec center);
  static ConvexFunctional scaled_sum(std::vector<std::pair<double, ConvexFunctional>> terms,
                                     int dim);
  static ConvexFunctional zero(int dim);  // empty scaled sum

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  double eval(const HVec& theta) const;
  Subgradient subgradient(const HVec& theta,
                          const SelectorRule& rule = SelectorRule::midpoint()) const;
  // argmin_z f(z) + 1/(2 lambda) |z - theta|^2.
  HVec prox(double lambda, const HVec& theta) const;

  // Accessors (valid for the matching kind).
  double y() const { return y_; }
  const HVec& x() const { return x_; }
  double weight() const { return weight_; }
  PenaltyForm form() const { return form_; }
  const ConvexSet& set() const { return *set_; }
  const SymOp& op() const { return *op_; }
  const HVec& center() const { return center_; }
  const std::vector<std::pair<double, ConvexFunctional>>& terms() const { return terms_; }

 private:
  ConvexFunctional(Kind k, int dim) : kind_(k), dim_(dim) {}

  Kind kind_;
  int dim_;
  double y_ = 0.0;
  HVec x_;
  double weight_ = 0.0;
  PenaltyForm form_ = PenaltyForm::kNorm;
  std::shared_ptr<const ConvexSet> set_;
  std::shared_ptr<const SymOp> op_;
  HVec center_;
  std::vector<std::pair<double, ConvexFunctional>> terms_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Consensus splitting engine (product-space Douglas-Rachford). Shared by the
// ScaledSum prox, the M-estimation solver and conjugate evaluation. One block
// per term; each iteration applies the blocks' proxes and averages.

// coeff * functional, or the linear term coeff * <a, .> (functional == nullptr).
struct ConsensusTerm {
  double coeff = 1.0;
  const ConvexFunctional* functional = nullptr;
  HVec linear;

  static ConsensusTerm scaled(double c, const ConvexFunctional* f) {
    ConsensusTerm t;
    t.coeff = c;
    t.functional = f;
    return t;
  }
  static ConsensusTerm linear_term(HVec a) {
    ConsensusTerm t;
    t.linear = std::move(a);
    return t;
  }
};

struct ConsensusOptions {
  double gamma = 1.0;        // prox step
  double relax0 = 1.8;       // initial over-relaxation, decays toward 1
  double relax_decay = 400;  // iterations scale of the decay
};

// Stateful so callers can interleave iteration batches with their own
// convergence checks (optimality certificates, polishing).
class ConsensusSolver {
 public:
  ConsensusSolver(std::vector<ConsensusTerm> terms, int dim, ConsensusOptions opts,
                  const HVec* start = nullptr);

  void iterate(int count);
  // Average of the block prox outputs; converges to the minimizer.
  HVec consensus() const;
  // Mean-square fixed-point residual of the last iteration.
  double last_step() const { return last_step_; }
  int iterations() const { return iterations_; }

 private:
  void apply_proxes();

  std::vector<ConsensusTerm> terms_;
  int dim_;
  ConsensusOptions opts_;
  Eigen::MatrixXd w_;  // one row per block
  Eigen::MatrixXd x_;
  double last_step_ = std::numeric_limits<double>::infinity();
  int iterations_ = 0;
};

}  // namespace mosco

#endif  // MOSCO_CONVEX_HPP_
