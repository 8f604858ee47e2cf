#include "mosco/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mosco/errors.hpp"

namespace mosco {

SampleSet::SampleSet(std::vector<Observation> observations, int dim)
    : observations_(std::move(observations)), dim_(dim) {
  if (dim_ < 1) throw InvariantViolation("SampleSet: dim must be >= 1");
  for (const Observation& z : observations_) {
    if (!std::isfinite(z.y)) throw InvariantViolation("SampleSet: non-finite response");
    if (z.x.dim() != dim_) throw DimensionMismatch("SampleSet", z.x.dim(), dim_);
  }
}

double noise_density_at_zero(const NoiseSpec& noise) {
  switch (noise.kind) {
    case NoiseSpec::Kind::kLaplace:
      return 1.0 / (2.0 * noise.param);
    case NoiseSpec::Kind::kGaussian:
      return 1.0 / (noise.param * std::sqrt(2.0 * std::numbers::pi));
    case NoiseSpec::Kind::kStudentT: {
      const double df = noise.param;
      return std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
             std::sqrt(df * std::numbers::pi);
    }
  }
  return 0.0;
}

namespace {

Eigen::VectorXd decay_weights(int dim, double exponent) {
  Eigen::VectorXd d(dim);
  for (int k = 0; k < dim; ++k) d[k] = std::pow(static_cast<double>(k + 1), -exponent);
  return d;
}

}  // namespace

SymOp design_second_moment(const DesignSpec& design) {
  const Eigen::VectorXd d = decay_weights(design.covariance.dim(), design.decay_exponent);
  return SymOp(Eigen::MatrixXd(d.asDiagonal() * design.covariance.entries() * d.asDiagonal()));
}

SymOp model_hessian(const ModelSpec& spec) {
  return design_second_moment(spec.design).scaled(2.0 * noise_density_at_zero(spec.noise));
}

SymOp model_score_covariance(const ModelSpec& spec) { return design_second_moment(spec.design); }

SampleSet simulate_dataset(const ModelSpec& spec, std::uint64_t seed) {
  const int d = spec.theta0.dim();
  if (spec.design.covariance.dim() != d)
    throw DimensionMismatch("simulate_dataset", spec.design.covariance.dim(), d);
  if (spec.n < 1) throw InvariantViolation("simulate_dataset: n must be >= 1");
  if (!(spec.noise.param > 0) && spec.noise.kind != NoiseSpec::Kind::kGaussian &&
      spec.noise.kind != NoiseSpec::Kind::kLaplace)
    throw InvariantViolation("simulate_dataset: StudentT df must be positive");
  if (spec.noise.param < 0) throw InvariantViolation("simulate_dataset: noise parameter < 0");

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> student(
      spec.noise.kind == NoiseSpec::Kind::kStudentT ? spec.noise.param : 1.0);

  const GaussianMeasure design_measure(spec.design.covariance);
  const Eigen::VectorXd decay = decay_weights(d, spec.design.decay_exponent);

  std::vector<Observation> obs;
  obs.reserve(spec.n);
  Eigen::VectorXd z(d);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < d; ++j) z[j] = normal(gen);
    Eigen::VectorXd xc = decay.asDiagonal() * (design_measure.factor() * z);
    double eps = 0.0;
    switch (spec.noise.kind) {
      case NoiseSpec::Kind::kLaplace: {
        const double u = uniform(gen) - 0.5;
        const double t = std::max(1.0 - 2.0 * std::abs(u), 1e-300);
        eps = -spec.noise.param * (u >= 0 ? 1.0 : -1.0) * std::log(t);
        break;
      }
      case NoiseSpec::Kind::kGaussian:
        eps = spec.noise.param * normal(gen);
        break;
      case NoiseSpec::Kind::kStudentT:
        eps = student(gen);
        break;
    }
    HVec x(std::move(xc));
    obs.push_back({inner(x, spec.theta0) + eps, std::move(x)});
  }
  return SampleSet(std::move(obs), d);
}

ConvexFunctional empirical_objective(const SampleSet& samples,
                                     double penalty_weight,
                                     ConvexFunctional::PenaltyForm penalty_form) {
  if (samples.size() == 0) throw InvariantViolation("empirical_objective: empty sample set");
  std::vector<std::pair<double, ConvexFunctional>> terms;
  terms.reserve(samples.size() + 1);
  const double c = 1.0 / samples.size();
  for (const Observation& z : samples.observations())
    terms.emplace_back(c, ConvexFunctional::abs_residual(z.y, z.x));
  if (penalty_weight > 0)
    terms.emplace_back(1.0, ConvexFunctional::norm_penalty(penalty_weight, penalty_form,
                                                           samples.dim()));
  return ConvexFunctional::scaled_sum(std::move(terms), samples.dim());
}

// ---------------------------------------------------------------------------
// Optimality certificate: the least-norm selection from the subdifferential
// of the full objective at theta, with constraint normal cones taking part.

namespace {

struct CertificatePieces {
  Eigen::VectorXd base;
  std::vector<Eigen::VectorXd> segments;  // tau in [-1,1]
  double ball_radius = 0.0;               // penalty subdifferential at a norm kink
  std::vector<Eigen::VectorXd> rays;      // s >= 0
};

double min_norm_selection(const CertificatePieces& p) {
  Eigen::VectorXd r = p.base;
  std::vector<double> tau(p.segments.size(), 0.0);
  std::vector<double> s(p.rays.size(), 0.0);
  Eigen::VectorXd ball = Eigen::VectorXd::Zero(r.size());
  double prev = r.norm();
  for (int sweep = 0; sweep < 400; ++sweep) {
    for (std::size_t j = 0; j < p.segments.size(); ++j) {
      const Eigen::VectorXd& b = p.segments[j];
      const double nb = b.squaredNorm();
      if (nb == 0.0) continue;
      r -= tau[j] * b;
      tau[j] = std::clamp(-r.dot(b) / nb, -1.0, 1.0);
      r += tau[j] * b;
    }
    if (p.ball_radius > 0) {
      r -= ball;
      const double n = r.norm();
      ball = n == 0.0 ? Eigen::VectorXd::Zero(r.size())
                      : Eigen::VectorXd(-std::min(1.0, p.ball_radius / n) * r);
      r += ball;
    }
    for (std::size_t j = 0; j < p.rays.size(); ++j) {
      const Eigen::VectorXd& b = p.rays[j];
      const double nb = b.squaredNorm();
      if (nb == 0.0) continue;
      r -= s[j] * b;
      s[j] = std::max(0.0, -r.dot(b) / nb);
      r += s[j] * b;
    }
    const double cur = r.norm();
    if (prev - cur < 1e-15 * std::max(1.0, cur)) break;
    prev = cur;
  }
  return r.norm();
}

struct FitProblem {
  const SampleSet& samples;
  const FitOptions& opts;
  const std::vector<ConvexSet>& constraints;

  double objective(const HVec& theta) const {
    double total = 0.0;
    for (const Observation& z : samples.observations())
      total += std::abs(z.y - z.x.coeffs().dot(theta.coeffs()));
    total /= samples.size();
    if (opts.penalty_weight > 0) {
      total += opts.penalty_form == ConvexFunctional::PenaltyForm::kNorm
                   ? (opts.penalty_weight / 2.0) * theta.norm()
                   : (opts.penalty_weight / 2.0) * theta.coeffs().squaredNorm();
    }
    return total;
  }

  HVec project_feasible(HVec theta) const {
    for (const ConvexSet& c : constraints) theta = c.project(theta);
    return theta;
  }

  double certificate(const HVec& theta) const {
    const int n = samples.size();
    const double cn = 1.0 / n;
    CertificatePieces p;
    p.base = Eigen::VectorXd::Zero(samples.dim());
    for (const Observation& z : samples.observations()) {
      const double r = z.y - z.x.coeffs().dot(theta.coeffs());
      if (std::abs(r) <= kKinkTol * std::max(1.0, std::abs(z.y))) {
        if (z.x.norm() > 0) p.segments.push_back(cn * z.x.coeffs());
      } else {
        p.base += (r > 0 ? -cn : cn) * z.x.coeffs();
      }
    }
    if (opts.penalty_weight > 0) {
      if (opts.penalty_form == ConvexFunctional::PenaltyForm::kNorm) {
        const double nt = theta.norm();
        if (nt <= kKinkTol)
          p.ball_radius = opts.penalty_weight / 2.0;
        else
          p.base += (opts.penalty_weight / (2.0 * nt)) * theta.coeffs();
      } else {
        p.base += opts.penalty_weight * theta.coeffs();
      }
    }
    for (const ConvexSet& c : constraints) {
      if (c.kind() == ConvexSet::Kind::kWholeSpace) continue;
      if (c.on_boundary(theta)) p.rays.push_back(c.outward_normal(theta).coeffs());
    }
    return min_norm_selection(p);
  }

  // Vertex snapping: interpolate the most nearly-active residuals (optionally
  // with the active constraint hyperplane) and keep the result if it improves
  // the objective. Only ever accepts improving points.
  std::vector<HVec> polish_candidates(const HVec& theta) const {
    std::vector<HVec> out;
    const int n = samples.size();
    const int d = samples.dim();
    std::vector<std::pair<double, int>> order;
    order.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Observation& z = samples[i];
      order.emplace_back(std::abs(z.y - z.x.coeffs().dot(theta.coeffs())), i);
    }
    std::sort(order.begin(), order.end());

    const ConvexSet* active_halfspace = nullptr;
    for (const ConvexSet& c : constraints) {
      if (c.kind() == ConvexSet::Kind::kHalfSpace && c.on_boundary(theta, 1e-5))
        active_halfspace = &c;
    }

    auto snap = [&](int k, bool with_boundary) {
      const int rows = k + (with_boundary ? 1 : 0);
      if (rows == 0 || k > n) return;
      Eigen::MatrixXd a(rows, d);
      Eigen::VectorXd b(rows);
      for (int i = 0; i < k; ++i) {
        const Observation& z = samples[order[static_cast<std::size_t>(i)].second];
        a.row(i) = z.x.coeffs().transpose();
        b[i] = z.y;
      }
      if (with_boundary) {
        a.row(k) = active_halfspace->normal().coeffs().transpose();
        b[k] = active_halfspace->offset();
      }
      // Minimum-change solution: theta + A^+ (b - A theta).
      Eigen::VectorXd rhs = b - a * theta.coeffs();
      Eigen::VectorXd step = a.colPivHouseholderQr().solve(rhs);
      Eigen::VectorXd cand = theta.coeffs() + step;
      if (!cand.allFinite()) return;
      out.push_back(project_feasible(HVec(std::move(cand))));
    };

    snap(std::min(d, n), false);
    if (active_halfspace != nullptr) snap(std::min(d - 1, n), true);
    return out;
  }
};

double default_gamma(const SampleSet& samples) {
  // Step scaled so a data block's prox displacement is on the order of the
  // response spread divided by ~100 iterations.
  std::vector<double> ys(static_cast<std::size_t>(samples.size()));
  for (int i = 0; i < samples.size(); ++i) ys[static_cast<std::size_t>(i)] = samples[i].y;
  std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
  const double med = ys[ys.size() / 2];
  double mad = 0.0;
  for (double& v : ys) v = std::abs(v - med);
  std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
  mad = ys[ys.size() / 2];
  return std::max(1.0, 0.02 * samples.size() * std::max(mad, 0.1));
}

}  // namespace

FitResult fit_constrained(const SampleSet& samples, const FitOptions& opts,
                          const std::vector<ConvexSet>& constraints) {
  if (samples.size() == 0) throw InvariantViolation("fit: empty sample set");
  if (!(opts.tol > 0)) throw InvariantViolation("fit: tol must be positive");
  const int d = samples.dim();
  for (const ConvexSet& c : constraints)
    if (c.dim() != d) throw DimensionMismatch("fit: constraint", c.dim(), d);

  FitProblem problem{samples, opts, constraints};

  // Blocks: one per observation, plus penalty and indicator terms.
  std::vector<ConvexFunctional> functionals;
  functionals.reserve(samples.size() + 1 + constraints.size());
  std::vector<ConsensusTerm> blocks;
  blocks.reserve(samples.size() + 1 + constraints.size());
  const double cn = 1.0 / samples.size();
  for (const Observation& z : samples.observations())
    functionals.push_back(ConvexFunctional::abs_residual(z.y, z.x));
  if (opts.penalty_weight > 0)
    functionals.push_back(
        ConvexFunctional::norm_penalty(opts.penalty_weight, opts.penalty_form, d));
  for (const ConvexSet& c : constraints) {
    if (c.kind() == ConvexSet::Kind::kWholeSpace) continue;
    functionals.push_back(ConvexFunctional::indicator(c));
  }
  std::size_t idx = 0;
  for (int i = 0; i < samples.size(); ++i, ++idx)
    blocks.push_back(ConsensusTerm::scaled(cn, &functionals[idx]));
  for (; idx < functionals.size(); ++idx)
    blocks.push_back(ConsensusTerm::scaled(1.0, &functionals[idx]));

  // Warm start at the (projected) ridge least-squares point unless overridden.
  HVec start = HVec::zero(d);
  if (opts.start.has_value()) {
    start = *opts.start;
  } else {
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(d);
    for (const Observation& z : samples.observations()) {
      xtx.noalias() += z.x.coeffs() * z.x.coeffs().transpose();
      xty.noalias() += z.y * z.x.coeffs();
    }
    xtx.diagonal().array() += 1e-8 * std::max(1.0, xtx.trace() / d);
    start = HVec(Eigen::VectorXd(xtx.ldlt().solve(xty)));
  }
  start = problem.project_feasible(start);

  ConsensusOptions copts;
  copts.gamma = opts.gamma > 0 ? opts.gamma : default_gamma(samples);
  ConsensusSolver solver(std::move(blocks), d, copts, &start);

  FitResult result;
  result.theta_hat = start;
  result.objective_value = problem.objective(start);
  result.objective_trace.push_back(result.objective_value);
  result.optimality_residual = problem.certificate(start);
  result.converged = result.optimality_residual <= opts.tol;

  const int batch = 100;
  while (!result.converged && solver.iterations() < opts.max_iter) {
    solver.iterate(std::min(batch, opts.max_iter - solver.iterations()));
    std::vector<HVec> candidates;
    candidates.push_back(problem.project_feasible(solver.consensus()));
    for (HVec& c : problem.polish_candidates(candidates.front()))
      candidates.push_back(std::move(c));
    bool improved = false;
    for (const HVec& c : candidates) {
      const double obj = problem.objective(c);
      if (obj < result.objective_value) {
        result.objective_value = obj;
        result.theta_hat = c;
        improved = true;
      }
    }
    if (improved) result.objective_trace.push_back(result.objective_value);
    result.optimality_residual = problem.certificate(result.theta_hat);
    result.converged = result.optimality_residual <= opts.tol;
    if (solver.last_step() <= 1e-14) break;
  }
  result.iterations = solver.iterations();
  return result;
}

FitResult fit(const SampleSet& samples, const FitOptions& opts) {
  std::vector<ConvexSet> constraints;
  if (opts.constraint.has_value()) constraints.push_back(*opts.constraint);
  return fit_constrained(samples, opts, constraints);
}

SymOp sandwich_covariance(const SymOp& v, const SymOp& a) {
  if (v.dim() != a.dim()) throw DimensionMismatch("sandwich_covariance", a.dim(), v.dim());
  const double smallest = v.min_eigenvalue();
  if (smallest <= kSolveSingularTol) throw SingularOperator("sandwich_covariance", smallest);
  const Eigen::MatrixXd vinv = v.inverse().entries();
  Eigen::MatrixXd s = vinv * a.entries() * vinv;
  return SymOp(Eigen::MatrixXd((s + s.transpose()) / 2.0));
}

HVec score_clt_statistic(const SampleSet& samples, const HVec& theta0,
                         const SelectorRule& rule) {
  if (theta0.dim() != samples.dim())
    throw DimensionMismatch("score_clt_statistic", theta0.dim(), samples.dim());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(samples.dim());
  for (const Observation& z : samples.observations()) {
    const double r = z.y - z.x.coeffs().dot(theta0.coeffs());
    if (std::abs(r) <= kKinkTol * std::max(1.0, std::abs(z.y))) {
      if (z.x.norm() > 0) g += rule.pick(-1.0, 1.0) * z.x.coeffs();
    } else {
      g += (r > 0 ? -1.0 : 1.0) * z.x.coeffs();
    }
  }
  return HVec(Eigen::VectorXd(g / std::sqrt(static_cast<double>(samples.size()))));
}

std::function<HVec(const HVec&)> smoothed_score_oracle(const SampleSet& samples, double delta) {
  if (!(delta > 0)) throw InvariantViolation("smoothed_score_oracle: delta must be positive");
  Eigen::MatrixXd x(samples.size(), samples.dim());
  Eigen::VectorXd y(samples.size());
  for (int i = 0; i < samples.size(); ++i) {
    x.row(i) = samples[i].x.coeffs().transpose();
    y[i] = samples[i].y;
  }
  const double n = samples.size();
  return [x = std::move(x), y = std::move(y), delta, n](const HVec& theta) {
    Eigen::VectorXd r = y - x * theta.coeffs();
    Eigen::VectorXd s = (r / delta).cwiseMax(-1.0).cwiseMin(1.0);
    return HVec(Eigen::VectorXd(-(x.transpose() * s) / n));
  };
}

}  // namespace mosco
