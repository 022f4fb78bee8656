#pragma once

// Generic (accelerated) proximal gradient loop. A Problem supplies
//   double smooth(const Var&) const;         f
//   Var    gradient(const Var&) const;       grad f
//   double penalty(const Var&) const;        g
//   Var    prox(const Var&, double) const;   prox_{step * g}
// The loop is monotone in f + g: an accelerated candidate that increases the
// objective triggers a momentum restart and a plain step from the last
// accepted iterate.

#include "basisforge/error.hpp"

#include <cmath>
#include <vector>

namespace basisforge::detail {

struct ProxSettings {
  int maxIters = 500;
  double tol = 1e-8;
  bool accelerate = true;
  bool backtracking = false;
  double lipschitz = 0.0;  // fixed step 1/lipschitz; initial guess when backtracking
  long iterationTag = -1;  // reported in NumericError
};

template <class Var>
struct ProxOutcome {
  Var x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <class Var>
bool all_finite(const Var& v) {
  return v.allFinite();
}

template <class Problem, class Var>
ProxOutcome<Var> run_prox_gradient(const Problem& pb, Var x0, const ProxSettings& s,
                                   std::vector<double>* trace = nullptr) {
  ProxOutcome<Var> out;
  out.x = std::move(x0);
  double fx = pb.smooth(out.x);
  double objx = fx + pb.penalty(out.x);
  if (!std::isfinite(objx)) throw NumericError("non-finite objective at solver start", s.iterationTag);
  if (trace) trace->push_back(objx);

  double step = s.lipschitz > 0.0 ? 1.0 / s.lipschitz : 1.0;
  Var y = out.x;
  double fy = fx;
  double t = 1.0;

  // One proximal step from `base`; with backtracking the step shrinks until
  // the quadratic upper model holds at the candidate.
  auto prox_step = [&](const Var& base, double fbase, Var& cand, double& fcand) {
    const Var g = pb.gradient(base);
    if (!all_finite(g)) throw NumericError("non-finite gradient", s.iterationTag);
    for (int halving = 0;; ++halving) {
      cand = pb.prox(base - step * g, step);
      fcand = pb.smooth(cand);
      if (!s.backtracking) return;
      const Var diff = cand - base;
      const double model = fbase + (g.array() * diff.array()).sum() + diff.squaredNorm() / (2.0 * step);
      if (fcand <= model + 1e-12 * std::abs(fbase)) return;
      if (halving >= 60) throw NumericError("backtracking line search exhausted", s.iterationTag);
      step *= 0.5;
    }
  };

  Var z;
  double fz = 0.0;
  for (int it = 1; it <= s.maxIters; ++it) {
    out.iterations = it;
    prox_step(y, fy, z, fz);
    double objz = fz + pb.penalty(z);
    if (!std::isfinite(objz)) throw NumericError("non-finite iterate", s.iterationTag);
    if (objz > objx && s.accelerate) {
      // restart from the last accepted point
      t = 1.0;
      prox_step(out.x, fx, z, fz);
      objz = fz + pb.penalty(z);
      if (!std::isfinite(objz)) throw NumericError("non-finite iterate", s.iterationTag);
    }
    if (objz > objx) {
      // Only reachable through rounding: no further decrease is available.
      out.converged = true;
      break;
    }
    const double decrease = objx - objz;
    if (s.accelerate) {
      const double tNext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z + ((t - 1.0) / tNext) * (z - out.x);
      t = tNext;
      fy = pb.smooth(y);
    } else {
      y = z;
      fy = fz;
    }
    out.x = z;
    fx = fz;
    objx = objz;
    if (trace) trace->push_back(objx);
    if (decrease <= s.tol * (1.0 + std::abs(objx))) {
      out.converged = true;
      break;
    }
  }
  out.objective = objx;
  return out;
}

}  // namespace basisforge::detail
