// Copyright 2026 The vqdr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file lbfgs.hpp
 * Limited-memory BFGS with a strong-Wolfe line search (bracketing phase
 * plus cubic-interpolation zoom).
 */
#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qcore.hpp"

namespace vqdr {

struct LbfgsOptions {
    int history = 10;
    int max_iter = 2000;
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Converged once this many consecutive accepted steps change f by less than tol_cost.
    double tol_cost = 1e-9;
    int cost_window = 5;
    double grad_tol = 1e-7;
    /// Stop as soon as f <= target_cost.
    double target_cost = -std::numeric_limits<double>::infinity();
    int max_linesearch = 40;
};

enum class StopReason { CostTolerance, GradientTolerance, TargetReached, IterationCap, LineSearchFailure };

inline std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::CostTolerance:
        return "cost-tolerance";
    case StopReason::GradientTolerance:
        return "gradient-tolerance";
    case StopReason::TargetReached:
        return "target-reached";
    case StopReason::IterationCap:
        return "iteration-cap";
    case StopReason::LineSearchFailure:
        return "line-search-failure";
    }
    return "unknown";
}

inline bool is_converged(StopReason r) {
    return r == StopReason::CostTolerance || r == StopReason::GradientTolerance ||
           r == StopReason::TargetReached;
}

struct LbfgsResult {
    RealVector x;
    double f = 0.0;
    RealVector grad;
    std::vector<double> trace; ///< f at the start and after every accepted step
    int iterations = 0;
    int evaluations = 0;
    StopReason reason = StopReason::IterationCap;
};

/// Returns f(x) and writes ∇f(x) into grad.
using ValueAndGradient = std::function<double(const RealVector &x, RealVector &grad)>;

namespace detail {

struct LinePoint {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;
    RealVector x;
    RealVector g;
};

// Minimizer of the cubic through (a, fa, da), (b, fb, db), kept inside the
// interval with a 10% safeguard; bisection when the cubic is unusable.
inline double cubic_step(const LinePoint &a, const LinePoint &b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    const double mid = 0.5 * (lo + hi);
    if (disc < 0.0 || !std::isfinite(disc)) {
        return mid;
    }
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom == 0.0) {
        return mid;
    }
    const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) {
        return mid;
    }
    return t;
}

} // namespace detail

inline LbfgsResult lbfgs_minimize(const ValueAndGradient &fg, RealVector x0,
                                  const LbfgsOptions &opt = {}) {
    using detail::LinePoint;
    LbfgsResult res;
    const Index n = x0.size();
    RealVector g(n);
    double f = fg(x0, g);
    res.evaluations = 1;
    RealVector x = std::move(x0);
    res.trace.push_back(f);

    std::deque<RealVector> s_hist;
    std::deque<RealVector> y_hist;
    std::deque<double> rho_hist;
    int small_changes = 0;

    auto finish = [&](StopReason why) {
        res.x = x;
        res.f = f;
        res.grad = g;
        res.reason = why;
        return res;
    };

    for (int iter = 0;; ++iter) {
        res.iterations = iter;
        if (f <= opt.target_cost) {
            return finish(StopReason::TargetReached);
        }
        if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            return finish(StopReason::GradientTolerance);
        }
        if (iter >= opt.max_iter) {
            return finish(StopReason::IterationCap);
        }

        // Two-loop recursion.
        RealVector d = -g;
        {
            std::vector<double> alphas(s_hist.size());
            for (std::size_t i = s_hist.size(); i-- > 0;) {
                alphas[i] = rho_hist[i] * s_hist[i].dot(d);
                d -= alphas[i] * y_hist[i];
            }
            if (!s_hist.empty()) {
                d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            }
            for (std::size_t i = 0; i < s_hist.size(); ++i) {
                const double beta = rho_hist[i] * y_hist[i].dot(d);
                d += (alphas[i] - beta) * s_hist[i];
            }
        }
        double slope0 = g.dot(d);
        if (!(slope0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = -g;
            slope0 = -g.squaredNorm();
        }
        const double alpha_init = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

        const LinePoint origin{0.0, f, slope0, x, g};
        int evals = 0;
        auto probe = [&](double alpha) {
            LinePoint p;
            p.alpha = alpha;
            p.x = x + alpha * d;
            p.g.resize(n);
            p.f = fg(p.x, p.g);
            p.slope = p.g.dot(d);
            ++evals;
            ++res.evaluations;
            return p;
        };
        auto armijo_ok = [&](const LinePoint &p) {
            return p.f <= f + opt.c1 * p.alpha * slope0;
        };
        auto curvature_ok = [&](const LinePoint &p) {
            return std::abs(p.slope) <= -opt.c2 * slope0;
        };

        std::optional<LinePoint> accepted;
        auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<LinePoint> {
            while (evals < opt.max_linesearch) {
                if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) {
                    break;
                }
                LinePoint p = probe(detail::cubic_step(lo, hi));
                if (!armijo_ok(p) || p.f >= lo.f) {
                    hi = std::move(p);
                } else {
                    if (curvature_ok(p)) {
                        return p;
                    }
                    if (p.slope * (hi.alpha - lo.alpha) >= 0.0) {
                        hi = lo;
                    }
                    lo = std::move(p);
                }
            }
            // Accept a sufficient-decrease point even if curvature was not met.
            if (lo.alpha > 0.0 && lo.f < f) {
                return lo;
            }
            return std::nullopt;
        };

        LinePoint prev = origin;
        double alpha = alpha_init;
        while (evals < opt.max_linesearch) {
            LinePoint p = probe(alpha);
            if (!std::isfinite(p.f)) {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if (!armijo_ok(p) || (evals > 1 && p.f >= prev.f)) {
                accepted = zoom(prev, p);
                break;
            }
            if (curvature_ok(p)) {
                accepted = std::move(p);
                break;
            }
            if (p.slope >= 0.0) {
                accepted = zoom(p, prev);
                break;
            }
            prev = std::move(p);
            alpha *= 2.0;
        }

        if (!accepted) {
            if (!s_hist.empty()) {
                // Retry from steepest descent with an empty memory.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                continue;
            }
            return finish(StopReason::LineSearchFailure);
        }

        const RealVector s = accepted->x - x;
        const RealVector y = accepted->g - g;
        const double sy = s.dot(y);
        const double df = std::abs(accepted->f - f);
        x = std::move(accepted->x);
        g = std::move(accepted->g);
        f = accepted->f;
        res.trace.push_back(f);

        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        small_changes = df < opt.tol_cost ? small_changes + 1 : 0;
        if (small_changes >= opt.cost_window) {
            res.iterations = iter + 1;
            return finish(StopReason::CostTolerance);
        }
    }
}

} // namespace vqdr
