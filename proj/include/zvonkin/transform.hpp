#pragma once

#include "zvonkin/pde.hpp"

namespace zvonkin {

// Drift and (optional) diffusion matrix of the equation being transformed.
// a = sigma sigma^T with d*d channels; absent means identity diffusion.
struct DriftDiffusion {
    SpaceTimeField b;
    std::optional<SpaceTimeField> a;
    double ellipticity = 0.1;
};

struct Certificate {
    double lambda = 0.0;
    double sup_grad_u = 0.0;
    double margin = 0.0;
    bool admissible() const { return sup_grad_u < 0.5 - margin; }
};

struct TransformOptions {
    double margin = 0.05;
    double lambda0 = 1.0;
    double lambda_cap = 1048576.0;  // 2^20
    MildOptions mild{};
    FdOptions fd{};
};

// The correction field U is solved in reversed time s = T - t, with the
// drift acting both as operator coefficient and as source:
//   d_s U = 1/2 a(T-s) d2 U + b(T-s) . grad U - lambda U + b(T-s), U(0) = 0.
// The space shift x -> x + U(T-t, x) then absorbs the drift up to the damped
// remainder lambda U, provided sup |grad U| stays below 1/2.
inline ParabolicProblem transform_problem(const DriftDiffusion& in, double lambda) {
    require(in.b.channels() == in.b.grid().dim, "transform: drift must have d channels");
    ParabolicProblem p;
    p.g = in.b.time_reversed();
    p.h = p.g;
    if (in.a) p.a = in.a->time_reversed();
    p.lambda = lambda;
    p.ellipticity = in.ellipticity;
    return p;
}

class Transform {
  public:
    Transform(PdeSolution rev, double lambda, double margin) : rev_(std::move(rev)) {
        cert_.lambda = lambda;
        cert_.sup_grad_u = sup_grad_norm(rev_);
        cert_.margin = margin;
    }

    const Grid& grid() const { return rev_.u.grid(); }
    double lambda() const { return cert_.lambda; }
    const Certificate& certificate() const { return cert_; }
    const PdeSolution& solution() const { return rev_; }

    // U and grad U at original time t; out needs d (resp. d*d) slots
    void eval_u(double t, const double* x, double* out) const {
        rev_.u.eval_all(grid().horizon - t, x, out);
    }
    void eval_grad_u(double t, const double* x, double* out) const {
        rev_.grad_u.eval_all(grid().horizon - t, x, out);
    }

    void phi(double t, const double* x, double* out) const {
        double u[3];
        eval_u(t, x, u);
        for (int k = 0; k < grid().dim; ++k) out[k] = x[k] + u[k];
    }

    // inverse of phi(t, .) by fixed point iteration; contracts at rate
    // sup |grad U| < 1/2 whenever the certificate holds
    void psi(double t, const double* y, double* out) const {
        int d = grid().dim;
        double cur[3], u[3];
        std::copy(y, y + d, cur);
        double tol = grid().hx * 1e-6;
        for (int it = 0; it < 100; ++it) {
            eval_u(t, cur, u);
            double delta = 0.0;
            for (int k = 0; k < d; ++k) {
                double nxt = y[k] - u[k];
                delta = std::max(delta, std::abs(nxt - cur[k]));
                cur[k] = nxt;
            }
            if (delta <= tol) {
                std::copy(cur, cur + d, out);
                return;
            }
        }
        throw CertificateError("transform inverse did not contract within 100 iterations");
    }

  private:
    PdeSolution rev_;
    Certificate cert_;
};

inline Transform build_transform(const DriftDiffusion& in, double lambda,
                                 const TransformOptions& opts = {}) {
    ParabolicProblem p = transform_problem(in, lambda);
    PdeSolution sol = solve_parabolic(p, opts.mild, opts.fd);
    return Transform(std::move(sol), lambda, opts.margin);
}

// Doubles lambda from lambda0 until the gradient certificate holds. A solve
// that fails to contract at a small lambda counts as inadmissible and the
// sweep moves on; running out of cap is a certificate failure.
inline Transform select_lambda(const DriftDiffusion& in, const TransformOptions& opts = {},
                               std::vector<std::string>* log = nullptr) {
    for (double l = opts.lambda0; l <= opts.lambda_cap * (1.0 + 1e-12); l *= 2.0) {
        try {
            Transform tr = build_transform(in, l, opts);
            if (log)
                log->push_back("lambda=" + format_double(l) +
                               " sup_grad_u=" + format_double(tr.certificate().sup_grad_u));
            if (tr.certificate().admissible()) return tr;
        } catch (const SolverError& e) {
            if (log) log->push_back("lambda=" + format_double(l) + " solver: " + e.what());
        }
    }
    throw CertificateError(
        "resolvent decay not observed: no damping up to the cap brought sup |grad U| under 1/2 "
        "minus the margin");
}

}  // namespace zvonkin
