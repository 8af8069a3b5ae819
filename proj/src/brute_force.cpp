#include "slitmod/brute_force.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slitmod {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Barrier {
    const Mat& A;  // rows: path coefficients per cell
    const Vec& v;  // cell volumes
    double p;

    /** t f(x) - sum log(Ax - 1) - sum log x, or +inf outside the domain. */
    double value(const Vec& x, double t) const {
        if (x.minCoeff() <= 0) return kInf;
        Vec s = A * x - Vec::Ones(A.rows());
        if (A.rows() && s.minCoeff() <= 0) return kInf;
        double f = (v.array() * x.array().pow(p)).sum();
        return t * f - s.array().log().sum() - x.array().log().sum();
    }

    void derivatives(const Vec& x, double t, Vec& g, Mat& H) const {
        Vec s = A * x - Vec::Ones(A.rows());
        Vec is = s.cwiseInverse();
        g = t * p * (v.array() * x.array().pow(p - 1)).matrix() - A.transpose() * is - x.cwiseInverse();
        H = A.transpose() * is.cwiseAbs2().asDiagonal() * A;
        H.diagonal() += (t * p * (p - 1) * v.array() * x.array().pow(p - 2)).matrix() + x.cwiseInverse().cwiseAbs2();
    }
};

/** Minimizes sum v x^p subject to A x >= 1, x >= 0 from a strictly feasible x. */
void barrier_solve(const Mat& A, const Vec& v, double p, Vec& x, double gap, double t) {
    Barrier b{A, v, p};
    const double m = static_cast<double>(A.rows() + x.size());
    Vec g;
    Mat H;
    while (true) {
        for (int it = 0; it < 200; ++it) {
            b.derivatives(x, t, g, H);
            Vec dx = -H.ldlt().solve(g);
            double dec = -g.dot(dx);
            if (dec / 2 < 1e-9) break;
            double step = 1.0, cur = b.value(x, t);
            while (step > 1e-16) {
                Vec y = x + step * dx;
                double val = b.value(y, t);
                if (val <= cur - 0.25 * step * dec) break;
                step *= 0.5;
            }
            if (step <= 1e-16) break;
            x += step * dx;
        }
        if (m / t < gap) break;
        t *= 8;
    }
}

}  // namespace

BruteForceResult brute_force_modulus(const GridComplex& gc, const CurveFamilySpec& family, double p,
                                     std::int64_t max_cells) {
    if (!(p > 1)) throw std::invalid_argument("p must be > 1");
    if (!gc.has_cells()) throw std::invalid_argument("complex must be built with cells");
    const std::int64_t n = gc.num_cells();
    if (n > max_cells) throw std::invalid_argument("brute force limited to " + std::to_string(max_cells) + " cells");
    auto oracle = make_oracle(gc, family);

    BruteForceResult res;
    res.density.cell_volume = gc.cell_volume;
    std::vector<double> rho(n, 1e-3);
    PathInComplex witness;
    if (oracle->min_length(rho, &witness) == kInf) {
        res.density.value.assign(n, 0.0);
        res.converged = true;
        return res;
    }

    Mat A(0, n);
    Vec v = Vec::Constant(n, gc.cell_volume);
    Vec x = Vec::Ones(n);
    const double tol = 1e-11, final_gap = 1e-10;
    double gap = 1e-6;
    for (res.rounds = 1; res.rounds <= 500; ++res.rounds) {
        std::vector<PathConstraint> cuts;
        oracle->violated(rho, 1.0 - tol, 64, cuts);
        if (cuts.empty() && gap <= final_gap) {
            res.converged = true;
            break;
        }
        if (cuts.empty()) {
            gap = final_gap;
            barrier_solve(A, v, p, x, gap, 1e-3 * static_cast<double>(A.rows() + n) / gap);
            for (std::int64_t c = 0; c < n; ++c) rho[c] = x[c];
            continue;
        }
        Mat B(A.rows() + static_cast<Eigen::Index>(cuts.size()), n);
        B.topRows(A.rows()) = A;
        B.bottomRows(static_cast<Eigen::Index>(cuts.size())).setZero();
        for (std::size_t c = 0; c < cuts.size(); ++c)
            for (std::size_t t = 0; t < cuts[c].cells.size(); ++t)
                B(A.rows() + static_cast<Eigen::Index>(c), cuts[c].cells[t]) += cuts[c].coef[t];
        A.swap(B);
        // Scale into the strict interior of the enlarged feasible set.
        x = x.cwiseMax(1e-3 * x.maxCoeff());
        x *= 1.5 / (A * x).minCoeff();
        double f0 = (v.array() * x.array().pow(p)).sum();
        barrier_solve(A, v, p, x, gap, static_cast<double>(A.rows() + n) / f0);
        for (std::int64_t c = 0; c < n; ++c) rho[c] = x[c];
    }
    res.constraints = static_cast<std::size_t>(A.rows());
    double f = (v.array() * x.array().pow(p)).sum();
    res.lower = std::max(0.0, f - gap);
    double len = oracle->min_length(rho, &witness);
    res.density.value = rho;
    for (auto& r : res.density.value) r /= len;
    res.upper = res.density.mass(p);
    return res;
}

}  // namespace slitmod
