#include "toeplab/reference_laws.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace toeplab {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

double semi_poisson_spacing(int n, double s) {
    // 2^{2(n+1)} / (2n+1)! * s^{2n+1} e^{-2s}
    const double norm = std::pow(2.0, 2.0 * (n + 1)) / factorial(2 * n + 1);
    return norm * std::pow(s, 2 * n + 1) * std::exp(-2.0 * s);
}

double poisson_spacing(int n, double s) {
    return std::pow(s, n) * std::exp(-s) / factorial(n);
}

// ---------------------------------------------------------------------------
// Weighted Levenberg-Marquardt on (centers, density, 1/std_error^2).
// Zero-error bins carry no information about the density and are skipped.

struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;  // 1/sigma^2
};

FitData usable_bins(const HistogramEstimate& hist) {
    FitData data;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        if (hist.std_error[i] <= 0.0) continue;
        data.x.push_back(hist.center(i));
        data.y.push_back(hist.density[i]);
        data.w.push_back(1.0 / (hist.std_error[i] * hist.std_error[i]));
    }
    return data;
}

struct Model {
    // value and gradient w.r.t. the internal parameter vector
    std::function<double(const Eigen::VectorXd&, double, Eigen::VectorXd&)> eval;
    int n_params = 0;
};

struct LmOutcome {
    Eigen::VectorXd theta;
    double cost = 0.0;        // weighted sum of squares
    double grad_norm = 0.0;   // inf-norm of the cost gradient
    bool converged = false;
};

LmOutcome levenberg_marquardt(const Model& model, const FitData& data, Eigen::VectorXd theta) {
    const int np = model.n_params;
    const auto n = static_cast<Eigen::Index>(data.x.size());
    Eigen::VectorXd grad_buf(np);

    auto cost_and_system = [&](const Eigen::VectorXd& th, Eigen::MatrixXd* jtj,
                               Eigen::VectorXd* jtr) {
        double cost = 0.0;
        if (jtj) jtj->setZero();
        if (jtr) jtr->setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const double f = model.eval(th, data.x[idx], grad_buf);
            if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
            const double r = f - data.y[idx];
            const double w = data.w[idx];
            cost += w * r * r;
            if (jtj) jtj->noalias() += w * grad_buf * grad_buf.transpose();
            if (jtr) *jtr += w * r * grad_buf;
        }
        return cost;
    };

    Eigen::MatrixXd jtj(np, np);
    Eigen::VectorXd jtr(np);
    double cost = cost_and_system(theta, &jtj, &jtr);
    if (!std::isfinite(cost)) {
        return {theta, cost, std::numeric_limits<double>::infinity(), false};
    }
    double lambda = 1e-3;
    for (int iter = 0; iter < 400; ++iter) {
        Eigen::MatrixXd damped = jtj;
        for (int k = 0; k < np; ++k) {
            damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
        }
        const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
        const Eigen::VectorXd trial = theta + step;
        const double trial_cost = cost_and_system(trial, nullptr, nullptr);
        if (std::isfinite(trial_cost) && trial_cost < cost) {
            const double improvement = cost - trial_cost;
            theta = trial;
            cost = cost_and_system(theta, &jtj, &jtr);
            lambda = std::max(lambda * 0.3, 1e-12);
            if (improvement < 1e-14 * (cost + 1e-30)) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    LmOutcome out;
    out.theta = theta;
    out.cost = cost;
    // Gradient of the cost is 2 J^T r.
    out.grad_norm = 2.0 * jtr.cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, cost);
    out.converged = out.grad_norm <= 1e-6 * scale;
    return out;
}

FitResult run_with_multistart(const Model& model, const FitData& data,
                              const std::vector<Eigen::VectorXd>& starts,
                              const std::function<std::vector<double>(const Eigen::VectorXd&)>&
                                  to_external) {
    LmOutcome best;
    best.cost = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        const LmOutcome attempt = levenberg_marquardt(model, data, start);
        const bool better = (attempt.converged && !best.converged) ||
                            (attempt.converged == best.converged && attempt.cost < best.cost);
        if (better) best = attempt;
        if (best.converged) break;  // later starts are a fallback only
    }
    FitResult result;
    result.parameters = to_external(best.theta);
    result.residual_norm = std::sqrt(std::max(best.cost, 0.0));
    result.converged = best.converged;
    return result;
}

}  // namespace

double evaluate_law(const ReferenceLaw& law, double x) {
    if (x < 0.0) {
        throw std::domain_error("evaluate_law: argument must be >= 0");
    }
    switch (law.observable) {
        case Observable::SpacingPn:
            if (law.n < 0) throw std::invalid_argument("evaluate_law: n must be >= 0");
            switch (law.family) {
                case LawFamily::SemiPoisson:
                    return semi_poisson_spacing(law.n, x);
                case LawFamily::Poisson:
                    return poisson_spacing(law.n, x);
                case LawFamily::WignerGOE:
                    if (law.n != 0) {
                        throw std::invalid_argument(
                            "evaluate_law: the Wigner surmise covers only n = 0");
                    }
                    return 0.5 * std::numbers::pi * x *
                           std::exp(-0.25 * std::numbers::pi * x * x);
            }
            break;
        case Observable::FormFactor: {
            const double pt2 = std::numbers::pi * std::numbers::pi * x * x;
            switch (law.family) {
                case LawFamily::SemiPoisson:
                    return (2.0 + pt2) / (4.0 + pt2);
                case LawFamily::Poisson:
                    return 1.0;
                case LawFamily::WignerGOE:
                    throw std::invalid_argument("evaluate_law: no GOE form factor reference");
            }
            break;
        }
        case Observable::Ratio: {
            const double onepr = 1.0 + x;
            switch (law.family) {
                case LawFamily::SemiPoisson:
                    return 6.0 * x / (onepr * onepr * onepr * onepr);
                case LawFamily::Poisson:
                    return 1.0 / (onepr * onepr);
                case LawFamily::WignerGOE:
                    throw std::invalid_argument("evaluate_law: no GOE ratio reference");
            }
            break;
        }
    }
    throw std::logic_error("evaluate_law: unreachable");
}

FitResult fit_spacing_mixture(const HistogramEstimate& hist) {
    const FitData data = usable_bins(hist);
    if (data.x.size() < 4) {
        throw std::invalid_argument("fit_spacing_mixture: fewer usable bins than parameters");
    }
    // Internal parameters (u, w, v, z) map to A = u^2, a = w^2, B = v^2,
    // b = w^2 + z^2, which bakes in A, B >= 0 and b >= a > 0.
    Model model;
    model.n_params = 4;
    model.eval = [](const Eigen::VectorXd& th, double s, Eigen::VectorXd& grad) {
        const double u = th[0], w = th[1], v = th[2], z = th[3];
        const double a = w * w;
        const double b = w * w + z * z;
        const double ea = std::exp(-a * s);
        const double eb = std::exp(-b * s);
        const double slow = u * u * ea;
        const double fast = v * v * eb;
        grad[0] = 2.0 * u * ea;
        grad[1] = -2.0 * w * s * (slow + fast);
        grad[2] = 2.0 * v * eb;
        grad[3] = -2.0 * z * s * fast;
        return slow + fast;
    };
    auto pack = [](double A, double a, double B, double b) {
        Eigen::VectorXd th(4);
        th << std::sqrt(A), std::sqrt(a), std::sqrt(B), std::sqrt(std::max(b - a, 1e-8));
        return th;
    };
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(pack(0.92, 0.96, 0.68, 13.7));  // caption starting point
    starts.push_back(pack(1.0, 1.0, 0.3, 8.0));
    starts.push_back(pack(0.8, 0.7, 1.0, 20.0));
    starts.push_back(pack(1.2, 1.5, 0.1, 4.0));
    starts.push_back(pack(0.5, 0.5, 0.5, 30.0));
    return run_with_multistart(model, data, starts, [](const Eigen::VectorXd& th) {
        const double A = th[0] * th[0];
        const double a = th[1] * th[1];
        const double B = th[2] * th[2];
        const double b = th[1] * th[1] + th[3] * th[3];
        // Report the slow component first.
        if (a <= b) return std::vector<double>{A, a, B, b};
        return std::vector<double>{B, b, A, a};
    });
}

FitResult fit_ratio_rational(const HistogramEstimate& hist) {
    const FitData data = usable_bins(hist);
    if (data.x.size() < 3) {
        throw std::invalid_argument("fit_ratio_rational: fewer usable bins than parameters");
    }
    Model model;
    model.n_params = 3;
    model.eval = [](const Eigen::VectorXd& th, double r, Eigen::VectorXd& grad) {
        const double c = th[0], alpha = th[1], beta = th[2];
        const double denom = 1.0 + alpha * r + beta * r * r;
        if (denom <= 1e-12) return std::numeric_limits<double>::quiet_NaN();
        const double f = c / denom;
        grad[0] = 1.0 / denom;
        grad[1] = -f * r / denom;
        grad[2] = -f * r * r / denom;
        return f;
    };
    auto pack = [](double c, double alpha, double beta) {
        Eigen::VectorXd th(3);
        th << c, alpha, beta;
        return th;
    };
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(pack(1.51, 5.44, 0.90));  // caption starting point
    starts.push_back(pack(1.0, 1.0, 1.0));
    starts.push_back(pack(0.5, 0.1, 0.1));
    starts.push_back(pack(2.0, 8.0, 2.0));
    return run_with_multistart(model, data, starts, [](const Eigen::VectorXd& th) {
        return std::vector<double>{th[0], th[1], th[2]};
    });
}

}  // namespace toeplab
