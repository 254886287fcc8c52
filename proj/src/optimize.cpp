#include "polyscale/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace polyscale::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(std::span<const double> a) {
    double m = 0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

BfgsResult maximize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opts) {
    const std::size_t n = x0.size();
    BfgsResult res;
    res.x = std::move(x0);
    std::vector<double> g(n), g_new(n), x_new(n), dir(n), s(n), y(n), hy(n);
    res.value = f(res.x, g);
    if (!std::isfinite(res.value)) return res;

    // Inverse Hessian approximation of -f, row-major.
    std::vector<double> h(n * n, 0.0);
    auto reset_h = [&] {
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
    };
    reset_h();

    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        if (max_abs(g) <= opts.grad_tol * std::max(1.0, std::abs(res.value))) {
            res.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s_i = 0;
            for (std::size_t j = 0; j < n; ++j) s_i += h[i * n + j] * g[j];
            dir[i] = s_i;
        }
        double slope = dot(dir, g);
        if (!(slope > 0)) {
            reset_h();
            dir = g;
            slope = dot(g, g);
        }

        double step = 1.0;
        bool accepted = false;
        double f_new = 0;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * dir[i];
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new >= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = max_abs(g) <= 1e-6 * std::max(1.0, std::abs(res.value));
            return res;
        }

        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - res.x[i];
            y[i] = g[i] - g_new[i];  // gradient of -f
        }
        const double improvement = f_new - res.value;
        res.x = x_new;
        res.value = f_new;
        g = g_new;

        const double sy = dot(s, y);
        if (sy > 1e-14 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (res.iterations == 0) {
                reset_h();
                const double scale = sy / dot(y, y);
                for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double v = 0;
                for (std::size_t j = 0; j < n; ++j) v += h[i * n + j] * y[j];
                hy[i] = v;
            }
            const double yhy = dot(y, hy);
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    h[i * n + j] += (1 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
        if (improvement <= opts.f_tol * std::max(1.0, std::abs(res.value))) {
            res.converged = true;
            ++res.iterations;
            return res;
        }
    }
    return res;
}

}  // namespace polyscale::optim
