#include "pagc/error.hpp"
#include "pagc/learners.hpp"
#include "pagc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace pagc {

namespace {

double auto_gamma(const FeatureTable& table) {
    // 1 / (p * mean feature variance), matching the usual "scale" heuristic
    const std::size_t p = table.n_features();
    const double n = static_cast<double>(table.n_rows());
    double total_var = 0.0;
    for (std::size_t f = 0; f < p; ++f) {
        double mean = 0.0;
        for (const auto& row : table.values) mean += row[f];
        mean /= n;
        double var = 0.0;
        for (const auto& row : table.values) var += (row[f] - mean) * (row[f] - mean);
        total_var += var / n;
    }
    const double mean_var = total_var / static_cast<double>(p);
    return mean_var > 0.0 ? 1.0 / (static_cast<double>(p) * mean_var)
                          : 1.0 / static_cast<double>(p);
}

} // namespace

// SMO in its simplified form: sweep examples that violate the KKT conditions
// within tol, pair each with a seeded random partner, and solve the
// two-variable subproblem analytically. Converged when several consecutive
// sweeps change nothing; hitting max_iter returns the current iterate with a
// warning flag instead of failing.
TrainedModel train_svm_rbf(const FeatureTable& table, const SvmParams& params,
                           std::uint64_t seed) {
    table.validate();
    const std::size_t n = table.n_rows();
    if (n < 2) throw InputError("svm: need at least 2 rows");
    bool has_pos = false, has_neg = false;
    for (int l : table.labels) (l == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw InputError("svm: both classes required");
    if (!(params.c > 0.0)) throw InputError("svm: C must be positive");
    if (params.gamma < 0.0) throw InputError("svm: gamma must be non-negative");

    const double gamma = params.gamma > 0.0 ? params.gamma : auto_gamma(table);
    const double C = params.c;

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = table.labels[i] == 1 ? 1.0 : -1.0;

    // dense kernel matrix; cohorts here are small
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < table.n_features(); ++f) {
                const double d = table.values[i][f] - table.values[j][f];
                d2 += d * d;
            }
            K[i * n + j] = K[j * n + i] = std::exp(-gamma * d2);
        }

    std::vector<double> alpha(n, 0.0);
    double b = 0.0;
    auto decision = [&](std::size_t i) {
        double f = b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0.0) f += alpha[j] * y[j] * K[j * n + i];
        return f;
    };

    Rng rng(derive_seed(seed, {0x5604}));
    constexpr int kQuietSweeps = 5;
    int quiet = 0;
    int sweeps = 0;
    bool converged = false;
    while (sweeps < params.max_iter) {
        ++sweeps;
        int changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double Ei = decision(i) - y[i];
            const bool violates = (y[i] * Ei < -params.tol && alpha[i] < C) ||
                                  (y[i] * Ei > params.tol && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = static_cast<std::size_t>(rng.bounded(n - 1));
            if (j >= i) ++j;
            const double Ej = decision(j) - y[j];

            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, alpha[j] - alpha[i]);
                hi = std::min(C, C + alpha[j] - alpha[i]);
            } else {
                lo = std::max(0.0, alpha[i] + alpha[j] - C);
                hi = std::min(C, alpha[i] + alpha[j]);
            }
            if (lo >= hi) continue;
            const double eta = 2.0 * K[i * n + j] - K[i * n + i] - K[j * n + j];
            if (eta >= 0.0) continue;

            const double aj_old = alpha[j], ai_old = alpha[i];
            double aj = aj_old - y[j] * (Ei - Ej) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::abs(aj - aj_old) < 1e-12) continue;
            const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
            alpha[i] = ai;
            alpha[j] = aj;

            const double b1 = b - Ei - y[i] * (ai - ai_old) * K[i * n + i] -
                              y[j] * (aj - aj_old) * K[i * n + j];
            const double b2 = b - Ej - y[i] * (ai - ai_old) * K[i * n + j] -
                              y[j] * (aj - aj_old) * K[j * n + j];
            if (ai > 0.0 && ai < C) b = b1;
            else if (aj > 0.0 && aj < C) b = b2;
            else b = 0.5 * (b1 + b2);
            ++changed;
        }
        if (changed == 0) {
            if (++quiet >= kQuietSweeps) {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    if (!converged)
        std::cerr << "warning: svm did not converge within " << params.max_iter
                  << " sweeps; returning current iterate\n";

    SvmModel svm;
    svm.params = params;
    svm.gamma_used = gamma;
    svm.bias = b;
    svm.converged = converged;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] <= 0.0) continue;
        svm.support_x.push_back(table.values[i]);
        svm.alpha_y.push_back(alpha[i] * y[i]);
    }

    TrainedModel model;
    model.kind = ModelKind::svm_rbf;
    model.seed = seed;
    model.feature_names = table.feature_names;
    model.model = std::move(svm);
    return model;
}

} // namespace pagc
