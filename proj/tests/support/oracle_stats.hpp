#pragma once

// Statistics oracles that take algebraically different routes than the
// library: tau-b from a contingency table, Pearson and OLS from raw-moment
// formulas, and the binomial tail by direct summation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace statsoracle {

inline double tau_b_contingency(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    std::vector<double> xv = xs, yv = ys;
    std::sort(xv.begin(), xv.end());
    xv.erase(std::unique(xv.begin(), xv.end()), xv.end());
    std::sort(yv.begin(), yv.end());
    yv.erase(std::unique(yv.begin(), yv.end()), yv.end());

    const size_t rows = xv.size(), cols = yv.size();
    std::vector<std::vector<long long>> table(rows, std::vector<long long>(cols, 0));
    for (size_t i = 0; i < n; ++i) {
        const size_t r = std::lower_bound(xv.begin(), xv.end(), xs[i]) - xv.begin();
        const size_t c = std::lower_bound(yv.begin(), yv.end(), ys[i]) - yv.begin();
        ++table[r][c];
    }

    long long concordant = 0, discordant = 0;
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            if (table[r][c] == 0) continue;
            for (size_t r2 = r + 1; r2 < rows; ++r2) {
                for (size_t c2 = 0; c2 < cols; ++c2) {
                    if (c2 > c) concordant += table[r][c] * table[r2][c2];
                    if (c2 < c) discordant += table[r][c] * table[r2][c2];
                }
            }
        }
    }

    long long n1 = 0, n2 = 0;
    for (size_t r = 0; r < rows; ++r) {
        long long t = 0;
        for (size_t c = 0; c < cols; ++c) t += table[r][c];
        n1 += t * (t - 1) / 2;
    }
    for (size_t c = 0; c < cols; ++c) {
        long long t = 0;
        for (size_t r = 0; r < rows; ++r) t += table[r][c];
        n2 += t * (t - 1) / 2;
    }
    const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

inline double pearson_raw_moments(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        syy += ys[i] * ys[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) /
           std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

struct OlsFit {
    double intercept = 0.0;
    double slope = 0.0;
};

inline OlsFit ols_raw_moments(const std::vector<double>& ys, const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    OlsFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

// P(Bin(n, p) >= k) by summing exact terms.
inline double binomial_tail(int n, int k, double p) {
    long double total = 0.0L;
    for (int i = k; i <= n; ++i) {
        long double coeff = 1.0L;
        for (int j = 0; j < i; ++j) {
            coeff *= static_cast<long double>(n - j) / static_cast<long double>(j + 1);
        }
        total += coeff * std::pow(static_cast<long double>(p), i) *
                 std::pow(static_cast<long double>(1.0 - p), n - i);
    }
    return static_cast<double>(total);
}

} // namespace statsoracle
