#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dbce {

/// Dense row-major square matrix solve A x = b via Gaussian elimination
/// with partial pivoting. Sizes here are tiny (at most a few dozen rows),
/// so no factorization object is kept.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("solve_dense: matrix/vector size mismatch");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(a[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::fabs(a[perm[r] * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-14) throw std::runtime_error("solve_dense: singular matrix");
        std::swap(perm[col], perm[pivot]);

        const std::size_t prow = perm[col];
        const double diag = a[prow * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const std::size_t row = perm[r];
            const double factor = a[row * n + col] / diag;
            if (factor == 0.0) continue;
            a[row * n + col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) a[row * n + c] -= factor * a[prow * n + c];
            b[row] -= factor * b[prow];
        }
    }

    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        const std::size_t row = perm[i];
        double acc = b[row];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[row * n + c] * x[c];
        x[i] = acc / a[row * n + i];
    }
    return x;
}

}  // namespace dbce
