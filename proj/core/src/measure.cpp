#include "incstab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "incstab/errors.hpp"

namespace incstab {

MeasureNorm parse_norm(const std::string& s) {
    if (s == "1" || s == "one") return MeasureNorm::one;
    if (s == "2" || s == "two") return MeasureNorm::two;
    if (s == "inf") return MeasureNorm::inf;
    throw ConfigError("unknown norm '" + s + "' (expected 1, 2 or inf)");
}

std::string norm_name(MeasureNorm p) {
    switch (p) {
        case MeasureNorm::one: return "1";
        case MeasureNorm::two: return "2";
        case MeasureNorm::inf: return "inf";
    }
    return "?";
}

namespace {

void require_square(const Matrix& a, const char* who) {
    if (!a.square()) throw ConfigError(std::string(who) + " requires a square matrix");
}

double off_diagonal_frobenius(const Matrix& s) {
    double acc = 0.0;
    for (int i = 0; i < s.rows; ++i)
        for (int j = 0; j < s.cols; ++j)
            if (i != j) acc += s(i, j) * s(i, j);
    return std::sqrt(acc);
}

}  // namespace

double sym_eig_max(const Matrix& s) {
    require_square(s, "sym_eig_max");
    const int n = s.rows;
    if (n == 0) throw ConfigError("sym_eig_max requires a non-empty matrix");

    const double scale = frobenius_norm(s);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-12 * std::max(1.0, scale))
                throw ConfigError("sym_eig_max: matrix is not symmetric within tolerance");

    Matrix a = s;
    if (scale == 0.0) return 0.0;
    const double target = 1e-12 * scale;

    // Cyclic-by-row Jacobi sweeps. Dimensions are tiny, so plain rotations
    // applied to full rows/columns are plenty fast.
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_frobenius(a) <= target) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= target / (n * n)) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }

    double best = a(0, 0);
    for (int i = 1; i < n; ++i) best = std::max(best, a(i, i));
    return best;
}

double mu(const Matrix& a, MeasureNorm p) {
    require_square(a, "mu");
    const int n = a.rows;
    switch (p) {
        case MeasureNorm::one: {
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                double col = a(j, j);
                for (int i = 0; i < n; ++i)
                    if (i != j) col += std::abs(a(i, j));
                best = std::max(best, col);
            }
            return best;
        }
        case MeasureNorm::inf: {
            double best = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                double row = a(i, i);
                for (int j = 0; j < n; ++j)
                    if (j != i) row += std::abs(a(i, j));
                best = std::max(best, row);
            }
            return best;
        }
        case MeasureNorm::two: {
            Matrix sym(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
            return sym_eig_max(sym);
        }
    }
    throw ConfigError("mu: unknown norm tag");
}

double opnorm(const Matrix& a, MeasureNorm p) {
    switch (p) {
        case MeasureNorm::one: {
            double best = 0.0;
            for (int j = 0; j < a.cols; ++j) {
                double col = 0.0;
                for (int i = 0; i < a.rows; ++i) col += std::abs(a(i, j));
                best = std::max(best, col);
            }
            return best;
        }
        case MeasureNorm::inf: {
            double best = 0.0;
            for (int i = 0; i < a.rows; ++i) {
                double row = 0.0;
                for (int j = 0; j < a.cols; ++j) row += std::abs(a(i, j));
                best = std::max(best, row);
            }
            return best;
        }
        case MeasureNorm::two: {
            if (a.rows == 0 || a.cols == 0) return 0.0;
            const Matrix gram = matmul(a.transposed(), a);
            return std::sqrt(std::max(0.0, sym_eig_max(gram)));
        }
    }
    throw ConfigError("opnorm: unknown norm tag");
}

double mu_limit_oracle(const Matrix& a, MeasureNorm p, double h) {
    require_square(a, "mu_limit_oracle");
    if (!(h > 0.0) || h > 1e-4) throw ConfigError("mu_limit_oracle requires h in (0, 1e-4]");
    Matrix shifted = a;
    shifted *= h;
    shifted += Matrix::identity(a.rows);
    return (opnorm(shifted, p) - 1.0) / h;
}

double vec_norm(std::span<const double> v, MeasureNorm p) {
    switch (p) {
        case MeasureNorm::one: {
            double s = 0.0;
            for (double x : v) s += std::abs(x);
            return s;
        }
        case MeasureNorm::two: {
            double s = 0.0;
            for (double x : v) s += x * x;
            return std::sqrt(s);
        }
        case MeasureNorm::inf: {
            double s = 0.0;
            for (double x : v) s = std::max(s, std::abs(x));
            return s;
        }
    }
    throw ConfigError("vec_norm: unknown norm tag");
}

}  // namespace incstab
