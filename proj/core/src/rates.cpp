#include "incstab/rates.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "incstab/errors.hpp"

namespace incstab {

namespace {
constexpr double kFloor = 1e-14;  // values below this are fit-window noise
}

Window default_window(std::span<const double> times) {
    if (times.empty()) throw ConfigError("empty time series");
    const double span = times.back() - times.front();
    return Window{times.front() + 0.1 * span, times.back()};
}

RateFit fit_exponential(std::span<const double> times, std::span<const double> values,
                        double t_lo, double t_hi) {
    if (times.size() != values.size()) throw ConfigError("series length mismatch");
    std::vector<double> ts;
    std::vector<double> logs;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo || times[i] > t_hi) continue;
        if (values[i] <= 0.0)
            throw ConfigError("exponential fit requires strictly positive samples in the window");
        if (values[i] < kFloor) continue;
        ts.push_back(times[i]);
        logs.push_back(std::log(values[i]));
    }
    if (ts.size() < 10) throw ConfigError("exponential fit requires at least 10 samples in the window");

    const double n = static_cast<double>(ts.size());
    double mean_t = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mean_t += ts[i];
        mean_y += logs[i];
    }
    mean_t /= n;
    mean_y /= n;
    double cov = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        cov += (ts[i] - mean_t) * (logs[i] - mean_y);
        var += (ts[i] - mean_t) * (ts[i] - mean_t);
    }
    if (var == 0.0) throw ConfigError("exponential fit requires distinct sample times");

    RateFit fit;
    const double slope = cov / var;
    fit.c = -slope;
    fit.K = std::exp(mean_y - slope * mean_t);
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.points = static_cast<int>(ts.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = logs[i] - (mean_y + slope * (ts[i] - mean_t));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

EnvelopeResult envelope_check(std::span<const double> times, std::span<const double> values,
                              double K, double c, double slack) {
    if (times.size() != values.size() || times.empty())
        throw ConfigError("envelope check requires a non-empty series");
    const double t0 = times.front();
    const double y0 = values.front();
    EnvelopeResult out;
    out.worst_ratio = 0.0;
    out.worst_t = t0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double bound = K * std::exp(-c * (times[i] - t0)) * y0;
        const double ratio = bound > 0.0 ? values[i] / bound
                                         : std::numeric_limits<double>::infinity();
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_t = times[i];
        }
    }
    out.pass = out.worst_ratio <= (1.0 + slack) * (1.0 + 1e-12);
    return out;
}

double envelope_prefactor(std::span<const double> times, std::span<const double> values,
                          double c) {
    if (times.size() != values.size() || times.empty())
        throw ConfigError("envelope prefactor requires a non-empty series");
    const double t0 = times.front();
    const double y0 = values.front();
    if (!(y0 > 0.0)) throw ConfigError("envelope prefactor requires a positive initial value");
    double k = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        k = std::max(k, values[i] * std::exp(c * (times[i] - t0)) / y0);
    return k;
}

}  // namespace incstab
