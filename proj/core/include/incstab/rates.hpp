#pragma once

#include <span>

namespace incstab {

/// Least-squares exponential fit y ~= K exp(-c t) over a time window,
/// performed in the log domain.
struct RateFit {
    double K = 0.0;
    double c = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double residual = 0.0;  // RMS of the log-domain residuals
    int points = 0;
};

/// Fit over samples with t in [t_lo, t_hi]. Nonpositive samples in the
/// window are an error; samples below 1e-14 are dropped as floating-point
/// floor; at least 10 samples must remain.
RateFit fit_exponential(std::span<const double> times, std::span<const double> values,
                        double t_lo, double t_hi);

/// Default fit window: skips the leading 10% of the span, where transients
/// and prefactors dominate.
struct Window {
    double lo = 0.0;
    double hi = 0.0;
};
Window default_window(std::span<const double> times);

/// Check y(t) <= (1 + slack) * K * exp(-c (t - t0)) * y(t0) at every sample,
/// where t0 is the first time in the series and K is the dimensionless
/// prefactor of the exponential envelope.
struct EnvelopeResult {
    bool pass = false;
    double worst_ratio = 0.0;  // max of y / envelope
    double worst_t = 0.0;
};

EnvelopeResult envelope_check(std::span<const double> times, std::span<const double> values,
                              double K, double c, double slack);

/// Smallest dimensionless prefactor K such that the envelope with rate c
/// holds with zero slack: max over samples of y(t) e^{c (t - t0)} / y(t0).
double envelope_prefactor(std::span<const double> times, std::span<const double> values, double c);

}  // namespace incstab
