#pragma once

#include <cmath>
#include <stdexcept>

namespace mfas {

// Bessel function of the first kind, order zero.
//
// Ascending series for |x| <= 12, Hankel asymptotic expansion truncated at
// its smallest term beyond. The crossover sits where both branches deliver
// absolute error below 1e-12; the asymptotic branch alone cannot reach that
// accuracy for |x| < ~10.
inline double bessel_j0(double x) {
    if (!std::isfinite(x)) throw std::domain_error("bessel_j0: non-finite argument");
    x = std::fabs(x);

    if (x <= 12.0) {
        // J0(x) = sum_k (-x^2/4)^k / (k!)^2
        const double q = -0.25 * x * x;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 80; ++k) {
            term *= q / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (std::fabs(term) < 1e-18) break;
        }
        return sum;
    }

    // J0(x) = sqrt(2/(pi x)) Re[ e^{i(x - pi/4)} sum_m (-i)^m c_m / (8x)^m ],
    // c_0 = 1, c_m = c_{m-1} (2m-1)^2 / m. The series is divergent; stop at
    // the smallest term.
    const double inv8x = 1.0 / (8.0 * x);
    double re = 1.0;  // m = 0 contribution
    double im = 0.0;
    double mag = 1.0;
    for (int m = 1; m < 64; ++m) {
        const double odd = 2.0 * m - 1.0;
        const double next = mag * odd * odd / static_cast<double>(m) * inv8x;
        if (next >= mag) break;
        mag = next;
        switch (m & 3) {
            case 0: re += mag; break;
            case 1: im -= mag; break;
            case 2: re -= mag; break;
            case 3: im += mag; break;
        }
        if (mag < 1e-18) break;
    }
    const double chi = x - 0.25 * M_PI;
    return std::sqrt(2.0 / (M_PI * x)) * (std::cos(chi) * re - std::sin(chi) * im);
}

}  // namespace mfas
