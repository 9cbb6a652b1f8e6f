#include <algorithm>
#include <cmath>

#include "mooids/autodp.hpp"

namespace mooids {

namespace {

// Wichura's AS 241 (PPND16): quantile of the standard normal distribution.
double normal_quantile(double p) {
    double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.99322925346682870679e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0 ? -val : val;
}

// Upper-tail probability of the standard normal distribution.
double normal_sf(double z) {
    return 0.5 * std::erfc(z / 1.4142135623730950488);
}

double poly(const double* c, int n, double x) {
    double v = c[0];
    double p = 1.0;
    for (int i = 1; i < n; ++i) {
        p *= x;
        v += c[i] * p;
    }
    return v;
}

}  // namespace

ShapiroResult shapiro_wilk(const std::vector<double>& values, std::uint64_t seed) {
    std::size_t n_in = values.size();
    if (n_in < 3) throw DataError("shapiro_wilk needs at least 3 values");

    std::vector<double> x;
    if (n_in > 5000) {
        // the approximation is defined for n <= 5000; test a seeded subsample
        std::vector<std::size_t> idx(n_in);
        for (std::size_t i = 0; i < n_in; ++i) idx[i] = i;
        Rng rng(seed);
        for (std::size_t i = 0; i < 5000; ++i) {
            std::size_t j = i + rng.index(n_in - i);
            std::swap(idx[i], idx[j]);
        }
        x.resize(5000);
        for (std::size_t i = 0; i < 5000; ++i) x[i] = values[idx[i]];
    } else {
        x = values;
    }
    std::sort(x.begin(), x.end());
    std::size_t n = x.size();

    if (x.front() == x.back()) {
        return {0.0, 0.0, true};  // constant input: maximally non-normal signal
    }

    // expected normal order statistics
    std::vector<double> m(n);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((double(i + 1) - 0.375) / (double(n) + 0.25));
        summ2 += m[i] * m[i];
    }
    double ssumm2 = std::sqrt(summ2);
    double rsn = 1.0 / std::sqrt(double(n));

    std::vector<double> a(n);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[1] = 0.0;
        a[2] = std::sqrt(0.5);
    } else {
        static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
        static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
        double an = m[n - 1] / ssumm2 + poly(c1, 6, rsn);
        if (n > 5) {
            double an1 = m[n - 2] / ssumm2 + poly(c2, 6, rsn);
            double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                         (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            double fac = std::sqrt(phi);
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
            for (std::size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / fac;
        } else {
            double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            double fac = std::sqrt(phi);
            a[n - 1] = an;
            a[0] = -an;
            for (std::size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / fac;
        }
    }

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += a[i] * x[i];
        den += (x[i] - mean) * (x[i] - mean);
    }
    double w = num * num / den;
    w = std::min(w, 1.0);

    double p;
    if (n == 3) {
        p = 1.909859 * (std::asin(std::sqrt(w)) - 1.047198);  // 6/pi, asin(sqrt(3/4))
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        double nn = double(n);
        double gamma = 0.459 * nn - 2.273;
        double g = -std::log(gamma - std::log1p(-w));
        double mu = 0.5440 + nn * (-0.39978 + nn * (0.025054 - nn * 6.714e-4));
        double sigma = std::exp(1.3822 + nn * (-0.77857 + nn * (0.062767 - nn * 0.0020322)));
        p = normal_sf((g - mu) / sigma);
    } else {
        double ln = std::log(double(n));
        double g = std::log1p(-w);
        double mu = -1.5861 + ln * (-0.31082 + ln * (-0.083751 + ln * 0.0038915));
        double sigma = std::exp(-0.4803 + ln * (-0.082676 + ln * 0.0030302));
        p = normal_sf((g - mu) / sigma);
    }
    return {w, p, false};
}

}  // namespace mooids
