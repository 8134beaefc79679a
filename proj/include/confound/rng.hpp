#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace confound {

// Seed addressing for one logical random stream. Identical (master_seed,
// stream_id) pairs always produce identical draws, independent of thread
// scheduling. stream_id is typically the Monte Carlo replicate index.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Acklam's rational approximation to the standard normal quantile,
// refined with one Halley step against erfc for full double accuracy.
inline double inverse_normal_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: e = Phi(x) - p
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

} // namespace detail

// Deterministic random stream. The generator algorithm is fixed:
// mt19937_64 seeded from splitmix64-mixed (master_seed, stream_id,
// substream), uniforms as (x >> 11) * 2^-53 in (0,1), Gaussians via the
// inverse normal CDF. Substreams let one replicate consume independent
// draws for distinct purposes without interleaving.
class Rng {
public:
    Rng(const SeedSpec& seed, std::uint64_t substream = 0)
        : gen_(mix_seed(seed, substream)) {}

    // Uniform on the open interval (0,1).
    double uniform() {
        std::uint64_t x = gen_();
        double u = static_cast<double>(x >> 11) * 0x1.0p-53;
        if (u <= 0.0) u = 0x1.0p-53;
        return u;
    }

    double normal() { return detail::inverse_normal_cdf(uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t mix_seed(const SeedSpec& seed, std::uint64_t substream) {
        std::uint64_t h = detail::splitmix64(seed.master_seed);
        h = detail::splitmix64(h ^ detail::splitmix64(seed.stream_id + 0x632be59bd9b4e019ULL));
        h = detail::splitmix64(h ^ detail::splitmix64(substream + 0x9e6c63d0876a6a7dULL));
        return h;
    }

    std::mt19937_64 gen_;
};

} // namespace confound
