#pragma once

#include <cmath>
#include <cstdint>

namespace macmi {

// Counter-based generator: every variate is a pure function of
// (seed, stream, counter), so parallel workers can draw disjoint index
// ranges without sharing state and still produce bit-identical streams.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t bits(uint64_t counter) const {
        uint64_t h = mix(seed_ ^ 0x8f3c0a7d2b96e154ULL);
        h = mix(h ^ stream_);
        return mix(h ^ counter);
    }

    // uniform on (0,1): top 53 bits, offset half an ulp so 0 never occurs
    double u01(uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1p-53;
    }

    // standard normal pair via Box-Muller from counters (2k, 2k+1)
    void normal_pair(uint64_t k, double& a, double& b) const {
        double u1 = u01(2 * k);
        double u2 = u01(2 * k + 1);
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925287 * u2;
        a = r * std::cos(t);
        b = r * std::sin(t);
    }

    // integer in [0, n) — negligible modulo bias for the alphabet sizes here,
    // and deterministic, which is what reproducibility needs
    uint64_t index(uint64_t counter, uint64_t n) const {
        return bits(counter) % n;
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    uint64_t seed_;
    uint64_t stream_;
};

// derives per-grid-point / per-substream seeds so parallel sweeps stay
// reproducible regardless of scheduling
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    return CounterRng::mix(CounterRng::mix(seed ^ 0xd1b54a32d192ed03ULL) ^ index);
}

} // namespace macmi
