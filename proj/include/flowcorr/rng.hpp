#pragma once

#include <cstdint>

namespace flowcorr {

// Counter-seeded xoshiro256++ stream. Identical (seed, stream_id) pairs
// reproduce identical draws on every platform and thread count; distinct
// stream_ids give statistically independent streams. The normal variate is
// inverse-CDF (Wichura AS 241), so draws are bit-reproducible everywhere.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();
    double uniform01();              // open interval (0, 1)
    double normal();                 // N(0, 1)
    double exponential(double mean);
    double gamma(double shape);      // Gamma(shape, scale 1), Marsaglia-Tsang
    int uniform_int(int n);          // {0, ..., n-1}

    RngStream substream(std::uint64_t k) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

// Inverse normal CDF (AS 241 PPND16), exposed for tests.
double inverse_normal_cdf(double p);

} // namespace flowcorr
