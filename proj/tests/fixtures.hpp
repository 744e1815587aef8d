#pragma once

#include "precoder/channel.hpp"
#include "test_util.hpp"

namespace precoder::testing {

/// Reference two-user channel pair used by the region sweeps.
inline ChannelPair region_fixture(double power) {
    Matrix h1(3, 3,
              {-2.2975, 0.4896, -1.8310, //
               1.4576, -0.6100, 0.3800,  //
               0.8998, 0.0916, -0.3128});
    Matrix h2(3, 3,
              {-0.3276, 3.3159, -0.9956, //
               1.5765, 0.2604, 0.2578,   //
               -0.3337, 1.1478, -0.3364});
    return ChannelPair(std::move(h1), std::move(h2), power);
}

inline ChannelPair random_channel(Rng& rng, std::size_t n1, std::size_t n2, std::size_t m,
                                  double power) {
    return ChannelPair(random_matrix(rng, n1, m), random_matrix(rng, n2, m), power);
}

} // namespace precoder::testing
