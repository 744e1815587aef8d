#pragma once

#include "precoder/channel.hpp"

namespace precoder {

/// Water-filling optimum of the information-rate problem.
struct WaterfillResult {
    CovarianceMatrix q_opt;
    double rate = 0.0;        // bit/s/Hz
    double water_level = 0.0; // watts
};

/// Energy-beamforming optimum of the harvesting problem.
struct EhResult {
    CovarianceMatrix q_opt;
    double energy = 0.0; // watts
};

/// Q = A B A^T with A the right-singular vectors of H1 and B from
/// water-filling; the water level is found by the exact sorted-breakpoint
/// method so the trace lands on P exactly.
WaterfillResult solve_wit(const ChannelPair& ch);

/// Rate optimum for an arbitrary channel matrix against the given budget;
/// solve_wit delegates here with H1.
WaterfillResult solve_wit_matrix(const Matrix& h, double power);

/// Q = P g1 g1^T with g1 the top right-singular vector of H2; energy is
/// P sigma_max^2. A zero H2 yields zero energy and Q = P e1 e1^T.
EhResult solve_eh(const ChannelPair& ch);

/// E_min = energy harvested at the WIT optimum, E_max = solve_eh energy.
EnergyBounds energy_bounds(const ChannelPair& ch);

} // namespace precoder
