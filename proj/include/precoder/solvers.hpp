#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "precoder/closed_form.hpp"
#include "precoder/rotation.hpp"

namespace precoder {

struct SolverConfig {
    std::size_t max_iters = 2000;
    double grad_step = 0.5;     // initial ascent step
    double fd_epsilon = 1e-6;   // relative central-difference step
    std::size_t restarts = 8;   // total initializations, deterministic first
    double tol = 1e-7;          // objective stall threshold over 10 iterations
    double penalty_weight = 1.0; // initial SWIPT energy-penalty multiplier
    std::uint64_t seed = 12345;

    void validate() const;
};

enum class MulticastCase { Case1, Case2, Case3 };

const char* to_string(MulticastCase c);

struct SolveReport {
    CovarianceMatrix q_opt;
    double objective = 0.0; // value of the mode's objective (bit/s/Hz, or watts for EH)
    std::size_t iterations = 0;
    std::size_t restarts_used = 0;
    double constraint_violation = 0.0; // watts, SWIPT only
    double wall_time = 0.0;            // seconds
    std::optional<MulticastCase> case_tag;
};

using ObjectiveFn = std::function<double(const Matrix& q)>;

/// Projected-gradient ascent of an arbitrary objective over the rotation
/// coordinates, best over `restarts` initializations (the given one plus
/// seeded random draws). Every iterate stays inside {lambda >= 0,
/// sum lambda <= P}; angles are free.
SolveReport maximize_over_rotation(const ObjectiveFn& objective, const ChannelPair& ch,
                                   const SolverConfig& cfg, const RotationParams& init);

/// Rate maximization under a minimum harvested-energy constraint at the
/// normalized level q in [0, 1]. Level 0 is the plain rate problem, level 1
/// the plain harvesting problem; in between, an increasing quadratic penalty
/// enforces the threshold and the result is blended toward the harvesting
/// optimum so the constraint holds to within 1e-4 of the threshold.
SolveReport solve_swipt(const ChannelPair& ch, double q_level, const SolverConfig& cfg);

/// Secrecy-rate maximization; never returns a negative objective since the
/// zero covariance is always a fallback candidate.
SolveReport solve_secrecy(const ChannelPair& ch, const SolverConfig& cfg);

/// Min-rate maximization with the analytic two-case shortcut: when one
/// user's rate optimum already satisfies the other user, it is returned
/// as-is; otherwise ascent runs on a smooth soft-min surrogate.
SolveReport solve_multicast(const ChannelPair& ch, const SolverConfig& cfg);

/// Dispatch by operating mode (closed form for M1/M2, rotation solvers else).
SolveReport solve_mode(const ChannelPair& ch, const Mode& mode, const SolverConfig& cfg);

} // namespace precoder
