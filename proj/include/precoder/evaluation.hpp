#pragma once

#include <map>
#include <string>
#include <vector>

#include "precoder/network.hpp"

namespace precoder {

/// r_dnn / r_conv as a percentage; may exceed 100 when the network beats the
/// label on a non-convex mode. Throws DegenerateReference when the
/// conventional value is (numerically) zero.
double accuracy_ratio(double r_dnn, double r_conv);

/// (r_new - r_base) / r_base as a signed percentage.
double relative_improvement(double r_new, double r_base);

enum class Engine { Rp, Dnn };

struct RegionPoint {
    double level = 0.0;  // normalized EH level
    double rate = 0.0;   // bit/s/Hz
    double energy = 0.0; // watts
};

/// Rate-energy frontier at the given EH levels. Levels 0 and 1 delegate to
/// the closed forms; the DNN engine serves the nine tabulated levels through
/// the corresponding modes and the endpoints through M1/M2.
std::vector<RegionPoint> sweep_region(const ChannelPair& ch, std::span<const double> levels,
                                      Engine engine, const SolverConfig& cfg,
                                      const Network* net = nullptr);

struct ModeEval {
    std::string mode;
    std::size_t samples = 0;
    double mean_conventional = 0.0; // bit/s/Hz, or watts for M2
    double mean_dnn = 0.0;
    double accuracy_percent = 0.0; // ratio of the means
    bool degenerate_reference = false;
    double mse = 0.0; // per-element MSE of the 6 outputs vs targets
};

struct EvalReport {
    std::vector<ModeEval> modes;
    std::array<double, kTargetDim> element_mse{}; // across all modes
    double overall_mse = 0.0;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Re-evaluates each sample's objective on the label covariance and on the
/// repaired network output, then aggregates per mode (ratio of means).
EvalReport evaluate_testset(const Network& net, const std::vector<Sample>& test, double power);

struct TimingRow {
    std::string engine; // "closed", "rp", or "dnn"
    std::string mode;
    std::size_t batch_size = 1; // dnn only; solvers run one channel at a time
    double mean_ms = 0.0;       // per channel
    double median_ms = 0.0;
    std::size_t repetitions = 0;
};

/// Wall-clock comparison of the solvers against batched network inference.
/// Warm-up runs are discarded; timings wrap only the solve or forward call.
std::vector<TimingRow> benchmark(const std::vector<ChannelPair>& channels,
                                 const std::vector<Mode>& modes,
                                 const std::vector<Engine>& engines,
                                 const std::vector<std::size_t>& batch_sizes,
                                 const SolverConfig& cfg, const Network* net = nullptr);

std::string timing_to_csv(const std::vector<TimingRow>& rows);

} // namespace precoder
