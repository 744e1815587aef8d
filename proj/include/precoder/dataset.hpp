#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "precoder/rng.hpp"
#include "precoder/solvers.hpp"

namespace precoder {

/// Supervised pair: feature vector (76 entries for m = 3) and the
/// upper-triangular covariance target in the order
/// (q11, q22, q33, q12, q23, q13).
struct Sample {
    std::uint64_t channel_id = 0;
    int mode_index = 1;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::vector<double> feature;
    std::vector<double> target;
};

struct DatasetSpec {
    std::size_t num_channels = 20000;
    std::size_t m = 3;
    std::size_t n_min = 1;
    std::size_t n_max = 5;
    double power = 20.0;
    std::vector<int> mode_indices = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
    std::uint64_t seed = 1;

    void validate() const;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    DatasetSpec spec;
    std::map<std::string, std::size_t> counts; // per mode name
    std::size_t total_samples = 0;
    std::vector<std::string> failures; // "channel <id> mode Mk: <error>"
};

/// Feature dimension for the m = 3 layout: 4 + 18 + 36 + 18.
inline constexpr std::size_t kFeatureDim = 76;
inline constexpr std::size_t kTargetDim = 6;

/// sign(x) |x|^{1/2} and sign(x) |x|^{1/3}, applied element-wise when
/// flattening the channel Grams.
double signed_sqrt(double x);
double signed_cbrt(double x);

/// i.i.d. N(0,1) channel entries; receive antenna counts uniform on
/// [n_min, n_max]. One Rng draw sequence per channel keeps generation
/// order-independent.
ChannelPair sample_channel(const DatasetSpec& spec, Rng& rng);

/// Mode code (4), then the scaled signed-root flattenings of
/// F = [H1^T H1  H2^T H2] and F^T F: [code, 0.2 s(vec F), 0.05 s(vec F^T F),
/// 0.4 c(vec F)]. Column-major stacking. m = 3 only.
std::vector<double> build_feature(const ChannelPair& ch, const Mode& mode);

/// Upper-triangular target order for the 6-entry output vector.
std::vector<double> covariance_to_target(const Matrix& q);
Matrix target_to_covariance(std::span<const double> target);

/// Deterministic per-sample solver seed, independent of labeling order.
std::uint64_t labeling_seed(std::uint64_t base, std::uint64_t channel_id, int mode_index);

/// Solve the mode's problem and package feature + target.
Sample label_sample(const ChannelPair& ch, const Mode& mode, const SolverConfig& cfg,
                    std::uint64_t channel_id);

/// One JSON line per sample, channels in id order; failures are skipped and
/// recorded in the manifest.
DatasetManifest generate_dataset(const DatasetSpec& spec, const SolverConfig& cfg,
                                 std::ostream& out, std::size_t threads = 1);

} // namespace precoder
