#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "precoder/dataset.hpp"

namespace precoder {

struct NetworkConfig {
    std::size_t input_dim = kFeatureDim;
    // nine hidden layers of 256 plus a final hidden layer of 128
    std::vector<std::size_t> hidden = {256, 256, 256, 256, 256, 256, 256, 256, 256, 128};
    std::size_t output_dim = kTargetDim;
    double prelu_init = 0.25;
    std::uint64_t seed = 1;

    void validate() const;
    std::size_t parameter_count() const; // weights + biases + PReLU slopes
};

/// Fully connected network with per-unit trainable PReLU on every hidden
/// layer and a linear output layer. Parameters live in one flat buffer in
/// layer order (weights row-major, biases, slopes) so the optimizer and the
/// checkpoint see the same layout.
class Network {
public:
    explicit Network(NetworkConfig cfg); // seeded scaled-uniform fan-in init

    const NetworkConfig& config() const noexcept { return cfg_; }
    std::size_t layers() const noexcept { return cfg_.hidden.size() + 1; }
    std::size_t layer_in(std::size_t l) const noexcept;
    std::size_t layer_out(std::size_t l) const noexcept;

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::span<const double> weights(std::size_t l) const;
    std::span<const double> biases(std::size_t l) const;
    std::span<const double> alphas(std::size_t l) const; // hidden layers only
    std::span<double> weights(std::size_t l);
    std::span<double> biases(std::size_t l);
    std::span<double> alphas(std::size_t l);

    std::uint64_t step() const noexcept { return step_; }
    void set_step(std::uint64_t s) noexcept { step_ = s; }

    /// Single-feature forward pass; returns the 6 raw outputs.
    std::vector<double> forward(std::span<const double> feature) const;

    /// Batched forward pass: x is n x input_dim row-major, y n x output_dim.
    void forward_batch(const double* x, std::size_t n, double* y) const;

    struct BackwardResult {
        std::vector<double> grad; // flat, aligned with parameters()
        double loss = 0.0;        // mean-squared error over the outputs
    };

    /// Loss and gradients for one sample (mean-squared error over the 6
    /// outputs; PReLU uses the positive branch at exactly zero).
    BackwardResult backward(std::span<const double> feature, std::span<const double> target) const;

    /// Batch version; loss and gradients are averaged over the n samples.
    BackwardResult backward_batch(const double* x, const double* t, std::size_t n) const;

private:
    friend Network network_with_parameters(NetworkConfig cfg, std::span<const double> params);
    NetworkConfig cfg_;
    std::vector<double> params_;
    std::vector<std::size_t> w_off_, b_off_, a_off_; // per-layer offsets
    std::uint64_t step_ = 0;

    std::span<double> mutable_span(std::size_t off, std::size_t len) {
        return std::span<double>(params_.data() + off, len);
    }
};

Network network_with_parameters(NetworkConfig cfg, std::span<const double> params);

struct TrainConfig {
    double initial_lr = 0.001;
    double lr_drop_factor = 0.8;
    std::size_t lr_drop_period_epochs = 1;
    std::size_t batch_size = 5000;
    std::size_t max_epochs = 50;
    double validation_fraction = 0.02;
    std::uint64_t seed = 7;

    void validate() const;
};

/// 0.001 * 0.8^k after epoch k with the default schedule.
double learning_rate_for_epoch(const TrainConfig& cfg, std::size_t epoch);

struct Checkpoint {
    NetworkConfig config;
    std::vector<double> parameters; // snapshot of the best-validation epoch
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    std::uint64_t adam_step = 0;
    std::size_t epoch = 0; // epoch the snapshot was taken after
    std::vector<double> train_loss;
    std::vector<double> val_loss;
};

/// Thrown when a non-finite loss aborts training; carries the state at the
/// failing step for inspection.
struct TrainAbort : Error {
    TrainAbort(std::string what, Checkpoint snapshot)
        : Error(ErrorCode::NonFinite, std::move(what)), diagnostic(std::move(snapshot)) {}
    Checkpoint diagnostic;
};

/// Adam with the epoch-wise learning-rate drop. The network is left holding
/// the best-validation parameters, which the returned checkpoint mirrors.
/// Single-threaded and bit-deterministic for a fixed seed.
Checkpoint train(Network& net, const std::vector<Sample>& data, const TrainConfig& cfg);

/// Binary checkpoint: "PRCD" magic, u32 version, u32 dims array, f64
/// parameters in layer order, u64 Adam step, f64 Adam moments. Loss history
/// goes to a JSON sidecar next to the file.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
Network network_from_checkpoint(const Checkpoint& ckpt);

/// Assemble the symmetric matrix from the 6 raw outputs, clamp negative
/// eigenvalues, and rescale the trace to exactly P. An all-zero output falls
/// back to the uniform allocation.
CovarianceMatrix assemble_covariance(std::span<const double> output, double power);

} // namespace precoder
