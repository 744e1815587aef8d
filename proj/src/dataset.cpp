#include "precoder/dataset.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "precoder/io.hpp"
#include "precoder/log.hpp"

namespace precoder {

void DatasetSpec::validate() const {
    if (m < 1 || n_min < 1 || n_max < n_min)
        throw Error(ErrorCode::InvalidArgument, "bad antenna ranges in dataset spec");
    if (!(power > 0.0)) throw Error(ErrorCode::InvalidArgument, "dataset power must be positive");
    for (int k : mode_indices)
        if (k < 1 || k > Mode::kCount)
            throw Error(ErrorCode::InvalidArgument, "dataset mode index out of range");
}

double signed_sqrt(double x) { return std::copysign(std::sqrt(std::fabs(x)), x); }

double signed_cbrt(double x) { return std::cbrt(x); }

ChannelPair sample_channel(const DatasetSpec& spec, Rng& rng) {
    const std::size_t n1 = spec.n_min + rng.uniform_int(spec.n_max - spec.n_min + 1);
    const std::size_t n2 = spec.n_min + rng.uniform_int(spec.n_max - spec.n_min + 1);
    Matrix h1(n1, spec.m), h2(n2, spec.m);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < spec.m; ++j) h1(i, j) = rng.normal();
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < spec.m; ++j) h2(i, j) = rng.normal();
    return ChannelPair(std::move(h1), std::move(h2), spec.power);
}

namespace {

void append_scaled_columnwise(std::vector<double>& out, const Matrix& m, double scale,
                              double (*f)(double)) {
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(scale * f(m(i, j)));
}

} // namespace

std::vector<double> build_feature(const ChannelPair& ch, const Mode& mode) {
    if (ch.tx_antennas() != 3)
        throw Error(ErrorCode::UnsupportedM, "feature layout is fixed to three transmit antennas");

    // F = [H1^T H1  H2^T H2], 3 x 6
    const Matrix g1 = ch.h1.transposed() * ch.h1;
    const Matrix g2 = ch.h2.transposed() * ch.h2;
    Matrix f(3, 6);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            f(i, j) = g1(i, j);
            f(i, j + 3) = g2(i, j);
        }
    const Matrix ftf = f.transposed() * f; // 6 x 6

    std::vector<double> v;
    v.reserve(kFeatureDim);
    for (int bit : mode.code()) v.push_back(static_cast<double>(bit));
    append_scaled_columnwise(v, f, 0.2, &signed_sqrt);
    append_scaled_columnwise(v, ftf, 0.05, &signed_sqrt);
    append_scaled_columnwise(v, f, 0.4, &signed_cbrt);
    return v;
}

std::vector<double> covariance_to_target(const Matrix& q) {
    return {q(0, 0), q(1, 1), q(2, 2), q(0, 1), q(1, 2), q(0, 2)};
}

Matrix target_to_covariance(std::span<const double> target) {
    if (target.size() != kTargetDim)
        throw Error(ErrorCode::DimensionMismatch, "target must have 6 entries");
    Matrix q(3, 3);
    q(0, 0) = target[0];
    q(1, 1) = target[1];
    q(2, 2) = target[2];
    q(0, 1) = q(1, 0) = target[3];
    q(1, 2) = q(2, 1) = target[4];
    q(0, 2) = q(2, 0) = target[5];
    return q;
}

std::uint64_t labeling_seed(std::uint64_t base, std::uint64_t channel_id, int mode_index) {
    return derive_seed(base, channel_id * 16 + static_cast<std::uint64_t>(mode_index));
}

Sample label_sample(const ChannelPair& ch, const Mode& mode, const SolverConfig& cfg,
                    std::uint64_t channel_id) {
    SolverConfig scoped = cfg;
    scoped.seed = labeling_seed(cfg.seed, channel_id, mode.index());
    const SolveReport report = solve_mode(ch, mode, scoped);

    Sample s;
    s.channel_id = channel_id;
    s.mode_index = mode.index();
    s.n1 = ch.rx1_antennas();
    s.n2 = ch.rx2_antennas();
    s.feature = build_feature(ch, mode);
    s.target = covariance_to_target(report.q_opt.matrix());
    return s;
}

DatasetManifest generate_dataset(const DatasetSpec& spec, const SolverConfig& cfg,
                                 std::ostream& out, std::size_t threads) {
    spec.validate();
    cfg.validate();
    if (threads == 0) threads = 1;

    DatasetManifest manifest;
    manifest.seed = spec.seed;
    manifest.spec = spec;
    for (int k : spec.mode_indices) manifest.counts[Mode::from_index(k).name()] = 0;

    struct ChannelBatch {
        std::vector<Sample> samples;
        std::vector<std::string> failures;
    };

    auto label_channel = [&](std::uint64_t id) {
        ChannelBatch batch;
        Rng rng(derive_seed(spec.seed, id));
        const ChannelPair ch = sample_channel(spec, rng);
        for (int k : spec.mode_indices) {
            const Mode mode = Mode::from_index(k);
            try {
                batch.samples.push_back(label_sample(ch, mode, cfg, id));
            } catch (const Error& e) {
                batch.failures.push_back("channel " + std::to_string(id) + " mode " + mode.name() +
                                         ": " + e.what());
            }
        }
        return batch;
    };

    auto emit = [&](ChannelBatch& batch) {
        for (const Sample& s : batch.samples) {
            out << io::sample_to_json(s).dump() << '\n';
            if (!out) {
                out.clear();
                out << "{\"partial\":true}\n"; // marker for consumers of a cut file
                throw Error(ErrorCode::IoError, "dataset sink failed mid-write");
            }
            manifest.counts[Mode::from_index(s.mode_index).name()] += 1;
            ++manifest.total_samples;
        }
        for (std::string& f : batch.failures) {
            log::warn("labeling failure: %s", f.c_str());
            manifest.failures.push_back(std::move(f));
        }
    };

    if (threads == 1) {
        for (std::uint64_t id = 0; id < spec.num_channels; ++id) {
            ChannelBatch batch = label_channel(id);
            emit(batch);
        }
    } else {
        // chunked parallel labeling; emission stays in channel order so the
        // file is identical for any worker count
        const std::size_t chunk = threads * 8;
        for (std::uint64_t base = 0; base < spec.num_channels; base += chunk) {
            const std::uint64_t end = std::min<std::uint64_t>(base + chunk, spec.num_channels);
            std::vector<ChannelBatch> batches(end - base);
            std::vector<std::thread> workers;
            std::atomic<std::uint64_t> next{base};
            for (std::size_t t = 0; t < threads; ++t)
                workers.emplace_back([&] {
                    for (std::uint64_t id; (id = next.fetch_add(1)) < end;)
                        batches[id - base] = label_channel(id);
                });
            for (auto& w : workers) w.join();
            for (auto& b : batches) emit(b);
        }
    }
    return manifest;
}

} // namespace precoder
