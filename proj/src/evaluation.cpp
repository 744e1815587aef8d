#include "precoder/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "precoder/io.hpp"

extern "C" void openblas_set_num_threads(int);

namespace precoder {

namespace {

using Clock = std::chrono::steady_clock;

double dot_symmetric(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
    return s;
}

/// The scaled signed-sqrt flattening of F = [G1 G2] is invertible, so the
/// evaluation recovers the Gram matrices straight from the stored feature.
void grams_from_feature(std::span<const double> feature, Matrix& g1, Matrix& g2) {
    if (feature.size() != kFeatureDim)
        throw Error(ErrorCode::DimensionMismatch, "feature length is not 76");
    g1 = Matrix(3, 3);
    g2 = Matrix(3, 3);
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t i = 0; i < 3; ++i) {
            const double y = feature[4 + j * 3 + i] / 0.2;
            const double value = std::copysign(y * y, y);
            if (j < 3)
                g1(i, j) = value;
            else
                g2(i, j - 3) = value;
        }
}

double objective_from_grams(ObjectiveKind kind, const Matrix& g1, const Matrix& g2,
                            const Matrix& q, Matrix& work) {
    switch (kind) {
    case ObjectiveKind::Wit:
    case ObjectiveKind::Swipt: return logdet_rate_gram(g1, q, work);
    case ObjectiveKind::Eh: return dot_symmetric(g2, q);
    case ObjectiveKind::Secrecy:
        return logdet_rate_gram(g1, q, work) - logdet_rate_gram(g2, q, work);
    case ObjectiveKind::Multicast:
        return std::min(logdet_rate_gram(g1, q, work), logdet_rate_gram(g2, q, work));
    }
    throw Error(ErrorCode::InvalidArgument, "unhandled objective kind");
}

Mode mode_for_level(double level) {
    if (level <= 1e-9) return Mode::from_index(1);
    if (level >= 1.0 - 1e-9) return Mode::from_index(2);
    for (int k = 3; k <= 11; ++k) {
        const Mode mode = Mode::from_index(k);
        if (std::fabs(*mode.eh_level() - level) < 1e-9) return mode;
    }
    throw Error(ErrorCode::InvalidArgument,
                "the network serves only the tabulated EH levels, got " + std::to_string(level));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

double accuracy_ratio(double r_dnn, double r_conv) {
    if (r_conv <= 1e-12)
        throw Error(ErrorCode::DegenerateReference, "conventional objective is zero");
    return r_dnn / r_conv * 100.0;
}

double relative_improvement(double r_new, double r_base) {
    if (r_base <= 1e-12)
        throw Error(ErrorCode::DegenerateReference, "baseline objective is zero");
    return (r_new - r_base) / r_base * 100.0;
}

std::vector<RegionPoint> sweep_region(const ChannelPair& ch, std::span<const double> levels,
                                      Engine engine, const SolverConfig& cfg, const Network* net) {
    if (engine == Engine::Dnn && net == nullptr)
        throw Error(ErrorCode::InvalidArgument, "region sweep with the network needs a checkpoint");
    for (double level : levels)
        if (!(level >= 0.0 && level <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "EH level outside [0, 1]");

    std::vector<RegionPoint> points(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) points[i].level = levels[i];

    if (engine == Engine::Dnn) {
        for (std::size_t i = 0; i < levels.size(); ++i) {
            const Mode mode = mode_for_level(levels[i]);
            const auto out = net->forward(build_feature(ch, mode));
            const CovarianceMatrix q = assemble_covariance(out, ch.power);
            points[i].rate = rate_wit(ch, q, 1);
            points[i].energy = harvested_energy(ch, q);
        }
        return points;
    }

    std::vector<SolveReport> reps;
    reps.reserve(levels.size());
    for (double level : levels) reps.push_back(solve_swipt(ch, level, cfg));

    // A solution for a higher threshold stays feasible at every lower one,
    // so a descending pass may adopt it wherever it carries more rate.
    std::vector<std::size_t> order(levels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return levels[a] > levels[b]; });
    double best_rate = -std::numeric_limits<double>::infinity();
    std::size_t best = SIZE_MAX;
    for (std::size_t idx : order) {
        const double own = reps[idx].objective;
        if (best != SIZE_MAX && best_rate > own + 1e-12) {
            points[idx].rate = rate_wit(ch, reps[best].q_opt, 1);
            points[idx].energy = harvested_energy(ch, reps[best].q_opt);
        } else {
            best_rate = own;
            best = idx;
            points[idx].rate = own;
            points[idx].energy = harvested_energy(ch, reps[idx].q_opt);
        }
    }
    return points;
}

EvalReport evaluate_testset(const Network& net, const std::vector<Sample>& test, double power) {
    struct Accum {
        std::size_t n = 0;
        double conv = 0.0;
        double dnn = 0.0;
        double mse = 0.0;
    };
    std::map<int, Accum> by_mode;
    EvalReport report;
    std::array<double, kTargetDim> sq_err{};

    Matrix g1, g2, work(3, 3);
    for (const Sample& s : test) {
        const Mode mode = Mode::from_index(s.mode_index);
        grams_from_feature(s.feature, g1, g2);

        const Matrix label_q = target_to_covariance(s.target);
        const auto raw = net.forward(s.feature);
        const CovarianceMatrix dnn_q = assemble_covariance(raw, power);
        const auto dnn_elems = covariance_to_target(dnn_q.matrix());

        Accum& acc = by_mode[s.mode_index];
        acc.n += 1;
        acc.conv += objective_from_grams(mode.kind(), g1, g2, label_q, work);
        acc.dnn += objective_from_grams(mode.kind(), g1, g2, dnn_q.matrix(), work);
        double sample_mse = 0.0;
        for (std::size_t e = 0; e < kTargetDim; ++e) {
            const double d = dnn_elems[e] - s.target[e];
            sq_err[e] += d * d;
            sample_mse += d * d;
        }
        acc.mse += sample_mse / static_cast<double>(kTargetDim);
    }

    double total_mse = 0.0;
    std::size_t total_n = 0;
    for (auto& [index, acc] : by_mode) {
        ModeEval row;
        row.mode = Mode::from_index(index).name();
        row.samples = acc.n;
        row.mean_conventional = acc.conv / static_cast<double>(acc.n);
        row.mean_dnn = acc.dnn / static_cast<double>(acc.n);
        row.mse = acc.mse / static_cast<double>(acc.n);
        try {
            row.accuracy_percent = accuracy_ratio(row.mean_dnn, row.mean_conventional);
        } catch (const Error&) {
            row.degenerate_reference = true;
        }
        total_mse += acc.mse;
        total_n += acc.n;
        report.modes.push_back(std::move(row));
    }
    if (total_n > 0) {
        for (std::size_t e = 0; e < kTargetDim; ++e)
            report.element_mse[e] = sq_err[e] / static_cast<double>(total_n);
        report.overall_mse = total_mse / static_cast<double>(total_n);
    }
    return report;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "mode,samples,mean_conventional,mean_dnn,accuracy_percent,mse\n";
    for (const ModeEval& m : modes) {
        os << m.mode << ',' << m.samples << ',' << m.mean_conventional << ',' << m.mean_dnn << ',';
        if (m.degenerate_reference)
            os << "excluded";
        else
            os << m.accuracy_percent;
        os << ',' << m.mse << '\n';
    }
    return os.str();
}

std::string EvalReport::to_json() const {
    io::json j;
    for (const ModeEval& m : modes) {
        io::json row;
        row["mode"] = m.mode;
        row["samples"] = m.samples;
        row["mean_conventional"] = m.mean_conventional;
        row["mean_dnn"] = m.mean_dnn;
        if (m.degenerate_reference)
            row["accuracy_percent"] = nullptr;
        else
            row["accuracy_percent"] = m.accuracy_percent;
        row["mse"] = m.mse;
        j["modes"].push_back(row);
    }
    j["element_mse"] = element_mse;
    j["overall_mse"] = overall_mse;
    return j.dump(2);
}

std::vector<TimingRow> benchmark(const std::vector<ChannelPair>& channels,
                                 const std::vector<Mode>& modes,
                                 const std::vector<Engine>& engines,
                                 const std::vector<std::size_t>& batch_sizes,
                                 const SolverConfig& cfg, const Network* net) {
    if (channels.empty() || modes.empty() || engines.empty())
        throw Error(ErrorCode::InvalidArgument, "benchmark needs channels, modes, and engines");
    openblas_set_num_threads(1); // stable single-threaded timings

    constexpr int kWarmup = 3;
    constexpr std::size_t kMinReps = 20;
    std::vector<TimingRow> rows;

    for (Engine engine : engines) {
        for (const Mode& mode : modes) {
            if (engine == Engine::Rp) {
                for (int w = 0; w < kWarmup; ++w)
                    solve_mode(channels[w % channels.size()], mode, cfg);
                std::vector<double> times;
                std::size_t i = 0;
                while (times.size() < kMinReps || times.size() < channels.size()) {
                    const auto t0 = Clock::now();
                    solve_mode(channels[i % channels.size()], mode, cfg);
                    times.push_back(
                        std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
                    ++i;
                }
                TimingRow row;
                row.engine = "rp";
                row.mode = mode.name();
                row.batch_size = 1;
                row.repetitions = times.size();
                for (double t : times) row.mean_ms += t;
                row.mean_ms /= static_cast<double>(times.size());
                row.median_ms = median(times);
                rows.push_back(std::move(row));
            } else {
                if (net == nullptr)
                    throw Error(ErrorCode::InvalidArgument, "dnn benchmark needs a checkpoint");
                for (std::size_t batch : batch_sizes) {
                    // features prepared outside the timed section
                    std::vector<double> x(batch * kFeatureDim);
                    for (std::size_t b = 0; b < batch; ++b) {
                        const auto f = build_feature(channels[b % channels.size()], mode);
                        std::copy(f.begin(), f.end(), x.begin() + b * kFeatureDim);
                    }
                    std::vector<double> y(batch * kTargetDim);
                    for (int w = 0; w < kWarmup; ++w) net->forward_batch(x.data(), batch, y.data());
                    std::vector<double> times;
                    for (std::size_t r = 0; r < kMinReps; ++r) {
                        const auto t0 = Clock::now();
                        net->forward_batch(x.data(), batch, y.data());
                        times.push_back(
                            std::chrono::duration<double, std::milli>(Clock::now() - t0).count() /
                            static_cast<double>(batch));
                    }
                    TimingRow row;
                    row.engine = "dnn";
                    row.mode = mode.name();
                    row.batch_size = batch;
                    row.repetitions = times.size();
                    for (double t : times) row.mean_ms += t;
                    row.mean_ms /= static_cast<double>(times.size());
                    row.median_ms = median(times);
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

std::string timing_to_csv(const std::vector<TimingRow>& rows) {
    std::ostringstream os;
    os << "engine,mode,batch_size,mean_ms_per_channel,median_ms_per_channel,repetitions\n";
    for (const TimingRow& r : rows)
        os << r.engine << ',' << r.mode << ',' << r.batch_size << ',' << r.mean_ms << ','
           << r.median_ms << ',' << r.repetitions << '\n';
    return os.str();
}

} // namespace precoder
