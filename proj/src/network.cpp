#include "precoder/network.hpp"

#include <algorithm>
#include <bit>
#include <cblas.h>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "precoder/io.hpp"
#include "precoder/log.hpp"

extern "C" void openblas_set_num_threads(int);

namespace precoder {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void NetworkConfig::validate() const {
    if (input_dim < 1 || output_dim < 1 || hidden.empty())
        throw Error(ErrorCode::InvalidArgument, "network needs input, hidden, and output widths");
    for (std::size_t w : hidden)
        if (w < 1) throw Error(ErrorCode::InvalidArgument, "hidden widths must be positive");
}

std::size_t NetworkConfig::parameter_count() const {
    std::size_t count = 0;
    std::size_t in = input_dim;
    for (std::size_t w : hidden) {
        count += w * in + w + w; // weights, biases, slopes
        in = w;
    }
    count += output_dim * in + output_dim;
    return count;
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t layers_total = cfg_.hidden.size() + 1;
    w_off_.resize(layers_total);
    b_off_.resize(layers_total);
    a_off_.resize(cfg_.hidden.size());

    std::size_t off = 0;
    for (std::size_t l = 0; l < layers_total; ++l) {
        const std::size_t in = layer_in(l), out = layer_out(l);
        w_off_[l] = off;
        off += out * in;
        b_off_[l] = off;
        off += out;
        if (l < cfg_.hidden.size()) {
            a_off_[l] = off;
            off += out;
        }
    }
    params_.assign(off, 0.0);

    Rng rng(cfg_.seed);
    for (std::size_t l = 0; l < layers_total; ++l) {
        const std::size_t in = layer_in(l), out = layer_out(l);
        // scaled-uniform fan-in: hidden layers carry the PReLU gain so the
        // forward variance stays level through the deep stack
        const double gain =
            l < cfg_.hidden.size() ? 2.0 / (1.0 + cfg_.prelu_init * cfg_.prelu_init) : 1.0;
        const double bound = std::sqrt(3.0 * gain / static_cast<double>(in));
        double* w = params_.data() + w_off_[l];
        for (std::size_t k = 0; k < out * in; ++k) w[k] = rng.uniform(-bound, bound);
        // biases stay zero
        if (l < cfg_.hidden.size()) {
            double* a = params_.data() + a_off_[l];
            for (std::size_t k = 0; k < out; ++k) a[k] = cfg_.prelu_init;
        }
    }
}

std::size_t Network::layer_in(std::size_t l) const noexcept {
    return l == 0 ? cfg_.input_dim : cfg_.hidden[l - 1];
}

std::size_t Network::layer_out(std::size_t l) const noexcept {
    return l < cfg_.hidden.size() ? cfg_.hidden[l] : cfg_.output_dim;
}

std::span<const double> Network::weights(std::size_t l) const {
    return {params_.data() + w_off_[l], layer_out(l) * layer_in(l)};
}

std::span<const double> Network::biases(std::size_t l) const {
    return {params_.data() + b_off_[l], layer_out(l)};
}

std::span<const double> Network::alphas(std::size_t l) const {
    return {params_.data() + a_off_[l], layer_out(l)};
}

std::span<double> Network::weights(std::size_t l) {
    return {params_.data() + w_off_[l], layer_out(l) * layer_in(l)};
}

std::span<double> Network::biases(std::size_t l) {
    return {params_.data() + b_off_[l], layer_out(l)};
}

std::span<double> Network::alphas(std::size_t l) { return {params_.data() + a_off_[l], layer_out(l)}; }

Network network_with_parameters(NetworkConfig cfg, std::span<const double> params) {
    Network net(std::move(cfg));
    if (params.size() != net.params_.size())
        throw Error(ErrorCode::DimensionMismatch, "parameter blob does not match the config");
    std::copy(params.begin(), params.end(), net.params_.begin());
    return net;
}

namespace {

// Z = X W^T + 1 b^T; X is n x in row-major, W out x in, Z n x out.
void affine_forward(const double* x, std::size_t n, std::size_t in, std::size_t out,
                    const double* w, const double* b, double* z) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(n),
                static_cast<int>(out), static_cast<int>(in), 1.0, x, static_cast<int>(in), w,
                static_cast<int>(in), 0.0, z, static_cast<int>(out));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out; ++j) z[i * out + j] += b[j];
}

void prelu_forward(const double* z, std::size_t n, std::size_t out, const double* alpha,
                   double* a) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out; ++j) {
            const double v = z[i * out + j];
            a[i * out + j] = v >= 0.0 ? v : alpha[j] * v;
        }
}

} // namespace

void Network::forward_batch(const double* x, std::size_t n, double* y) const {
    if (n == 0) return;
    const std::size_t depth = layers();
    std::size_t widest = cfg_.input_dim;
    for (std::size_t l = 0; l < depth; ++l) widest = std::max(widest, layer_out(l));
    std::vector<double> bufa(n * widest), bufb(n * widest);

    const double* cur = x;
    double* next = bufa.data();
    double* other = bufb.data();
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t in = layer_in(l), out = layer_out(l);
        double* z = (l + 1 == depth) ? y : next;
        affine_forward(cur, n, in, out, params_.data() + w_off_[l], params_.data() + b_off_[l], z);
        if (l + 1 < depth) {
            prelu_forward(z, n, out, params_.data() + a_off_[l], z);
            cur = z;
            std::swap(next, other);
        }
    }
}

std::vector<double> Network::forward(std::span<const double> feature) const {
    if (feature.size() != cfg_.input_dim)
        throw Error(ErrorCode::DimensionMismatch, "feature length does not match the input layer");
    std::vector<double> y(cfg_.output_dim);
    forward_batch(feature.data(), 1, y.data());
    return y;
}

Network::BackwardResult Network::backward_batch(const double* x, const double* t,
                                                std::size_t n) const {
    const std::size_t depth = layers();
    const std::size_t out_dim = cfg_.output_dim;

    // pre-activations per layer, kept for the backward sweep
    std::vector<std::vector<double>> z(depth);
    std::vector<double> a_prev, a_cur;
    for (std::size_t l = 0; l < depth; ++l) z[l].resize(n * layer_out(l));

    const double* cur = x;
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t in = layer_in(l), out = layer_out(l);
        affine_forward(cur, n, in, out, params_.data() + w_off_[l], params_.data() + b_off_[l],
                       z[l].data());
        if (l + 1 < depth) {
            a_cur.resize(n * out);
            prelu_forward(z[l].data(), n, out, params_.data() + a_off_[l], a_cur.data());
            std::swap(a_prev, a_cur);
            cur = a_prev.data();
        }
    }

    BackwardResult res;
    res.grad.assign(params_.size(), 0.0);

    // loss = mean over samples and outputs of (y - t)^2
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(out_dim));
    std::vector<double> dz(n * out_dim);
    double loss = 0.0;
    for (std::size_t k = 0; k < n * out_dim; ++k) {
        const double diff = z[depth - 1][k] - t[k];
        loss += diff * diff;
        dz[k] = 2.0 * diff * norm;
    }
    res.loss = loss * norm;

    std::vector<double> da, a_input;
    for (std::size_t l = depth; l-- > 0;) {
        const std::size_t in = layer_in(l), out = layer_out(l);

        // activation feeding this layer
        const double* a_in;
        if (l == 0) {
            a_in = x;
        } else {
            a_input.resize(n * in);
            prelu_forward(z[l - 1].data(), n, in, params_.data() + a_off_[l - 1], a_input.data());
            a_in = a_input.data();
        }

        // dW = dZ^T A_in, db = column sums of dZ
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(out),
                    static_cast<int>(in), static_cast<int>(n), 1.0, dz.data(),
                    static_cast<int>(out), a_in, static_cast<int>(in), 0.0,
                    res.grad.data() + w_off_[l], static_cast<int>(in));
        double* db = res.grad.data() + b_off_[l];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < out; ++j) db[j] += dz[i * out + j];

        if (l == 0) break;

        // dA over the previous activation, then through PReLU
        da.resize(n * in);
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(n),
                    static_cast<int>(in), static_cast<int>(out), 1.0, dz.data(),
                    static_cast<int>(out), params_.data() + w_off_[l], static_cast<int>(in), 0.0,
                    da.data(), static_cast<int>(in));

        const double* zp = z[l - 1].data();
        const double* alpha = params_.data() + a_off_[l - 1];
        double* dalpha = res.grad.data() + a_off_[l - 1];
        dz.resize(n * in);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < in; ++j) {
                const double zv = zp[i * in + j];
                const double g = da[i * in + j];
                if (zv >= 0.0) {
                    dz[i * in + j] = g; // slope 1 on the positive branch, incl. exactly 0
                } else {
                    dz[i * in + j] = g * alpha[j];
                    dalpha[j] += g * zv;
                }
            }
    }
    return res;
}

Network::BackwardResult Network::backward(std::span<const double> feature,
                                          std::span<const double> target) const {
    if (feature.size() != cfg_.input_dim || target.size() != cfg_.output_dim)
        throw Error(ErrorCode::DimensionMismatch, "backward shape mismatch");
    return backward_batch(feature.data(), target.data(), 1);
}

void TrainConfig::validate() const {
    if (!(initial_lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
    if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "drop factor must be in (0, 1]");
    if (lr_drop_period_epochs == 0 || batch_size == 0 || max_epochs == 0)
        throw Error(ErrorCode::InvalidArgument, "epoch/batch settings must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "validation fraction must be in [0, 1)");
}

double learning_rate_for_epoch(const TrainConfig& cfg, std::size_t epoch) {
    const auto drops = static_cast<double>(epoch / cfg.lr_drop_period_epochs);
    return cfg.initial_lr * std::pow(cfg.lr_drop_factor, drops);
}

Checkpoint train(Network& net, const std::vector<Sample>& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
    openblas_set_num_threads(1); // bit-deterministic updates

    const std::size_t in_dim = net.config().input_dim;
    const std::size_t out_dim = net.config().output_dim;
    for (const Sample& s : data)
        if (s.feature.size() != in_dim || s.target.size() != out_dim)
            throw Error(ErrorCode::DimensionMismatch, "sample does not match the network shape");

    // fixed seeded split: leading slice of one shuffle is the validation set
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    std::size_t val_count = static_cast<std::size_t>(
        std::llround(cfg.validation_fraction * static_cast<double>(data.size())));
    val_count = std::min(val_count, data.size() - 1);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + val_count);
    std::vector<std::size_t> train_idx(order.begin() + val_count, order.end());

    auto gather = [&](const std::vector<std::size_t>& idx, std::size_t from, std::size_t count,
                      std::vector<double>& xs, std::vector<double>& ts) {
        xs.resize(count * in_dim);
        ts.resize(count * out_dim);
        for (std::size_t r = 0; r < count; ++r) {
            const Sample& s = data[idx[from + r]];
            std::memcpy(xs.data() + r * in_dim, s.feature.data(), in_dim * sizeof(double));
            std::memcpy(ts.data() + r * out_dim, s.target.data(), out_dim * sizeof(double));
        }
    };

    std::vector<double> xs, ts, ys;
    auto validation_loss = [&]() {
        if (val_idx.empty()) return std::numeric_limits<double>::quiet_NaN();
        gather(val_idx, 0, val_idx.size(), xs, ts);
        ys.resize(val_idx.size() * out_dim);
        net.forward_batch(xs.data(), val_idx.size(), ys.data());
        double loss = 0.0;
        for (std::size_t k = 0; k < ys.size(); ++k) {
            const double d = ys[k] - ts[k];
            loss += d * d;
        }
        return loss / static_cast<double>(ys.size());
    };

    // Adam state
    std::vector<double> m(net.parameters().size(), 0.0), v(net.parameters().size(), 0.0);
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    Checkpoint best;
    best.config = net.config();
    double best_metric = std::numeric_limits<double>::infinity();

    auto snapshot = [&](std::size_t epoch) {
        best.parameters.assign(net.parameters().begin(), net.parameters().end());
        best.adam_m = m;
        best.adam_v = v;
        best.adam_step = net.step();
        best.epoch = epoch;
    };

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = learning_rate_for_epoch(cfg, epoch);
        for (std::size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[rng.uniform_int(i)]);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t from = 0; from < train_idx.size(); from += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, train_idx.size() - from);
            gather(train_idx, from, count, xs, ts);
            Network::BackwardResult back = net.backward_batch(xs.data(), ts.data(), count);
            if (!std::isfinite(back.loss)) {
                Checkpoint diag = best;
                diag.parameters.assign(net.parameters().begin(), net.parameters().end());
                diag.adam_m = m;
                diag.adam_v = v;
                diag.adam_step = net.step();
                diag.epoch = epoch;
                throw TrainAbort("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batches),
                                 std::move(diag));
            }
            epoch_loss += back.loss;
            ++batches;

            net.set_step(net.step() + 1);
            const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(net.step()));
            const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(net.step()));
            double* p = net.parameters().data();
            const double* g = back.grad.data();
            for (std::size_t k = 0; k < net.parameters().size(); ++k) {
                m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
                v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + kEps);
            }
        }

        best.train_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1)));
        // with no held-out slice the train loss stands in for validation
        const double val = val_idx.empty() ? best.train_loss.back() : validation_loss();
        best.val_loss.push_back(val);
        const double metric = val;
        if (metric < best_metric) {
            best_metric = metric;
            snapshot(epoch);
        }
        log::info("epoch %zu: train %.6g val %.6g lr %.3g", epoch, best.train_loss.back(), val, lr);
    }

    if (best.parameters.empty()) snapshot(cfg.max_epochs - 1);
    std::copy(best.parameters.begin(), best.parameters.end(), net.parameters().begin());
    net.set_step(best.adam_step);
    return best;
}

namespace {

void write_bytes(std::FILE* f, const void* p, std::size_t n, const std::string& path) {
    if (std::fwrite(p, 1, n, f) != n)
        throw Error(ErrorCode::IoError, "short write to checkpoint " + path);
}

void read_bytes(std::FILE* f, void* p, std::size_t n, const std::string& path) {
    if (std::fread(p, 1, n, f) != n)
        throw Error(ErrorCode::IoError, "short read from checkpoint " + path);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const std::size_t count = ckpt.config.parameter_count();
    if (ckpt.parameters.size() != count || ckpt.adam_m.size() != count ||
        ckpt.adam_v.size() != count)
        throw Error(ErrorCode::InvalidArgument, "checkpoint blobs do not match the config");
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error(ErrorCode::IoError, "cannot open checkpoint for writing: " + path);

    write_bytes(f.get(), "PRCD", 4, path);
    const std::uint32_t version = 1;
    write_bytes(f.get(), &version, sizeof version, path);

    std::vector<std::uint32_t> dims;
    dims.push_back(static_cast<std::uint32_t>(ckpt.config.input_dim));
    for (std::size_t w : ckpt.config.hidden) dims.push_back(static_cast<std::uint32_t>(w));
    dims.push_back(static_cast<std::uint32_t>(ckpt.config.output_dim));
    const std::uint32_t ndims = static_cast<std::uint32_t>(dims.size());
    write_bytes(f.get(), &ndims, sizeof ndims, path);
    write_bytes(f.get(), dims.data(), dims.size() * sizeof(std::uint32_t), path);

    write_bytes(f.get(), ckpt.parameters.data(), ckpt.parameters.size() * sizeof(double), path);
    write_bytes(f.get(), &ckpt.adam_step, sizeof ckpt.adam_step, path);
    write_bytes(f.get(), ckpt.adam_m.data(), ckpt.adam_m.size() * sizeof(double), path);
    write_bytes(f.get(), ckpt.adam_v.data(), ckpt.adam_v.size() * sizeof(double), path);

    io::json side;
    side["epoch"] = ckpt.epoch;
    side["train_loss"] = ckpt.train_loss;
    side["val_loss"] = ckpt.val_loss;
    side["prelu_init"] = ckpt.config.prelu_init;
    side["seed"] = ckpt.config.seed;
    std::ofstream sidecar(path + ".json");
    if (!sidecar) throw Error(ErrorCode::IoError, "cannot write checkpoint sidecar");
    sidecar << side.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error(ErrorCode::IoError, "cannot open checkpoint: " + path);

    char magic[4];
    read_bytes(f.get(), magic, 4, path);
    if (std::memcmp(magic, "PRCD", 4) != 0)
        throw Error(ErrorCode::IoError, "bad checkpoint magic in " + path);
    std::uint32_t version = 0;
    read_bytes(f.get(), &version, sizeof version, path);
    if (version != 1) throw Error(ErrorCode::IoError, "unsupported checkpoint version");

    std::uint32_t ndims = 0;
    read_bytes(f.get(), &ndims, sizeof ndims, path);
    if (ndims < 3 || ndims > 64) throw Error(ErrorCode::IoError, "implausible checkpoint dims");
    std::vector<std::uint32_t> dims(ndims);
    read_bytes(f.get(), dims.data(), ndims * sizeof(std::uint32_t), path);

    Checkpoint ckpt;
    ckpt.config.input_dim = dims.front();
    ckpt.config.output_dim = dims.back();
    ckpt.config.hidden.assign(dims.begin() + 1, dims.end() - 1);
    ckpt.config.validate();

    const std::size_t count = ckpt.config.parameter_count();
    ckpt.parameters.resize(count);
    read_bytes(f.get(), ckpt.parameters.data(), count * sizeof(double), path);
    read_bytes(f.get(), &ckpt.adam_step, sizeof ckpt.adam_step, path);
    ckpt.adam_m.resize(count);
    ckpt.adam_v.resize(count);
    read_bytes(f.get(), ckpt.adam_m.data(), count * sizeof(double), path);
    read_bytes(f.get(), ckpt.adam_v.data(), count * sizeof(double), path);

    std::ifstream sidecar(path + ".json");
    if (sidecar) {
        try {
            io::json side;
            sidecar >> side;
            ckpt.epoch = side.value("epoch", std::size_t{0});
            if (side.contains("train_loss"))
                ckpt.train_loss = side.at("train_loss").get<std::vector<double>>();
            if (side.contains("val_loss"))
                ckpt.val_loss = side.at("val_loss").get<std::vector<double>>();
            ckpt.config.prelu_init = side.value("prelu_init", ckpt.config.prelu_init);
            ckpt.config.seed = side.value("seed", ckpt.config.seed);
        } catch (const io::json::exception& e) {
            log::warn("ignoring bad checkpoint sidecar: %s", e.what());
        }
    }
    return ckpt;
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
    Network net = network_with_parameters(ckpt.config, ckpt.parameters);
    net.set_step(ckpt.adam_step);
    return net;
}

CovarianceMatrix assemble_covariance(std::span<const double> output, double power) {
    if (output.size() != kTargetDim)
        throw Error(ErrorCode::DimensionMismatch, "network output must have 6 entries");
    for (double v : output)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite network output");

    const Matrix raw = target_to_covariance(output);
    SymEig eig = sym_eig(raw);
    double total = 0.0;
    for (double& l : eig.values) {
        if (l < 0.0) l = 0.0;
        total += l;
    }
    const std::size_t m = raw.rows();
    if (total <= 0.0) { // nothing salvageable, fall back to uniform power
        log::debug("assemble_covariance: zero output repaired to uniform allocation");
        std::vector<double> uniform(m, power / static_cast<double>(m));
        return CovarianceMatrix(Matrix::diagonal(uniform));
    }
    const double scale = power / total;
    Matrix q(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                s += eig.vectors(i, k) * (eig.values[k] * scale) * eig.vectors(j, k);
            q(i, j) = q(j, i) = s;
        }
    return CovarianceMatrix(std::move(q));
}

} // namespace precoder
