#include "precoder/channel.hpp"

#include <cmath>

namespace precoder {

ChannelPair::ChannelPair(Matrix h1_in, Matrix h2_in, double power_in)
    : h1(std::move(h1_in)), h2(std::move(h2_in)), power(power_in) {
    if (h1.rows() < 1 || h2.rows() < 1 || h1.cols() < 1)
        throw Error(ErrorCode::InvalidArgument, "channel needs at least one antenna per node");
    if (h1.cols() != h2.cols())
        throw Error(ErrorCode::DimensionMismatch, "channels disagree on transmit antenna count");
    if (!(power > 0.0)) throw Error(ErrorCode::InvalidArgument, "power budget must be positive");
    h1.require_finite("channel H1");
    h2.require_finite("channel H2");
}

CovarianceMatrix::CovarianceMatrix(Matrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols())
        throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
    q_.require_finite("covariance");
    const double tol = 1e-9 * (1.0 + q_.frobenius_norm());
    for (std::size_t i = 0; i < q_.rows(); ++i)
        for (std::size_t j = i + 1; j < q_.cols(); ++j)
            if (std::fabs(q_(i, j) - q_(j, i)) > tol)
                throw Error(ErrorCode::NonSymmetric, "covariance is not symmetric");
}

void CovarianceMatrix::validate(double power_budget) const {
    if (q_.empty()) throw Error(ErrorCode::InvalidArgument, "empty covariance");
    const auto eig = sym_eig(q_);
    if (eig.values.back() < -1e-9)
        throw Error(ErrorCode::NotPSD, "covariance has negative eigenvalue " +
                                           std::to_string(eig.values.back()));
    if (trace() > power_budget * (1.0 + 1e-9))
        throw Error(ErrorCode::InvalidArgument, "covariance trace exceeds power budget");
}

Mode Mode::from_index(int index) {
    if (index < 1 || index > kCount)
        throw Error(ErrorCode::InvalidArgument, "mode index must be in 1..13");
    return Mode(index);
}

Mode Mode::from_name(const std::string& name) {
    if (name.size() >= 2 && (name[0] == 'M' || name[0] == 'm')) {
        try {
            return from_index(std::stoi(name.substr(1)));
        } catch (const std::invalid_argument&) {
        } catch (const std::out_of_range&) {
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown mode name: " + name);
}

std::optional<Mode> Mode::from_code(const std::array<int, 4>& code) {
    int value = 0;
    for (int bit : code) {
        if (bit != 0 && bit != 1) return std::nullopt;
        value = (value << 1) | bit;
    }
    if (value < 1 || value > kCount) return std::nullopt;
    return Mode(value);
}

std::vector<Mode> Mode::all() {
    std::vector<Mode> modes;
    modes.reserve(kCount);
    for (int k = 1; k <= kCount; ++k) modes.push_back(Mode(k));
    return modes;
}

std::array<int, 4> Mode::code() const noexcept {
    return {(index_ >> 3) & 1, (index_ >> 2) & 1, (index_ >> 1) & 1, index_ & 1};
}

std::string Mode::name() const { return "M" + std::to_string(index_); }

ObjectiveKind Mode::kind() const noexcept {
    if (index_ == 1) return ObjectiveKind::Wit;
    if (index_ == 2) return ObjectiveKind::Eh;
    if (index_ <= 11) return ObjectiveKind::Swipt;
    if (index_ == 12) return ObjectiveKind::Secrecy;
    return ObjectiveKind::Multicast;
}

std::optional<double> Mode::eh_level() const noexcept {
    if (index_ < 3 || index_ > 11) return std::nullopt;
    return (12 - index_) / 10.0; // M3 -> 90%, ..., M11 -> 10%
}

double rate_wit(const ChannelPair& ch, const CovarianceMatrix& q, int user) {
    if (user != 1 && user != 2) throw Error(ErrorCode::InvalidArgument, "user must be 1 or 2");
    return logdet_rate(user == 1 ? ch.h1 : ch.h2, q.matrix());
}

double harvested_energy(const ChannelPair& ch, const CovarianceMatrix& q) {
    const Matrix& h2 = ch.h2;
    const Matrix& qm = q.matrix();
    if (h2.cols() != qm.rows() || qm.rows() != qm.cols())
        throw Error(ErrorCode::DimensionMismatch, "harvested_energy shape mismatch");
    // tr(H2 Q H2^T) = sum_{i,k,l} h2(i,k) q(k,l) h2(i,l)
    double acc = 0.0;
    for (std::size_t i = 0; i < h2.rows(); ++i)
        for (std::size_t k = 0; k < qm.rows(); ++k) {
            double inner = 0.0;
            for (std::size_t l = 0; l < qm.cols(); ++l) inner += qm(k, l) * h2(i, l);
            acc += h2(i, k) * inner;
        }
    const double e = kEhConversionRate * acc;
    return e > 0.0 ? e : 0.0;
}

double secrecy_rate(const ChannelPair& ch, const CovarianceMatrix& q) {
    return rate_wit(ch, q, 1) - rate_wit(ch, q, 2);
}

double multicast_rate(const ChannelPair& ch, const CovarianceMatrix& q) {
    return std::min(rate_wit(ch, q, 1), rate_wit(ch, q, 2));
}

std::vector<double> apply_precoder(const Matrix& v, std::span<const double> lambda,
                                   std::span<const double> s) {
    if (v.cols() != lambda.size() || v.cols() != s.size())
        throw Error(ErrorCode::DimensionMismatch, "apply_precoder shape mismatch");
    for (double l : lambda)
        if (l < 0.0) throw Error(ErrorCode::NegativePower, "negative power allocation");
    std::vector<double> scaled(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) scaled[i] = std::sqrt(lambda[i]) * s[i];
    return matvec(v, scaled);
}

} // namespace precoder
