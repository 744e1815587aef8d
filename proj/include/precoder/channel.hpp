#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "precoder/matrix.hpp"
#include "precoder/numerics.hpp"

namespace precoder {

/// RF-to-DC conversion rate of the harvesting user; fixed to 1 throughout.
inline constexpr double kEhConversionRate = 1.0;

/// Two-user downlink: H1 (n1 x m) to the information user, H2 (n2 x m) to the
/// second user, total transmit power budget in watts.
struct ChannelPair {
    Matrix h1;
    Matrix h2;
    double power = 0.0;

    ChannelPair() = default;
    ChannelPair(Matrix h1_in, Matrix h2_in, double power_in);

    std::size_t tx_antennas() const noexcept { return h1.cols(); }
    std::size_t rx1_antennas() const noexcept { return h1.rows(); }
    std::size_t rx2_antennas() const noexcept { return h2.rows(); }
};

/// Symmetric PSD transmit covariance with trace bounded by the power budget.
/// Construction checks shape and symmetry; `validate` runs the full
/// PSD/trace check (eigendecomposition) and throws on violation.
class CovarianceMatrix {
public:
    CovarianceMatrix() = default;
    explicit CovarianceMatrix(Matrix q);

    const Matrix& matrix() const noexcept { return q_; }
    std::size_t dim() const noexcept { return q_.rows(); }
    double trace() const { return q_.trace(); }

    void validate(double power_budget) const;

private:
    Matrix q_;
};

enum class ObjectiveKind { Wit, Eh, Swipt, Secrecy, Multicast };

/// One of the thirteen operating modes: M1 (WIT), M2 (EH), M3..M11 (SWIPT at
/// EH levels 90%..10%), M12 (secrecy), M13 (multicast). The 4-bit code is the
/// binary expansion of the index, MSB first.
class Mode {
public:
    static constexpr int kCount = 13;

    static Mode from_index(int index);
    static Mode from_name(const std::string& name); // "M1".."M13"
    static std::optional<Mode> from_code(const std::array<int, 4>& code);
    static std::vector<Mode> all();

    int index() const noexcept { return index_; }
    std::array<int, 4> code() const noexcept;
    std::string name() const;
    ObjectiveKind kind() const noexcept;
    /// Normalized EH level for SWIPT modes (M3..M11), empty otherwise.
    std::optional<double> eh_level() const noexcept;

    bool operator==(const Mode& other) const noexcept { return index_ == other.index_; }

private:
    explicit Mode(int index) : index_(index) {}
    int index_;
};

/// Harvested-energy interval [E_min, E_max] anchoring the SWIPT thresholds.
struct EnergyBounds {
    double e_min = 0.0;
    double e_max = 0.0;

    double threshold(double q_level) const { return e_min + q_level * (e_max - e_min); }
};

/// 0.5 log2 |I + H_u Q H_u^T| for user 1 or 2.
double rate_wit(const ChannelPair& ch, const CovarianceMatrix& q, int user);

/// tr(H2 Q H2^T), watts (conversion rate 1).
double harvested_energy(const ChannelPair& ch, const CovarianceMatrix& q);

/// rate_wit(user 1) - rate_wit(user 2); negative for a poor Q.
double secrecy_rate(const ChannelPair& ch, const CovarianceMatrix& q);

/// min of the two user rates.
double multicast_rate(const ChannelPair& ch, const CovarianceMatrix& q);

/// x = V diag(lambda)^{1/2} s.
std::vector<double> apply_precoder(const Matrix& v, std::span<const double> lambda,
                                   std::span<const double> s);

} // namespace precoder
