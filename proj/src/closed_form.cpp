#include "precoder/closed_form.hpp"

#include <cmath>

namespace precoder {

WaterfillResult solve_wit_matrix(const Matrix& h, double power) {
    const std::size_t m = h.cols();
    const Svd dec = svd(h);

    // Inverse channel gains 1/sigma_i^2 over directions that actually carry
    // signal; singular values below the relative cutoff are treated as zero
    // so no power leaks onto null directions.
    const double smax = dec.singulars.empty() ? 0.0 : dec.singulars.front();
    const double cutoff = smax * 1e-12;
    std::vector<double> inv_gain;
    for (double s : dec.singulars)
        if (s > cutoff && s > 0.0) inv_gain.push_back(1.0 / (s * s));

    WaterfillResult out;
    if (inv_gain.empty()) { // zero channel: rate is 0 for every Q
        out.q_opt = CovarianceMatrix(Matrix(m, m));
        return out;
    }

    // Exact breakpoint search: largest active set whose common water level
    // stays above its weakest inverse gain.
    std::size_t active = 1;
    double level = 0.0;
    for (std::size_t k = inv_gain.size(); k >= 1; --k) {
        double sum_inv = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum_inv += inv_gain[i];
        const double mu = (power + sum_inv) / static_cast<double>(k);
        if (mu >= inv_gain[k - 1]) {
            active = k;
            level = mu;
            break;
        }
    }

    std::vector<double> alloc(m, 0.0);
    double rate = 0.0;
    for (std::size_t i = 0; i < active; ++i) {
        alloc[i] = level - inv_gain[i];
        rate += 0.5 * std::log2(level / inv_gain[i]);
    }

    // Q = A diag(alloc) A^T, A = right-singular vectors (rows of Vt).
    Matrix q(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < active; ++k) s += dec.vt(k, i) * alloc[k] * dec.vt(k, j);
            q(i, j) = s;
        }
    // exact symmetry for downstream validation
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) q(i, j) = q(j, i) = 0.5 * (q(i, j) + q(j, i));

    out.q_opt = CovarianceMatrix(std::move(q));
    out.rate = rate;
    out.water_level = level;
    return out;
}

WaterfillResult solve_wit(const ChannelPair& ch) { return solve_wit_matrix(ch.h1, ch.power); }

EhResult solve_eh(const ChannelPair& ch) {
    const std::size_t m = ch.tx_antennas();
    const Svd dec = svd(ch.h2);
    const double smax = dec.singulars.empty() ? 0.0 : dec.singulars.front();

    EhResult out;
    if (smax <= 0.0) { // degenerate channel: any direction harvests nothing
        Matrix q(m, m);
        q(0, 0) = ch.power;
        out.q_opt = CovarianceMatrix(std::move(q));
        out.energy = 0.0;
        return out;
    }

    Matrix q(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) q(i, j) = ch.power * dec.vt(0, i) * dec.vt(0, j);
    out.q_opt = CovarianceMatrix(std::move(q));
    out.energy = kEhConversionRate * ch.power * smax * smax;
    return out;
}

EnergyBounds energy_bounds(const ChannelPair& ch) {
    const WaterfillResult wit = solve_wit(ch);
    const EhResult eh = solve_eh(ch);
    EnergyBounds bounds;
    bounds.e_min = harvested_energy(ch, wit.q_opt);
    bounds.e_max = eh.energy;
    if (bounds.e_min > bounds.e_max) bounds.e_min = bounds.e_max; // roundoff tie
    return bounds;
}

} // namespace precoder
