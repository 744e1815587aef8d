#include "precoder/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "precoder/rng.hpp"

namespace precoder {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double dot_symmetric(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
    return s;
}

std::string format_params(std::span<const double> coords, std::size_t m) {
    std::ostringstream os;
    os << "lambda = [";
    for (std::size_t i = 0; i < m; ++i) os << (i ? ", " : "") << coords[i];
    os << "], theta = [";
    for (std::size_t i = m; i < coords.size(); ++i) os << (i > m ? ", " : "") << coords[i];
    os << "]";
    return os.str();
}

/// Evaluates a covariance objective at raw rotation coordinates
/// [lambda..., theta...]; coordinates must already be feasible.
class ParamEvaluator {
public:
    ParamEvaluator(const ObjectiveFn& objective, std::size_t m, double power)
        : objective_(objective), m_(m), power_(power), v_(m, m), q_(m, m) {
        scratch_.lambdas.resize(m);
        scratch_.thetas.resize(num_angles(m));
    }

    std::size_t dim() const { return m_ + num_angles(m_); }
    std::size_t m() const { return m_; }
    double power() const { return power_; }

    void project(std::span<double> coords) const {
        detail::project_feasible_inplace(coords.subspan(0, m_), power_);
    }

    double operator()(std::span<const double> coords) {
        for (std::size_t i = 0; i < m_; ++i) scratch_.lambdas[i] = coords[i];
        for (std::size_t i = 0; i < scratch_.thetas.size(); ++i) scratch_.thetas[i] = coords[m_ + i];
        detail::compose_covariance(scratch_, v_, q_);
        const double f = objective_(q_);
        if (std::isnan(f))
            throw Error(ErrorCode::NonFinite,
                        "objective returned NaN at " + format_params(coords, m_));
        ++evals_;
        return f;
    }

    const Matrix& covariance_at(std::span<const double> coords) {
        for (std::size_t i = 0; i < m_; ++i) scratch_.lambdas[i] = coords[i];
        for (std::size_t i = 0; i < scratch_.thetas.size(); ++i) scratch_.thetas[i] = coords[m_ + i];
        detail::compose_covariance(scratch_, v_, q_);
        return q_;
    }

    std::size_t evals() const { return evals_; }

private:
    const ObjectiveFn& objective_;
    std::size_t m_;
    double power_;
    RotationParams scratch_;
    Matrix v_, q_;
    std::size_t evals_ = 0;
};

struct AscentResult {
    std::vector<double> coords;
    double value = 0.0;
    std::size_t iterations = 0;
};

/// Projected-gradient ascent with central finite differences and a
/// backtracking (halving) line search. Stops when the objective gained less
/// than cfg.tol over the last 10 iterations.
AscentResult ascend(ParamEvaluator& eval, std::vector<double> coords, const SolverConfig& cfg) {
    const std::size_t n = eval.dim();
    eval.project(coords);
    double f = eval(coords);

    std::vector<double> grad(n), probe(n), cand(n), history;
    history.reserve(cfg.max_iters + 1);
    history.push_back(f);
    double step = cfg.grad_step;
    std::size_t it = 0;

    for (; it < cfg.max_iters; ++it) {
        double gnorm2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double h = cfg.fd_epsilon * (1.0 + std::fabs(coords[k]));
            probe = coords;
            probe[k] = coords[k] + h;
            eval.project(probe);
            const double fp = eval(probe);
            probe = coords;
            probe[k] = coords[k] - h;
            eval.project(probe);
            const double fm = eval(probe);
            grad[k] = (fp - fm) / (2.0 * h);
            gnorm2 += grad[k] * grad[k];
        }
        if (gnorm2 <= 1e-18) break; // flat to machine precision
        const double gnorm = std::sqrt(gnorm2);

        // backtracking along the normalized direction: alpha is a plain
        // coordinate-space displacement, so penalty-scale gradients cannot
        // catapult the iterate out of its basin
        double alpha = step;
        double best_f = f;
        double best_alpha = 0.0;
        bool armijo = false;
        for (int ls = 0; ls < 40 && alpha > 1e-14; ++ls, alpha *= 0.5) {
            for (std::size_t k = 0; k < n; ++k) cand[k] = coords[k] + (alpha / gnorm) * grad[k];
            eval.project(cand);
            const double fc = eval(cand);
            if (fc > best_f) {
                best_f = fc;
                best_alpha = alpha;
            }
            if (fc >= f + 1e-4 * alpha * gnorm) {
                armijo = true;
                break;
            }
        }
        if (best_alpha == 0.0) break; // no uphill point found at any step size

        for (std::size_t k = 0; k < n; ++k) coords[k] += (best_alpha / gnorm) * grad[k];
        eval.project(coords);
        f = best_f;
        step = armijo ? std::min(best_alpha * 2.0, 100.0) : best_alpha;
        history.push_back(f);

        const std::size_t lag = 10;
        if (history.size() > lag && f - history[history.size() - 1 - lag] < cfg.tol) {
            ++it;
            break;
        }
    }
    return {std::move(coords), f, it};
}

std::vector<double> to_coords(const RotationParams& r) {
    std::vector<double> coords(r.lambdas);
    coords.insert(coords.end(), r.thetas.begin(), r.thetas.end());
    return coords;
}

std::vector<double> coords_of(const CovarianceMatrix& q) {
    return to_coords(covariance_to_params(q));
}

/// Random initialization: eigenvalues on a random ray inside the power
/// simplex, angles uniform in (-pi, pi). A third of the draws concentrate
/// the power on one rotated direction; spread-out starts sit near a saddle
/// of beamforming-type objectives where the angle gradient vanishes.
std::vector<double> random_coords(Rng& rng, std::size_t m, double power) {
    std::vector<double> coords(m + num_angles(m));
    if (rng.uniform() < 1.0 / 3.0) {
        const std::size_t hot = rng.uniform_int(m);
        for (std::size_t i = 0; i < m; ++i) coords[i] = 0.0;
        coords[hot] = power * rng.uniform(0.5, 1.0);
    } else {
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            coords[i] = -std::log(1.0 - rng.uniform());
            sum += coords[i];
        }
        const double scale = power * rng.uniform() / (sum > 0.0 ? sum : 1.0);
        for (std::size_t i = 0; i < m; ++i) coords[i] *= scale;
    }
    for (std::size_t i = m; i < coords.size(); ++i)
        coords[i] = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return coords;
}

struct MultiStartResult {
    std::vector<double> coords;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t starts = 0;
};

/// Best-of ascent over the given deterministic inits padded with seeded
/// random draws up to cfg.restarts. Ordered compare keeps the result
/// deterministic.
MultiStartResult multi_start(ParamEvaluator& eval, std::vector<std::vector<double>> inits,
                             const SolverConfig& cfg,
                             const std::function<double(std::span<const double>)>& score = {}) {
    Rng rng(derive_seed(cfg.seed, 0x726573));
    while (inits.size() < cfg.restarts)
        inits.push_back(random_coords(rng, eval.m(), eval.power()));
    if (inits.size() > cfg.restarts) inits.resize(std::max<std::size_t>(cfg.restarts, 1));

    MultiStartResult best;
    bool first = true;
    for (auto& init : inits) {
        AscentResult res = ascend(eval, std::move(init), cfg);
        const double value = score ? score(res.coords) : res.value;
        best.iterations += res.iterations;
        ++best.starts;
        if (first || value > best.value) {
            best.coords = std::move(res.coords);
            best.value = value;
            first = false;
        }
    }
    return best;
}

} // namespace

void SolverConfig::validate() const {
    if (max_iters == 0 || restarts == 0)
        throw Error(ErrorCode::InvalidArgument, "solver iteration/restart counts must be positive");
    if (!(grad_step > 0.0) || !(fd_epsilon > 0.0) || !(tol > 0.0) || penalty_weight < 0.0)
        throw Error(ErrorCode::InvalidArgument, "solver steps and tolerances must be positive");
}

const char* to_string(MulticastCase c) {
    switch (c) {
    case MulticastCase::Case1: return "Case1";
    case MulticastCase::Case2: return "Case2";
    case MulticastCase::Case3: return "Case3";
    }
    return "?";
}

SolveReport maximize_over_rotation(const ObjectiveFn& objective, const ChannelPair& ch,
                                   const SolverConfig& cfg, const RotationParams& init) {
    cfg.validate();
    const auto start = Clock::now();
    const std::size_t m = ch.tx_antennas();
    if (init.dim() != m || init.thetas.size() != num_angles(m))
        throw Error(ErrorCode::DimensionMismatch, "initialization does not match channel dims");

    ParamEvaluator eval(objective, m, ch.power);
    MultiStartResult best = multi_start(eval, {to_coords(init)}, cfg);

    SolveReport report;
    report.q_opt = CovarianceMatrix(eval.covariance_at(best.coords));
    report.objective = objective(report.q_opt.matrix());
    report.iterations = best.iterations;
    report.restarts_used = best.starts;
    report.wall_time = seconds_since(start);
    return report;
}

SolveReport solve_swipt(const ChannelPair& ch, double q_level, const SolverConfig& cfg) {
    cfg.validate();
    if (!(q_level >= 0.0 && q_level <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "EH level must be in [0, 1]");
    const auto start = Clock::now();

    const WaterfillResult wit = solve_wit(ch);
    const EhResult eh = solve_eh(ch);
    EnergyBounds bounds{harvested_energy(ch, wit.q_opt), eh.energy};
    if (bounds.e_min > bounds.e_max) bounds.e_min = bounds.e_max;
    const double e_bar = bounds.threshold(q_level);

    SolveReport report;
    if (q_level <= 0.0) { // degenerates to the plain rate problem
        report.q_opt = wit.q_opt;
        report.objective = wit.rate;
        report.wall_time = seconds_since(start);
        return report;
    }
    if (q_level >= 1.0) { // degenerates to the plain harvesting problem
        report.q_opt = eh.q_opt;
        report.objective = rate_wit(ch, eh.q_opt, 1);
        report.constraint_violation = std::max(0.0, e_bar - eh.energy);
        report.wall_time = seconds_since(start);
        return report;
    }

    const std::size_t m = ch.tx_antennas();
    const Matrix g1 = ch.h1.transposed() * ch.h1;
    const Matrix g2 = ch.h2.transposed() * ch.h2;
    Matrix work(m, m);
    const Matrix& q2 = eh.q_opt.matrix();

    double mu = cfg.penalty_weight;
    ObjectiveFn penalized = [&](const Matrix& q) {
        const double rate = logdet_rate_gram(g1, q, work);
        const double energy = dot_symmetric(g2, q);
        const double gap = e_bar - energy;
        return gap > 0.0 ? rate - mu * gap * gap : rate;
    };

    ParamEvaluator eval(penalized, m, ch.power);
    std::vector<std::vector<double>> inits;
    inits.push_back(coords_of(eh.q_opt)); // always feasible for the energy constraint
    inits.push_back(coords_of(wit.q_opt));
    Rng rng(derive_seed(cfg.seed, 0x737769));
    while (inits.size() < cfg.restarts) inits.push_back(random_coords(rng, m, ch.power));
    if (inits.size() > cfg.restarts) inits.resize(std::max<std::size_t>(cfg.restarts, 1));

    Matrix best_q;
    double best_rate = 0.0;
    std::size_t iterations = 0;
    bool first = true;
    for (auto& init : inits) {
        std::vector<double> coords = std::move(init);
        // increasing penalty rounds, x10 each, warm-started; once the iterate
        // is feasible a higher penalty changes nothing, so stop early
        mu = cfg.penalty_weight;
        for (int round = 0; round < 5; ++round, mu *= 10.0) {
            AscentResult res = ascend(eval, std::move(coords), cfg);
            coords = std::move(res.coords);
            iterations += res.iterations;
            if (dot_symmetric(g2, eval.covariance_at(coords)) >= e_bar) break;
        }
        Matrix q = eval.covariance_at(coords);
        double energy = dot_symmetric(g2, q);
        if (energy < e_bar) {
            // energy is linear in Q: blend toward the harvesting optimum just
            // enough to reach the threshold
            const double span = eh.energy - energy;
            const double t = span > 0.0 ? std::min(1.0, (e_bar - energy) / span) : 1.0;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    q(i, j) = (1.0 - t) * q(i, j) + t * q2(i, j);
        }
        const double rate = logdet_rate_gram(g1, q, work);
        if (first || rate > best_rate) {
            best_q = q;
            best_rate = rate;
            first = false;
        }
    }

    report.q_opt = CovarianceMatrix(std::move(best_q));
    report.objective = rate_wit(ch, report.q_opt, 1);
    report.constraint_violation = std::max(0.0, e_bar - harvested_energy(ch, report.q_opt));
    report.iterations = iterations;
    report.restarts_used = inits.size();
    report.wall_time = seconds_since(start);
    return report;
}

SolveReport solve_secrecy(const ChannelPair& ch, const SolverConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    const std::size_t m = ch.tx_antennas();
    const Matrix g1 = ch.h1.transposed() * ch.h1;
    const Matrix g2 = ch.h2.transposed() * ch.h2;
    Matrix work(m, m);

    ObjectiveFn objective = [&](const Matrix& q) {
        return logdet_rate_gram(g1, q, work) - logdet_rate_gram(g2, q, work);
    };

    const WaterfillResult wit = solve_wit(ch);
    ParamEvaluator eval(objective, m, ch.power);
    std::vector<std::vector<double>> inits;
    inits.push_back(coords_of(wit.q_opt));
    inits.push_back(std::vector<double>(m + num_angles(m), 0.0)); // zero covariance
    Rng rng(derive_seed(cfg.seed, 0x736563));
    while (inits.size() < cfg.restarts) inits.push_back(random_coords(rng, m, ch.power));

    MultiStartResult best = multi_start(eval, std::move(inits), cfg);

    SolveReport report;
    if (best.value <= 0.0) { // silent transmitter beats any leaky precoder
        report.q_opt = CovarianceMatrix(Matrix(m, m));
        report.objective = 0.0;
    } else {
        report.q_opt = CovarianceMatrix(eval.covariance_at(best.coords));
        report.objective = secrecy_rate(ch, report.q_opt);
    }
    report.iterations = best.iterations;
    report.restarts_used = best.starts;
    report.wall_time = seconds_since(start);
    return report;
}

SolveReport solve_multicast(const ChannelPair& ch, const SolverConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    const std::size_t m = ch.tx_antennas();

    const WaterfillResult opt1 = solve_wit_matrix(ch.h1, ch.power);
    const WaterfillResult opt2 = solve_wit_matrix(ch.h2, ch.power);

    SolveReport report;
    if (rate_wit(ch, opt1.q_opt, 1) <= rate_wit(ch, opt1.q_opt, 2)) {
        report.q_opt = opt1.q_opt;
        report.objective = multicast_rate(ch, opt1.q_opt);
        report.case_tag = MulticastCase::Case1;
        report.wall_time = seconds_since(start);
        return report;
    }
    if (rate_wit(ch, opt2.q_opt, 1) >= rate_wit(ch, opt2.q_opt, 2)) {
        report.q_opt = opt2.q_opt;
        report.objective = multicast_rate(ch, opt2.q_opt);
        report.case_tag = MulticastCase::Case2;
        report.wall_time = seconds_since(start);
        return report;
    }

    const Matrix g1 = ch.h1.transposed() * ch.h1;
    const Matrix g2 = ch.h2.transposed() * ch.h2;
    Matrix work(m, m);
    constexpr double kBeta = 50.0; // soft-min sharpness

    ObjectiveFn soft_min = [&](const Matrix& q) {
        const double r1 = logdet_rate_gram(g1, q, work);
        const double r2 = logdet_rate_gram(g2, q, work);
        const double lo = std::min(r1, r2);
        return lo - std::log1p(std::exp(-kBeta * std::fabs(r1 - r2))) / kBeta;
    };
    ObjectiveFn true_min = [&](const Matrix& q) {
        return std::min(logdet_rate_gram(g1, q, work), logdet_rate_gram(g2, q, work));
    };

    ParamEvaluator eval(soft_min, m, ch.power);
    std::vector<std::vector<double>> inits;
    inits.push_back(coords_of(opt1.q_opt));
    inits.push_back(coords_of(opt2.q_opt));
    {
        Matrix blend(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                blend(i, j) = 0.5 * (opt1.q_opt.matrix()(i, j) + opt2.q_opt.matrix()(i, j));
        inits.push_back(coords_of(CovarianceMatrix(std::move(blend))));
    }
    Rng rng(derive_seed(cfg.seed, 0x6d6361));
    while (inits.size() < cfg.restarts) inits.push_back(random_coords(rng, m, ch.power));

    // restarts ranked by the true min-rate of the point they reach
    MultiStartResult best = multi_start(
        eval, std::move(inits), cfg,
        [&](std::span<const double> coords) { return true_min(eval.covariance_at(coords)); });

    report.q_opt = CovarianceMatrix(eval.covariance_at(best.coords));
    report.objective = multicast_rate(ch, report.q_opt);
    report.case_tag = MulticastCase::Case3;
    report.iterations = best.iterations;
    report.restarts_used = best.starts;
    report.wall_time = seconds_since(start);
    return report;
}

SolveReport solve_mode(const ChannelPair& ch, const Mode& mode, const SolverConfig& cfg) {
    switch (mode.kind()) {
    case ObjectiveKind::Wit: {
        const auto start = Clock::now();
        const WaterfillResult wit = solve_wit(ch);
        SolveReport report;
        report.q_opt = wit.q_opt;
        report.objective = wit.rate;
        report.wall_time = seconds_since(start);
        return report;
    }
    case ObjectiveKind::Eh: {
        const auto start = Clock::now();
        const EhResult eh = solve_eh(ch);
        SolveReport report;
        report.q_opt = eh.q_opt;
        report.objective = eh.energy;
        report.wall_time = seconds_since(start);
        return report;
    }
    case ObjectiveKind::Swipt: return solve_swipt(ch, *mode.eh_level(), cfg);
    case ObjectiveKind::Secrecy: return solve_secrecy(ch, cfg);
    case ObjectiveKind::Multicast: return solve_multicast(ch, cfg);
    }
    throw Error(ErrorCode::InvalidArgument, "unhandled mode");
}

} // namespace precoder
