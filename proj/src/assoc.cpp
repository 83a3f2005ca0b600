#include "pfloc/assoc.hpp"

#include "pfloc/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pfloc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogFalseAlarm = std::log(kFalseAlarmDensity);
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Below this the scaled linear recursion may have lost the dominant terms.
constexpr double kUnderflowGuard = 1e-280;

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double log_gaussian(double z, double mean, double sigma) {
    const double u = (z - mean) / sigma;
    return -0.5 * u * u - std::log(sigma) - kLogSqrt2Pi;
}

void check_prediction(const PathPrediction& pred, const ModelParams& params) {
    if (pred.size() != params.path_count())
        throw DomainError(fmt::format("prediction has {} paths, model has {}", pred.size(), params.path_count()));
}

std::size_t detections(std::span<const std::size_t> a) {
    return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](std::size_t v) { return v != 0; }));
}

}  // namespace

void ModelParams::validate() const {
    if (sigma_deg.empty()) throw DomainError("model needs at least one path");
    for (double s : sigma_deg)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError(fmt::format("sigma {} must be positive", s));
    if (!(detect_prob >= 0.0 && detect_prob <= 1.0))
        throw DomainError(fmt::format("detection probability {} outside [0, 1]", detect_prob));
    if (!(mu_fa >= 0.0) || !std::isfinite(mu_fa))
        throw DomainError(fmt::format("false alarm mean {} must be >= 0", mu_fa));
}

ModelParams ModelParams::defaults_for(std::size_t path_count) {
    switch (path_count) {
        case 4: return {{0.5, 0.5, 2.0, 2.0}, 0.9, 2.0};
        case 2: return {{0.5, 0.5}, 0.9, 4.0};
        default: throw DomainError(fmt::format("no default model for K = {}", path_count));
    }
}

ObservationSet::ObservationSet(std::vector<double> doas) : z_(std::move(doas)) {
    for (std::size_t m = 0; m < z_.size(); ++m) {
        if (!(z_[m] >= kDoaMin && z_[m] < kDoaMax))
            throw DomainError(fmt::format("DOA {} deg outside [-90, 90)", z_[m]));
        if (m > 0 && z_[m] > z_[m - 1]) throw DomainError("observations must be sorted in descending order");
    }
}

ObservationSet ObservationSet::from_unsorted(std::vector<double> doas) {
    std::stable_sort(doas.begin(), doas.end(), std::greater<>{});
    return ObservationSet(std::move(doas));
}

bool PathPredictionEntry::possible() const { return std::isfinite(angle_deg); }

PathPrediction make_prediction(std::span<const double> angles_deg, double detect_prob) {
    PathPrediction pred;
    pred.reserve(angles_deg.size());
    for (double a : angles_deg) pred.push_back({a, std::isfinite(a) ? detect_prob : 0.0});
    return pred;
}

bool is_valid(std::span<const std::size_t> a, std::size_t observation_count) {
    std::size_t last = 0;
    bool ok = true;
    for (std::size_t v : a) {
        if (v > observation_count)
            throw DomainError(fmt::format("association entry {} exceeds M = {}", v, observation_count));
        if (v == 0) continue;
        if (v <= last) ok = false;
        last = std::max(last, v);
    }
    return ok;
}

std::uint64_t count_valid(std::size_t path_count, std::size_t observation_count) {
    auto choose = [](std::uint64_t n, std::uint64_t k) {
        std::uint64_t r = 1;
        for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    std::uint64_t total = 0;
    for (std::size_t c = 0; c <= std::min(path_count, observation_count); ++c)
        total += choose(path_count, c) * choose(observation_count, c);
    return total;
}

double path_likelihood(double z_deg, const PathPredictionEntry& pred, double sigma_deg) {
    if (!pred.possible()) throw DomainError("likelihood of an impossible path");
    if (!(sigma_deg > 0.0)) throw DomainError("sigma must be positive");
    return std::exp(log_gaussian(z_deg, pred.angle_deg, sigma_deg));
}

double conditional_pdf(const ObservationSet& z, const PathPrediction& pred, std::span<const std::size_t> a,
                       const ModelParams& params) {
    check_prediction(pred, params);
    if (a.size() != pred.size()) throw DomainError("association vector length differs from path count");
    if (!is_valid(a, z.size())) throw DomainError("invalid association vector");
    double value = std::pow(kFalseAlarmDensity, static_cast<double>(z.size()));
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] == 0) continue;
        if (!pred[k].possible()) return 0.0;
        value *= path_likelihood(z[a[k] - 1], pred[k], params.sigma_deg[k]) / kFalseAlarmDensity;
    }
    return value;
}

double association_prior(std::span<const std::size_t> a, std::size_t observation_count, const PathPrediction& pred,
                         const ModelParams& params) {
    check_prediction(pred, params);
    if (a.size() != pred.size()) throw DomainError("association vector length differs from path count");
    if (!is_valid(a, observation_count)) return 0.0;
    const std::size_t nd = detections(a);
    const double mu = params.mu_fa;
    const auto m = static_cast<double>(observation_count);
    const auto d = static_cast<double>(nd);
    // exp(-mu) mu^(M - |D|) |D|! / M!, in logs for large M.
    double log_value = -mu + std::lgamma(d + 1.0) - std::lgamma(m + 1.0);
    if (observation_count > nd) {
        if (mu == 0.0) return 0.0;
        log_value += (m - d) * std::log(mu);
    }
    double value = std::exp(log_value);
    for (std::size_t k = 0; k < a.size(); ++k) value *= a[k] != 0 ? pred[k].detect_prob : 1.0 - pred[k].detect_prob;
    return value;
}

double unnormalized_factor_r(const ObservationSet& z, const PathPrediction& pred, std::size_t k, std::size_t a_k,
                             const ModelParams& params) {
    check_prediction(pred, params);
    if (k >= pred.size()) throw DomainError(fmt::format("path index {} out of range", k));
    if (a_k > z.size()) throw DomainError(fmt::format("association {} exceeds M = {}", a_k, z.size()));
    const auto& p = pred[k];
    if (a_k == 0) return 1.0 - p.detect_prob;
    if (!p.possible() || p.detect_prob == 0.0) return 0.0;
    return p.detect_prob / params.mu_fa * path_likelihood(z[a_k - 1], p, params.sigma_deg[k]) / kFalseAlarmDensity;
}

double marginal_likelihood(const ObservationSet& z, const PathPrediction& pred, const ModelParams& params) {
    return std::exp(log_marginal_likelihood(z, pred, params));
}

double log_marginal_likelihood(const ObservationSet& z, const PathPrediction& pred, const ModelParams& params) {
    check_prediction(pred, params);
    LikelihoodWorkspace ws;
    return ws.log_marginal(z.values(), pred, params);
}

// Valid vectors map an increasing subsequence of paths onto an increasing
// subsequence of observations. The recursion runs over paths k with state
// (j = highest observation index used so far, c = detections so far):
//   miss:   (j, c) -> (j, c)       times 1 - d_k
//   detect: (j, c) -> (m, c + 1)   times t_km for every m > j
// where t_km = d_k f_k(z_m) / f_FA. At the end the c-detection total is
// weighted by c! mu^(-c). The detection terms are scaled by exp(-s) with
// s = max log t_km so the linear recursion stays in range; the scale is
// restored per detection count.
double LikelihoodWorkspace::log_marginal(std::span<const double> z, std::span<const PathPredictionEntry> pred,
                                         const ModelParams& params) {
    const std::size_t kk = pred.size();
    const std::size_t mm = z.size();
    const bool zero_clutter = params.mu_fa == 0.0;
    if (zero_clutter && mm > kk) return kNegInf;

    log_t_.assign(kk * mm, kNegInf);
    miss_.resize(kk);
    double scale = kNegInf;
    for (std::size_t k = 0; k < kk; ++k) {
        const auto& p = pred[k];
        miss_[k] = 1.0 - p.detect_prob;
        if (!p.possible() || p.detect_prob <= 0.0) continue;
        const double log_d = std::log(p.detect_prob) - kLogFalseAlarm;
        for (std::size_t m = 0; m < mm; ++m) {
            const double v = log_d + log_gaussian(z[m], p.angle_deg, params.sigma_deg[k]);
            log_t_[k * mm + m] = v;
            scale = std::max(scale, v);
        }
    }
    if (scale == kNegInf) scale = 0.0;

    const std::size_t width = kk + 1;  // detection count 0..K
    state_.assign((mm + 1) * width, 0.0);
    next_.resize(state_.size());
    prefix_.resize(width);
    state_[0] = 1.0;
    for (std::size_t k = 0; k < kk; ++k) {
        std::fill(prefix_.begin(), prefix_.end(), 0.0);
        for (std::size_t j = 0; j <= mm; ++j) {
            double* out = &next_[j * width];
            const double* in = &state_[j * width];
            for (std::size_t c = 0; c < width; ++c) out[c] = in[c] * miss_[k];
            if (j > 0) {
                const double t = std::exp(log_t_[k * mm + (j - 1)] - scale);
                if (t > 0.0)
                    for (std::size_t c = 0; c + 1 < width; ++c) out[c + 1] += prefix_[c] * t;
            }
            for (std::size_t c = 0; c < width; ++c) prefix_[c] += in[c];
        }
        std::swap(state_, next_);
    }

    const double log_mu = zero_clutter ? 0.0 : std::log(params.mu_fa);
    double result = kNegInf;
    double largest = 0.0;
    for (std::size_t c = 0; c <= std::min(kk, mm); ++c) {
        if (zero_clutter && c != mm) continue;
        double total = 0.0;
        for (std::size_t j = 0; j <= mm; ++j) total += state_[j * width + c];
        if (total <= 0.0) continue;
        largest = std::max(largest, total);
        const auto cd = static_cast<double>(c);
        result = log_add(result, std::log(total) + std::lgamma(cd + 1.0) + cd * (scale - log_mu));
    }
    if (largest < kUnderflowGuard) return log_domain_fallback(kk, mm, log_mu, zero_clutter);
    return result;
}

double LikelihoodWorkspace::log_domain_fallback(std::size_t kk, std::size_t mm, double log_mu, bool zero_clutter) {
    const std::size_t width = kk + 1;
    state_.assign((mm + 1) * width, kNegInf);
    next_.resize(state_.size());
    prefix_.resize(width);
    state_[0] = 0.0;
    for (std::size_t k = 0; k < kk; ++k) {
        const double log_miss = miss_[k] > 0.0 ? std::log(miss_[k]) : kNegInf;
        std::fill(prefix_.begin(), prefix_.end(), kNegInf);
        for (std::size_t j = 0; j <= mm; ++j) {
            double* out = &next_[j * width];
            const double* in = &state_[j * width];
            for (std::size_t c = 0; c < width; ++c) out[c] = in[c] + log_miss;
            if (j > 0) {
                const double t = log_t_[k * mm + (j - 1)];
                if (t != kNegInf)
                    for (std::size_t c = 0; c + 1 < width; ++c) out[c + 1] = log_add(out[c + 1], prefix_[c] + t);
            }
            for (std::size_t c = 0; c < width; ++c) prefix_[c] = log_add(prefix_[c], in[c]);
        }
        std::swap(state_, next_);
    }
    double result = kNegInf;
    for (std::size_t c = 0; c <= std::min(kk, mm); ++c) {
        if (zero_clutter && c != mm) continue;
        double total = kNegInf;
        for (std::size_t j = 0; j <= mm; ++j) total = log_add(total, state_[j * width + c]);
        if (total == kNegInf) continue;
        const auto cd = static_cast<double>(c);
        result = log_add(result, total + std::lgamma(cd + 1.0) - cd * log_mu);
    }
    return result;
}

}  // namespace pfloc
