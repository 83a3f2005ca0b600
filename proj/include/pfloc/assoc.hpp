#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pfloc {

/// Support of every DOA and of the false-alarm density, degrees.
inline constexpr double kDoaMin = -90.0;
inline constexpr double kDoaMax = 90.0;

/// Uniform false-alarm density on [-90, 90), per degree.
inline constexpr double kFalseAlarmDensity = 1.0 / (kDoaMax - kDoaMin);

/// Statistical observation model for K propagation paths.
struct ModelParams {
    std::vector<double> sigma_deg;  // per-path DOA noise standard deviation
    double detect_prob = 0.9;       // d_k for every geometrically possible path
    double mu_fa = 2.0;             // mean number of false alarms per epoch

    [[nodiscard]] std::size_t path_count() const { return sigma_deg.size(); }

    /// Throws DomainError when a field is out of range.
    void validate() const;

    /// Defaults for K = 4 (sigma {0.5, 0.5, 2, 2}, mu 2) and K = 2 ({0.5, 0.5}, mu 4).
    static ModelParams defaults_for(std::size_t path_count);
};

/// DOAs of one epoch, sorted descending, each in [-90, 90).
class ObservationSet {
public:
    ObservationSet() = default;

    /// Throws DomainError if `doas` is not sorted descending or out of support.
    explicit ObservationSet(std::vector<double> doas);

    /// Sorts descending (stable) before validating.
    static ObservationSet from_unsorted(std::vector<double> doas);

    [[nodiscard]] std::span<const double> values() const { return z_; }
    [[nodiscard]] std::size_t size() const { return z_.size(); }
    [[nodiscard]] bool empty() const { return z_.empty(); }
    [[nodiscard]] double operator[](std::size_t m) const { return z_[m]; }

    friend bool operator==(const ObservationSet&, const ObservationSet&) = default;

private:
    std::vector<double> z_;
};

/// a[k] = m in 1..M when path k produced observation m (1-based, matching the
/// sorted order), 0 when path k was missed.
using AssociationVector = std::vector<std::size_t>;

/// Modelled DOA and detection probability of one path at one source position.
struct PathPredictionEntry {
    double angle_deg;    // kImpossible when the path cannot exist
    double detect_prob;  // forced to 0 for impossible paths

    [[nodiscard]] bool possible() const;
};

using PathPrediction = std::vector<PathPredictionEntry>;

/// Pairs modelled angles (kImpossible allowed) with `detect_prob`, zeroing it
/// for impossible paths.
[[nodiscard]] PathPrediction make_prediction(std::span<const double> angles_deg, double detect_prob);

/// True iff no k > k' has a[k'] >= a[k] != 0. Throws DomainError if an entry exceeds M.
[[nodiscard]] bool is_valid(std::span<const std::size_t> a, std::size_t observation_count);

/// Number of valid association vectors, sum_c C(K, c) C(M, c).
[[nodiscard]] std::uint64_t count_valid(std::size_t path_count, std::size_t observation_count);

/// Gaussian density (per degree) of observing `z_deg` from a possible path.
[[nodiscard]] double path_likelihood(double z_deg, const PathPredictionEntry& pred, double sigma_deg);

/// f(z | x, a, M): product of false-alarm densities over all observations with
/// each detected path's density substituted for its observation.
[[nodiscard]] double conditional_pdf(const ObservationSet& z, const PathPrediction& pred,
                                     std::span<const std::size_t> a, const ModelParams& params);

/// p(a, M | x): joint prior of an association vector and the observation count.
[[nodiscard]] double association_prior(std::span<const std::size_t> a, std::size_t observation_count,
                                       const PathPrediction& pred, const ModelParams& params);

/// r_k(x, a_k; z) for path k (0-based) and association a_k in 0..M.
[[nodiscard]] double unnormalized_factor_r(const ObservationSet& z, const PathPrediction& pred, std::size_t k,
                                           std::size_t a_k, const ModelParams& params);

/// Sum over valid a of |D_a|! * prod_k r_k, i.e. the state-dependent part of
/// f(z | x) once the constant exp(-mu) mu^M / M! * prod_m f_FA(z_m) is dropped.
/// With mu_fa = 0 the factors r_k are undefined; the value is then taken times
/// mu^M in the limit, leaving only vectors that explain all M observations:
/// M! * prod_{k detected} d_k f_k / f_FA * prod_{k missed} (1 - d_k).
[[nodiscard]] double marginal_likelihood(const ObservationSet& z, const PathPrediction& pred,
                                         const ModelParams& params);

/// Logarithm of marginal_likelihood, evaluated without underflow.
[[nodiscard]] double log_marginal_likelihood(const ObservationSet& z, const PathPrediction& pred,
                                             const ModelParams& params);

/// Reusable buffers for evaluating log_marginal_likelihood on many states
/// with the same observations; not shareable between threads.
class LikelihoodWorkspace {
public:
    [[nodiscard]] double log_marginal(std::span<const double> z, std::span<const PathPredictionEntry> pred,
                                      const ModelParams& params);

private:
    [[nodiscard]] double log_domain_fallback(std::size_t kk, std::size_t mm, double log_mu, bool zero_clutter);

    std::vector<double> log_t_;   // K x M log detection terms
    std::vector<double> miss_;    // K
    std::vector<double> state_;   // (M+1) x (K+1)
    std::vector<double> next_;
    std::vector<double> prefix_;  // M+1
};

}  // namespace pfloc
