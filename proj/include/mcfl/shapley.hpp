#ifndef MCFL_SHAPLEY_HPP
#define MCFL_SHAPLEY_HPP

// Classic and multi-choice Shapley values, plus the coefficient algebra the
// multi-choice form is built on and brute-force oracles for all of them.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mcfl/errors.hpp"
#include "mcfl/game.hpp"

namespace mcfl {

// ---------------------------------------------------------------------------
// Coefficient algebra
// ---------------------------------------------------------------------------

/// mcount! / Prod_{j=0}^{mcount} (x + j), the closed product form of the
/// alternating sum Sum_l C(mcount,l) (-1)^l / (x + l). The product form is
/// numerically stable for any mcount; the alternating sum cancels
/// catastrophically once mcount grows past ~25.
template <class Scalar = double>
Scalar alternating_reciprocal_sum(int x, int mcount) {
    Scalar c = Scalar(1) / Scalar(x);
    for (int l = 1; l <= mcount; ++l) c = c * Scalar(l) / Scalar(x + l);
    return c;
}

/// Per-profile coefficient c_t: t is the contribution depth of the
/// distinguished identity, s the total of the surrounding profile, mcount the
/// number of identities in it below their maximum.
template <class Scalar = double>
Scalar coeff_c(int t, int s, int mcount) {
    if (t < 1 || s < 0 || mcount < 0 || s + t < 1)
        throw validation_error("coeff_c: need t >= 1, s >= 0, mcount >= 0");
    return alternating_reciprocal_sum<Scalar>(s + t, mcount);
}

/// Literal alternating-sum form of coeff_c; kept only as an independent
/// oracle. The sum is evaluated in exact rational arithmetic and rounded
/// once at the end — in floating point the cancellation would swamp the
/// tiny result long before mcount reaches double-digit values.
inline double coeff_c_alternating(int t, int s, int mcount) {
    if (mcount > 40)
        throw validation_error("coeff_c_alternating: mcount too large for the alternating sum");
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    cpp_rational sum = 0;
    cpp_int binom = 1;
    for (int l = 0; l <= mcount; ++l) {
        const cpp_rational term(binom, cpp_int(s + l + t));
        sum += (l % 2 == 0) ? term : -term;
        binom = binom * (mcount - l) / (l + 1);
    }
    return sum.convert_to<double>();
}

/// Enumeration over empty-capable maxima vectors (a game may have no
/// "other" identities); same order contract as for_each_profile.
template <class Visitor>
void for_each_profile_raw(const std::vector<int>& maxima, Visitor&& visit,
                          long long cap = kDefaultEnumerationCap) {
    long long count = 1;
    for (int mk : maxima) {
        count *= (mk + 1);
        if (count > cap)
            throw enumeration_cap_error(
                "profile enumeration exceeds cap " + std::to_string(cap), count);
    }
    Profile tau(maxima.size(), 0);
    for (;;) {
        visit(static_cast<const Profile&>(tau));
        int k = static_cast<int>(tau.size()) - 1;
        while (k >= 0 && tau[k] == maxima[k]) tau[k--] = 0;
        if (k < 0) return;
        ++tau[k];
    }
}

/// Sum of c_t over every profile of m, with the distinguished identity held
/// outside m. Equals 1/t identically; tests assert it, this just computes it.
inline double profile_coefficient_sum(const MaxDataVector& m, int t,
                                      long long cap = kDefaultEnumerationCap) {
    double sum = 0.0;
    for_each_profile(
        m,
        [&](const Profile& tau) {
            int below_max = 0;
            for (std::size_t v = 0; v < tau.size(); ++v)
                if (tau[v] != m.m[v]) ++below_max;
            sum += coeff_c(t, total(tau), below_max);
        },
        cap);
    return sum;
}

// ---------------------------------------------------------------------------
// Classic (binary-participation) Shapley value
// ---------------------------------------------------------------------------

/// Binary-participation game: value over subsets of {0..K-1} as bitmasks.
struct SubsetGame {
    int K = 0;
    std::vector<double> value; // indexed by bitmask, size 1 << K

    SubsetGame(int players, std::vector<double> v) : K(players), value(std::move(v)) {
        if (K < 1 || value.size() != (1ULL << K))
            throw validation_error("SubsetGame: value table must have 2^K entries");
        if (value[0] != 0.0) throw validation_error("SubsetGame: v(empty) must be 0");
    }
};

inline std::vector<double> classic_shapley(const SubsetGame& game) {
    const int K = game.K;
    if (K > 20) throw validation_error("classic_shapley: K must be <= 20");
    // weight[s] = s! (K-s-1)! / K!
    std::vector<double> weight(static_cast<std::size_t>(K));
    weight[0] = 1.0 / static_cast<double>(K);
    for (int s = 1; s < K; ++s)
        weight[static_cast<std::size_t>(s)] =
            weight[static_cast<std::size_t>(s - 1)] * static_cast<double>(s) /
            static_cast<double>(K - s);
    std::vector<double> psi(static_cast<std::size_t>(K), 0.0);
    const std::uint32_t full = (1u << K) - 1u;
    for (int k = 0; k < K; ++k) {
        const std::uint32_t others = full & ~(1u << k);
        // iterate subsets of `others`
        std::uint32_t s = 0;
        for (;;) {
            const int sz = std::popcount(s);
            psi[static_cast<std::size_t>(k)] +=
                weight[static_cast<std::size_t>(sz)] *
                (game.value[s | (1u << k)] - game.value[s]);
            if (s == others) break;
            s = (s - others) & others;
        }
    }
    return psi;
}

/// Permutation-enumeration oracle: average marginal contribution over all K!
/// arrival orders.
inline std::vector<double> classic_shapley_oracle(const SubsetGame& game) {
    const int K = game.K;
    if (K > 8) throw validation_error("classic_shapley_oracle: K must be <= 8");
    std::vector<int> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> psi(static_cast<std::size_t>(K), 0.0);
    long long perms = 0;
    do {
        std::uint32_t coalition = 0;
        for (int k : order) {
            const std::uint32_t with = coalition | (1u << k);
            psi[static_cast<std::size_t>(k)] += game.value[with] - game.value[coalition];
            coalition = with;
        }
        ++perms;
    } while (std::next_permutation(order.begin(), order.end()));
    for (double& p : psi) p /= static_cast<double>(perms);
    return psi;
}

// ---------------------------------------------------------------------------
// Multi-choice Shapley value
// ---------------------------------------------------------------------------

/// Prior importance of each contribution level; alpha(0) = 0, non-decreasing.
struct WeightFunction {
    std::vector<double> alpha; // indexed by level 0..max m_k

    explicit WeightFunction(std::vector<double> a) : alpha(std::move(a)) {
        if (alpha.empty() || alpha[0] != 0.0)
            throw validation_error("weight function must satisfy alpha(0) = 0");
        for (std::size_t i = 1; i < alpha.size(); ++i)
            if (alpha[i] < alpha[i - 1])
                throw validation_error("weight function must be non-decreasing");
    }

    static WeightFunction linear(int max_level, double slope = 1.0) {
        std::vector<double> a(static_cast<std::size_t>(max_level) + 1);
        for (int i = 0; i <= max_level; ++i) a[static_cast<std::size_t>(i)] = slope * i;
        return WeightFunction(std::move(a));
    }

    double operator()(int level) const {
        if (level < 0 || level >= static_cast<int>(alpha.size()))
            throw validation_error("weight function undefined at level " + std::to_string(level));
        return alpha[static_cast<std::size_t>(level)];
    }
};

namespace detail {

inline std::vector<int> maxima_without(const MaxDataVector& m, int k) {
    std::vector<int> others;
    others.reserve(m.m.size() - 1);
    for (int v = 0; v < m.num_identities(); ++v)
        if (v != k) others.push_back(m.m[v]);
    return others;
}

inline Profile insert_at(const Profile& others, int k, int value) {
    Profile tau;
    tau.reserve(others.size() + 1);
    tau.insert(tau.end(), others.begin(), others.begin() + k);
    tau.push_back(value);
    tau.insert(tau.end(), others.begin() + k, others.end());
    return tau;
}

} // namespace detail

/// Linear-weight multi-choice Shapley payoff for identity k contributing i
/// samples. The inner subset sum over T in M_k(tau) depends on T only through
/// |T|, so it collapses to the stable product form. Templated on the scalar so
/// the same accumulation runs in exact rational arithmetic for certification.
template <class Scalar = double, class ValueFn>
Scalar multi_choice_shapley_linear_t(const MaxDataVector& m, ValueFn&& v, int k, int i,
                                     long long cap = kDefaultEnumerationCap) {
    if (k < 0 || k >= m.num_identities())
        throw validation_error("multi_choice_shapley: identity index out of range");
    if (i < 0 || i > m.m[static_cast<std::size_t>(k)])
        throw validation_error("multi_choice_shapley: level out of range");
    if (i == 0) return Scalar(0);
    const std::vector<int> others_max = detail::maxima_without(m, k);
    Scalar psi(0);
    for (int j = 1; j <= i; ++j) {
        for_each_profile_raw(
            others_max,
            [&](const Profile& others) {
                int below_max = 0;
                for (std::size_t u = 0; u < others.size(); ++u)
                    if (others[u] != others_max[u]) ++below_max;
                const int s = total(others) + j;
                const Profile tau = detail::insert_at(others, k, j);
                const Scalar marginal = v(tau) - v(decrement(tau, k));
                psi += Scalar(j) * alternating_reciprocal_sum<Scalar>(s, below_max) * marginal;
            },
            cap);
    }
    return psi;
}

inline double multi_choice_shapley_linear(const GameSpec& game, int k, int i,
                                          long long cap = kDefaultEnumerationCap) {
    return multi_choice_shapley_linear_t<double>(
        game.m, [&](const Profile& tau) { return game.v(tau); }, k, i, cap);
}

/// General-weight multi-choice Shapley payoff. The subset sum cannot be
/// grouped by size here because each member of T contributes its own weight
/// increment to the denominator.
inline double multi_choice_shapley_weighted(const GameSpec& game, const WeightFunction& alpha,
                                            int k, int i,
                                            long long cap = kDefaultEnumerationCap) {
    if (k < 0 || k >= game.m.num_identities())
        throw validation_error("multi_choice_shapley: identity index out of range");
    if (i < 0 || i > game.m.m[static_cast<std::size_t>(k)])
        throw validation_error("multi_choice_shapley: level out of range");
    if (i == 0) return 0.0;
    const std::vector<int> others_max = detail::maxima_without(game.m, k);
    double psi = 0.0;
    for (int j = 1; j <= i; ++j) {
        for_each_profile_raw(
            others_max,
            [&](const Profile& others) {
                std::vector<double> increments; // alpha(tau_r + 1) - alpha(tau_r), r in M_k
                for (std::size_t u = 0; u < others.size(); ++u)
                    if (others[u] != others_max[u])
                        increments.push_back(alpha(others[u] + 1) - alpha(others[u]));
                double norm = alpha(j);
                for (int x : others) norm += alpha(x);
                const Profile tau = detail::insert_at(others, k, j);
                const double marginal = game.v(tau) - game.v(decrement(tau, k));
                const std::size_t nsub = 1ULL << increments.size();
                double bracket = 0.0;
                for (std::size_t sub = 0; sub < nsub; ++sub) {
                    double denom = norm;
                    for (std::size_t r = 0; r < increments.size(); ++r)
                        if (sub & (1ULL << r)) denom += increments[r];
                    const double term = alpha(j) / denom;
                    bracket += (std::popcount(sub) % 2 == 0) ? term : -term;
                }
                psi += bracket * marginal;
            },
            cap);
    }
    return psi;
}

/// Payoff of the first split identity (capacity T, partner capacity Tp)
/// evaluated through the coefficient series over the other identities'
/// profiles, without ever constructing the split game. The direct split-game
/// computation is the oracle this is tested against.
inline double split_identity_payoff_series(int T, int Tp, const std::vector<int>& others_max,
                                           const std::function<double(int)>& v,
                                           long long cap = kDefaultEnumerationCap) {
    if (T < 1 || Tp < 1)
        throw validation_error("split_identity_payoff_series: T and T' must be >= 1");
    auto grad_v = [&](int s, int t) { return v(s + t) - v(s + t - 1); };
    double psi = 0.0;
    for_each_profile_raw(
        others_max,
        [&](const Profile& others) {
            int below_max = 0;
            for (std::size_t u = 0; u < others.size(); ++u)
                if (others[u] != others_max[u]) ++below_max;
            const int s = total(others);
            for (int t = 1; t <= T; ++t) {
                psi += t * coeff_c(t, s, below_max) * grad_v(s, t);
                for (int t1 = 1; t1 <= Tp; ++t1)
                    psi += t * coeff_c(t + t1, s, below_max) *
                           (grad_v(s, t1 + t) - grad_v(s, t1 + t - 1));
            }
        },
        cap);
    return psi;
}

// ---------------------------------------------------------------------------
// Full allocations
// ---------------------------------------------------------------------------

/// Per-identity, per-level payoffs; psi[k][i] with psi[k][0] = 0.
struct AllocationResult {
    MaxDataVector m;
    std::vector<std::vector<double>> psi;

    double at(int k, int level) const {
        return psi[static_cast<std::size_t>(k)][static_cast<std::size_t>(level)];
    }
};

inline AllocationResult allocate_all(const GameSpec& game,
                                     long long cap = kDefaultEnumerationCap) {
    AllocationResult out;
    out.m = game.m;
    out.psi.resize(game.m.m.size());
    for (int k = 0; k < game.m.num_identities(); ++k) {
        auto& row = out.psi[static_cast<std::size_t>(k)];
        row.resize(static_cast<std::size_t>(game.m.m[static_cast<std::size_t>(k)]) + 1);
        row[0] = 0.0;
        for (int i = 1; i <= game.m.m[static_cast<std::size_t>(k)]; ++i)
            row[static_cast<std::size_t>(i)] = multi_choice_shapley_linear(game, k, i, cap);
    }
    return out;
}

} // namespace mcfl

#endif
