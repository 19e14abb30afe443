#ifndef MCFL_GAME_HPP
#define MCFL_GAME_HPP

// Participation profiles, profile enumeration and characteristic functions.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcfl/errors.hpp"
#include "mcfl/rng.hpp"

namespace mcfl {

/// Per-identity integer sample counts tau.
using Profile = std::vector<int>;

constexpr long long kDefaultEnumerationCap = 10'000'000LL;

/// Per-identity maximum sample counts, one entry per identity.
struct MaxDataVector {
    std::vector<int> m;

    MaxDataVector() = default;
    explicit MaxDataVector(std::vector<int> counts) : m(std::move(counts)) {
        if (m.empty()) throw validation_error("MaxDataVector: at least one identity required");
        for (int mk : m)
            if (mk < 1) throw validation_error("MaxDataVector: every m_k must be >= 1");
    }

    int num_identities() const { return static_cast<int>(m.size()); }
    int total() const { return std::accumulate(m.begin(), m.end(), 0); }

    /// Number of participation profiles, Prod(m_k + 1); saturates at the cap
    /// sentinel rather than overflowing.
    long long profile_count() const {
        long long p = 1;
        for (int mk : m) {
            p *= (mk + 1);
            if (p < 0 || p > (1LL << 62)) return (1LL << 62);
        }
        return p;
    }
};

inline int total(const Profile& tau) { return std::accumulate(tau.begin(), tau.end(), 0); }

inline void check_conformant(const Profile& tau, const MaxDataVector& m) {
    if (tau.size() != m.m.size())
        throw validation_error("profile length does not match identity count");
    for (std::size_t k = 0; k < tau.size(); ++k)
        if (tau[k] < 0 || tau[k] > m.m[k])
            throw validation_error("profile component out of range at identity " +
                                   std::to_string(k + 1));
}

/// Visits every profile in T(m) in lexicographic order (rightmost index
/// fastest), starting from the all-zero profile and ending at m itself.
template <class Visitor>
void for_each_profile(const MaxDataVector& m, Visitor&& visit,
                      long long cap = kDefaultEnumerationCap) {
    const long long count = m.profile_count();
    if (count > cap)
        throw enumeration_cap_error(
            "profile enumeration of size " + std::to_string(count) +
                " exceeds cap " + std::to_string(cap),
            count);
    Profile tau(m.m.size(), 0);
    for (;;) {
        visit(static_cast<const Profile&>(tau));
        int k = static_cast<int>(tau.size()) - 1;
        while (k >= 0 && tau[k] == m.m[k]) tau[k--] = 0;
        if (k < 0) return;
        ++tau[k];
    }
}

inline std::vector<Profile> enumerate_profiles(const MaxDataVector& m,
                                               long long cap = kDefaultEnumerationCap) {
    std::vector<Profile> out;
    out.reserve(static_cast<std::size_t>(std::min(m.profile_count(), cap)));
    for_each_profile(m, [&](const Profile& tau) { out.push_back(tau); }, cap);
    return out;
}

/// Identities other than k that have not reached their maximum count.
inline std::set<int> unmet_set(const Profile& tau, const MaxDataVector& m, int k) {
    check_conformant(tau, m);
    if (k < 0 || k >= m.num_identities())
        throw validation_error("unmet_set: identity index out of range");
    std::set<int> out;
    for (int v = 0; v < m.num_identities(); ++v)
        if (v != k && tau[v] != m.m[v]) out.insert(v);
    return out;
}

inline int unmet_count(const Profile& tau, const MaxDataVector& m, int k) {
    int c = 0;
    for (int v = 0; v < m.num_identities(); ++v)
        if (v != k && tau[v] != m.m[v]) ++c;
    return c;
}

inline Profile decrement(const Profile& tau, int k) {
    if (k < 0 || k >= static_cast<int>(tau.size()))
        throw validation_error("decrement: identity index out of range");
    if (tau[k] < 1)
        throw validation_error("decrement: tau_k is already zero at identity " +
                               std::to_string(k + 1));
    Profile out = tau;
    --out[k];
    return out;
}

/// Surplus of the pricing-under-uncertainty game: (n/(n+1))^(n+1), the
/// expected revenue of pricing at the sample mean of n unit-rate
/// exponential observations. Strictly increasing and concave, -> 1/e.
inline double pricing_value(long long n) {
    if (n < 0) throw validation_error("pricing_value: n must be >= 0");
    if (n == 0) return 0.0;
    if (n <= 12) {
        // exact integer powers fit in 53 bits here, so the single division
        // is the only rounding (pow/exp-log drop the last ulp at n = 2)
        long long num = 1, den = 1;
        for (long long j = 0; j <= n; ++j) {
            num *= n;
            den *= n + 1;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    }
    const double x = static_cast<double>(n);
    // exp((n+1) * log(n/(n+1))) keeps full precision for large n
    return std::exp((x + 1.0) * std::log(x / (x + 1.0)));
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    long long draws = 0;
};

/// Monte Carlo oracle for pricing_value: draws X ~ Erlang(n, n*lambda) and
/// averages X*exp(-lambda*X).
inline MonteCarloEstimate pricing_value_mc(int n, double lambda, long long sample_count,
                                           std::uint64_t seed) {
    if (n < 1) throw validation_error("pricing_value_mc: n must be >= 1");
    if (lambda <= 0) throw validation_error("pricing_value_mc: lambda must be > 0");
    if (sample_count < 1000)
        throw validation_error("pricing_value_mc: need at least 1000 draws");
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < sample_count; ++i) {
        const double x = rng.erlang(n, static_cast<double>(n) * lambda);
        const double r = x * std::exp(-lambda * x);
        sum += r;
        sumsq += r * r;
    }
    const double mean = sum / static_cast<double>(sample_count);
    const double var =
        (sumsq - static_cast<double>(sample_count) * mean * mean) /
        static_cast<double>(sample_count - 1);
    return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(sample_count)),
            sample_count};
}

/// Coalition surplus map. Total-count form evaluates v(|tau|); the profile
/// form keeps Definition-faithful generality for exotic games.
class CharacteristicFunction {
public:
    enum class Kind { TotalCount, Profile };

    static CharacteristicFunction from_table(std::vector<double> table) {
        if (table.empty()) throw validation_error("value table must cover n = 0");
        if (table[0] != 0.0)
            throw validation_error("value table must satisfy v(0) = 0");
        CharacteristicFunction f;
        f.kind_ = Kind::TotalCount;
        f.table_ = std::move(table);
        return f;
    }

    static CharacteristicFunction from_total_fn(std::function<double(int)> fn, int n_max) {
        std::vector<double> table(static_cast<std::size_t>(n_max) + 1);
        table[0] = 0.0;
        for (int n = 1; n <= n_max; ++n) table[static_cast<std::size_t>(n)] = fn(n);
        return from_table(std::move(table));
    }

    static CharacteristicFunction from_profile_fn(std::function<double(const Profile&)> fn) {
        CharacteristicFunction f;
        f.kind_ = Kind::Profile;
        f.profile_fn_ = std::move(fn);
        return f;
    }

    Kind kind() const { return kind_; }
    int n_max() const { return static_cast<int>(table_.size()) - 1; }

    double operator()(int n) const {
        if (kind_ != Kind::TotalCount)
            throw validation_error("profile-form characteristic function has no total-count value");
        if (n < 0 || n >= static_cast<int>(table_.size()))
            throw validation_error("characteristic function not defined at n = " +
                                   std::to_string(n));
        return table_[static_cast<std::size_t>(n)];
    }

    double operator()(const Profile& tau) const {
        if (kind_ == Kind::Profile) {
            if (total(tau) == 0) return 0.0;
            return profile_fn_(tau);
        }
        return (*this)(total(tau));
    }

    /// Optional oracle surplus z* for guarantee reporting.
    void set_oracle_surplus(double z) { oracle_surplus_ = z; has_oracle_ = true; }
    bool has_oracle_surplus() const { return has_oracle_; }
    double oracle_surplus() const { return oracle_surplus_; }

private:
    Kind kind_ = Kind::TotalCount;
    std::vector<double> table_{0.0};
    std::function<double(const Profile&)> profile_fn_;
    double oracle_surplus_ = 0.0;
    bool has_oracle_ = false;
};

struct GameSpec {
    MaxDataVector m;
    CharacteristicFunction v;

    GameSpec(MaxDataVector max_data, CharacteristicFunction value)
        : m(std::move(max_data)), v(std::move(value)) {
        if (v.kind() == CharacteristicFunction::Kind::TotalCount && v.n_max() < m.total())
            throw validation_error("characteristic function domain does not cover |m|");
    }
};

enum class ValueTableKind { Linear, ConcavePower, Pricing, Explicit };

/// Test-function factory for total-count games.
inline CharacteristicFunction make_value_table(ValueTableKind kind, double param, int n_max,
                                               std::vector<double> explicit_values = {},
                                               bool require_monotone = false) {
    if (n_max < 1) throw validation_error("make_value_table: n_max must be >= 1");
    switch (kind) {
        case ValueTableKind::Linear:
            return CharacteristicFunction::from_total_fn(
                [param](int n) { return param * n; }, n_max);
        case ValueTableKind::ConcavePower:
            if (param <= 0.0 || param >= 1.0)
                throw validation_error("concave-power exponent must lie in (0, 1)");
            return CharacteristicFunction::from_total_fn(
                [param](int n) { return std::pow(static_cast<double>(n), param); }, n_max);
        case ValueTableKind::Pricing:
            return CharacteristicFunction::from_total_fn(
                [](int n) { return pricing_value(n); }, n_max);
        case ValueTableKind::Explicit: {
            if (static_cast<int>(explicit_values.size()) != n_max + 1)
                throw validation_error("explicit value list must cover 0..n_max");
            if (explicit_values[0] != 0.0)
                throw validation_error("explicit value list must start with v(0) = 0");
            if (require_monotone)
                for (std::size_t i = 1; i < explicit_values.size(); ++i)
                    if (explicit_values[i] < explicit_values[i - 1])
                        throw validation_error("explicit value list is not non-decreasing");
            return CharacteristicFunction::from_table(std::move(explicit_values));
        }
    }
    throw validation_error("make_value_table: unknown kind");
}

/// Loads an explicit value table from CSV with header `n,v`; rows must cover
/// 0..n_max contiguously.
inline CharacteristicFunction load_value_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open value table: " + path);
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "n,v")
        throw validation_error("value table must start with header n,v: " + path);
    std::vector<double> table;
    int expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string n_str, v_str;
        if (!std::getline(row, n_str, ',') || !std::getline(row, v_str))
            throw validation_error("malformed value table row: " + line);
        if (std::stoi(n_str) != expected)
            throw validation_error("value table rows must cover 0..n_max contiguously");
        table.push_back(std::stod(v_str));
        ++expected;
    }
    return CharacteristicFunction::from_table(std::move(table));
}

} // namespace mcfl

#endif
