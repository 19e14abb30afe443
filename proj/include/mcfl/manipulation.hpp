#ifndef MCFL_MANIPULATION_HPP
#define MCFL_MANIPULATION_HPP

// False-name split games: what an identity gains by splitting its data among
// fabricated identities, and whether full splitting is an equilibrium.

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mcfl/errors.hpp"
#include "mcfl/game.hpp"
#include "mcfl/shapley.hpp"

namespace mcfl {

/// A split of identity k's capacity into fake-identity capacities. Every part
/// holds at least one sample.
struct SplitSpec {
    int k = 0;
    std::vector<int> partition;
};

inline void check_split_spec(const MaxDataVector& m, const SplitSpec& spec) {
    if (spec.k < 0 || spec.k >= m.num_identities())
        throw validation_error("split: identity index out of range");
    if (spec.partition.empty())
        throw validation_error("split: partition must have at least one part");
    int sum = 0;
    for (int part : spec.partition) {
        if (part < 1) throw validation_error("split: every part must hold >= 1 sample");
        sum += part;
    }
    if (sum > m.m[static_cast<std::size_t>(spec.k)])
        throw validation_error("split: partition exceeds the identity's capacity");
}

/// Replaces m_k by the partition's parts, inserted at position k.
inline MaxDataVector split_game(const MaxDataVector& m, const SplitSpec& spec) {
    check_split_spec(m, spec);
    std::vector<int> out;
    out.reserve(m.m.size() + spec.partition.size() - 1);
    for (int v = 0; v < m.num_identities(); ++v) {
        if (v == spec.k)
            out.insert(out.end(), spec.partition.begin(), spec.partition.end());
        else
            out.push_back(m.m[static_cast<std::size_t>(v)]);
    }
    return MaxDataVector(std::move(out));
}

struct SplitAnalysis {
    double original_payoff = 0.0;          // psi_{T+T',k} in the unsplit game
    std::vector<double> split_payoffs;     // per split identity, full effort
    double gain = 0.0;                     // sum(split) - original
    MaxDataVector original_game;
    MaxDataVector split_game;
};

/// Two-way split gain: the unsplit game holds identity k at capacity T + T'
/// and the split game replaces it by capacities [T, T'].
inline SplitAnalysis split_gain(const MaxDataVector& m, int k, int T, int Tp,
                                const CharacteristicFunction& v,
                                long long cap = kDefaultEnumerationCap) {
    if (k < 0 || k >= m.num_identities())
        throw validation_error("split_gain: identity index out of range");
    if (T < 1 || Tp < 1) throw validation_error("split_gain: T and T' must be >= 1");
    const int i = T + Tp;
    if (i > m.m[static_cast<std::size_t>(k)])
        throw validation_error("split_gain: T + T' exceeds the identity's capacity");

    SplitAnalysis out;
    std::vector<int> base = m.m;
    base[static_cast<std::size_t>(k)] = i;
    out.original_game = MaxDataVector(base);
    out.split_game = split_game(out.original_game, SplitSpec{k, {T, Tp}});

    const GameSpec original(out.original_game, v);
    const GameSpec split(out.split_game, v);
    out.original_payoff = multi_choice_shapley_linear(original, k, i, cap);
    out.split_payoffs = {multi_choice_shapley_linear(split, k, T, cap),
                         multi_choice_shapley_linear(split, k + 1, Tp, cap)};
    out.gain = out.split_payoffs[0] + out.split_payoffs[1] - out.original_payoff;
    return out;
}

/// All integer partitions of n, parts non-increasing, ordered by
/// (number of parts, lexicographic). [n] comes first, all-ones last.
inline std::vector<std::vector<int>> integer_partitions(int n) {
    if (n < 1) throw validation_error("integer_partitions: n must be >= 1");
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    auto recurse = [&](auto&& self, int remaining, int max_part) -> void {
        if (remaining == 0) {
            out.push_back(current);
            return;
        }
        for (int part = std::min(remaining, max_part); part >= 1; --part) {
            current.push_back(part);
            self(self, remaining - part, part);
            current.pop_back();
        }
    };
    recurse(recurse, n, n);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

struct PartitionSearchResult {
    std::vector<int> partition;
    double total_payoff = 0.0;
    std::vector<std::pair<std::vector<int>, double>> candidates;
};

/// Total payoff collected by identity k's split identities at full effort.
inline double split_total_payoff(const MaxDataVector& m, int k, const std::vector<int>& parts,
                                 const CharacteristicFunction& v,
                                 long long cap = kDefaultEnumerationCap) {
    const MaxDataVector g = split_game(m, SplitSpec{k, parts});
    const GameSpec game(g, v);
    double sum = 0.0;
    for (std::size_t p = 0; p < parts.size(); ++p)
        sum += multi_choice_shapley_linear(game, k + static_cast<int>(p), parts[p], cap);
    return sum;
}

/// Exhaustive search over integer partitions of m_k for the payoff-maximizing
/// split. Ties (within 1e-9 of the maximum) break toward fewer identities,
/// then the lexicographically smallest partition, so honest behavior is the
/// canonical report when splitting buys nothing.
inline PartitionSearchResult best_partition(const MaxDataVector& m, int k,
                                            const CharacteristicFunction& v,
                                            long long cap = kDefaultEnumerationCap) {
    if (k < 0 || k >= m.num_identities())
        throw validation_error("best_partition: identity index out of range");
    const int mk = m.m[static_cast<std::size_t>(k)];
    if (mk > 8)
        throw validation_error("best_partition: m_k must be <= 8 for partition enumeration");
    PartitionSearchResult out;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& parts : integer_partitions(mk)) {
        const double payoff = split_total_payoff(m, k, parts, v, cap);
        out.candidates.emplace_back(parts, payoff);
        best = std::max(best, payoff);
    }
    const double tie_tol = 1e-9 * std::max(1.0, std::abs(best));
    for (const auto& [parts, payoff] : out.candidates) {
        if (payoff >= best - tie_tol) { // candidates are already in tie-break order
            out.partition = parts;
            out.total_payoff = payoff;
            break;
        }
    }
    return out;
}

struct DeviationRecord {
    int agent = 0;                 // original agent index
    std::vector<int> partition;    // the deviation tried
    double payoff = 0.0;           // total payoff of the agent's identities
    double margin = 0.0;           // fully-split payoff minus this payoff
};

struct EquilibriumCertificate {
    Profile profile;                        // over split identities, all ones
    std::vector<double> fully_split_payoffs; // per original agent
    std::vector<DeviationRecord> deviations;
    bool is_equilibrium = false;            // all margins >= -1e-9
    bool is_strict = false;                 // all non-trivial margins > 1e-9
};

/// Checks that full splitting (every sample its own identity, contributing 1)
/// is an equilibrium: no original agent can do strictly better with any other
/// partition of m_k while everyone else stays fully split. Deviations are
/// checked at full effort only.
inline EquilibriumCertificate equilibrium_profile(const MaxDataVector& m,
                                                  const CharacteristicFunction& v,
                                                  long long cap = kDefaultEnumerationCap) {
    if (m.num_identities() > 3)
        throw validation_error("equilibrium_profile: K must be <= 3");
    for (int mk : m.m)
        if (mk > 5) throw validation_error("equilibrium_profile: every m_k must be <= 5");

    EquilibriumCertificate cert;
    cert.profile.assign(static_cast<std::size_t>(m.total()), 1);
    cert.is_equilibrium = true;
    cert.is_strict = true;

    const int K = m.num_identities();
    for (int agent = 0; agent < K; ++agent) {
        const int mk = m.m[static_cast<std::size_t>(agent)];
        // Game over original agents with everyone but `agent` fully split.
        std::vector<int> base;
        int agent_pos = 0;
        for (int a = 0; a < K; ++a) {
            if (a == agent) {
                agent_pos = static_cast<int>(base.size());
                base.push_back(mk);
            } else {
                base.insert(base.end(), static_cast<std::size_t>(m.m[static_cast<std::size_t>(a)]), 1);
            }
        }
        const MaxDataVector others_split(base);
        std::vector<int> all_ones(static_cast<std::size_t>(mk), 1);
        const double split_payoff =
            split_total_payoff(others_split, agent_pos, all_ones, v, cap);
        cert.fully_split_payoffs.push_back(split_payoff);

        for (const auto& parts : integer_partitions(mk)) {
            if (static_cast<int>(parts.size()) == mk) continue; // the candidate itself
            DeviationRecord rec;
            rec.agent = agent;
            rec.partition = parts;
            rec.payoff = split_total_payoff(others_split, agent_pos, parts, v, cap);
            rec.margin = split_payoff - rec.payoff;
            if (rec.margin < -1e-9) cert.is_equilibrium = false;
            if (rec.margin <= 1e-9) cert.is_strict = false;
            cert.deviations.push_back(std::move(rec));
        }
    }
    return cert;
}

} // namespace mcfl

#endif
