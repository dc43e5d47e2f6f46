#include "spinmix/sampler.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace spinmix {

namespace {

// Top 53 bits of the raw draw; uniform on [0,1). Unlike the standard
// distributions this mapping is pinned by the language standard, which is
// what makes shot records portable.
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ShotRecord sample_one(const ProductState& state, Axis axis, std::mt19937_64& rng) {
    ShotRecord record;
    record.outcomes.reserve(state.kets.size());
    int sum = 0;
    for (int site = 1; site <= state.n_sites(); ++site) {
        const auto [p_plus, p_minus] = site_outcome_probs(state, site, axis);
        const int outcome = next_uniform(rng) < p_plus ? 1 : -1;
        record.outcomes.push_back(outcome);
        sum += outcome;
    }
    record.total = 0.5 * sum;
    return record;
}

std::size_t draw_member(const std::vector<Ensemble::Member>& members, std::mt19937_64& rng) {
    const double u = next_uniform(rng);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        cumulative += members[i].weight;
        if (u < cumulative) {
            return i;
        }
    }
    return members.size() - 1;  // guard against rounding in the cumulative sum
}

}  // namespace

std::pair<double, double> site_outcome_probs(const ProductState& state, int site, Axis axis) {
    if (site < 1 || site > state.n_sites()) {
        throw std::out_of_range("site " + std::to_string(site) + " out of range [1, " +
                                std::to_string(state.n_sites()) + "]");
    }
    const SingleSpinKet& ket = state.kets[site - 1];
    const SingleSpinKet plus = axis_eigenket(axis, 1);
    const Complex overlap = std::conj(plus.up) * ket.up + std::conj(plus.down) * ket.down;
    const double p_plus = std::norm(overlap);
    return {p_plus, 1.0 - p_plus};
}

std::vector<ShotRecord> sample_shots(const ProductState& state, Axis axis, std::int64_t shots,
                                     std::uint64_t seed) {
    if (shots < 1) {
        throw std::invalid_argument("shot count must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<ShotRecord> records;
    records.reserve(static_cast<std::size_t>(shots));
    for (std::int64_t shot = 0; shot < shots; ++shot) {
        records.push_back(sample_one(state, axis, rng));
    }
    return records;
}

std::vector<ShotRecord> sample_shots(const Ensemble& ensemble, Axis axis, std::int64_t shots,
                                     std::uint64_t seed) {
    if (shots < 1) {
        throw std::invalid_argument("shot count must be >= 1");
    }
    if (!ensemble.all_product()) {
        throw std::invalid_argument("sampling needs every ensemble member in product form");
    }
    std::mt19937_64 rng(seed);
    std::vector<ShotRecord> records;
    records.reserve(static_cast<std::size_t>(shots));
    const bool single_member = ensemble.members.size() == 1;
    for (std::int64_t shot = 0; shot < shots; ++shot) {
        const std::size_t index = single_member ? 0 : draw_member(ensemble.members, rng);
        records.push_back(
            sample_one(std::get<ProductState>(ensemble.members[index].state), axis, rng));
    }
    return records;
}

SampleStats empirical_stats(const std::vector<ShotRecord>& records, bool bessel_correction) {
    if (records.empty()) {
        throw std::invalid_argument("empirical_stats needs at least one shot");
    }
    const auto n = static_cast<double>(records.size());
    double mean = 0.0;
    for (const ShotRecord& record : records) {
        mean += record.total;
    }
    mean /= n;
    double sum_sq = 0.0;
    for (const ShotRecord& record : records) {
        const double d = record.total - mean;
        sum_sq += d * d;
    }
    double variance = sum_sq / n;
    if (bessel_correction) {
        if (records.size() < 2) {
            throw std::invalid_argument("Bessel correction needs at least two shots");
        }
        variance = sum_sq / (n - 1.0);
    }
    return {static_cast<std::int64_t>(records.size()), mean, variance,
            std::sqrt(variance / n)};
}

}  // namespace spinmix
