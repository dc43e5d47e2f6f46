#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spinmix/core.hpp"
#include "spinmix/states.hpp"

// Born-rule Monte Carlo simulation of the Stern-Gerlach style thought
// experiment: repeated preparation of the assembly, an independent
// projective measurement along one axis at every site, and empirical
// statistics of the total spin.
//
// Determinism contract: a fixed (source, axis, shots, seed) tuple yields
// bit-identical shot records on every platform. The generator is
// std::mt19937_64 seeded directly, mapped to [0,1) by taking the top 53
// bits; its identifier is kRngId and is recorded in scenario reports.

namespace spinmix {

inline constexpr const char* kRngId = "mt19937_64-u53";

/// Per-site +-1 outcomes of one shot; total = sum/2 in units of hbar.
struct ShotRecord {
    std::vector<int> outcomes;
    double total;
};

/// Summary statistics over shot totals. The variance is the population
/// variance by default (see empirical_stats); stderr_mean =
/// sqrt(variance/shots).
struct SampleStats {
    std::int64_t shots;
    double empirical_mean;
    double empirical_variance;
    double stderr_mean;
};

/// Born probabilities (p_plus, p_minus) for measuring site `site` of the
/// state along `axis`; p_plus + p_minus = 1.
std::pair<double, double> site_outcome_probs(const ProductState& state, int site, Axis axis);

std::vector<ShotRecord> sample_shots(const ProductState& state, Axis axis, std::int64_t shots,
                                     std::uint64_t seed);

/// Per shot, a member is first drawn by weight, then its sites are sampled
/// independently. An ensemble with a single member consumes no member draw,
/// so it reduces bit-exactly to pure-state sampling under the same seed.
/// Every member must be in product form.
std::vector<ShotRecord> sample_shots(const Ensemble& ensemble, Axis axis, std::int64_t shots,
                                     std::uint64_t seed);

/// Population variance unless bessel_correction is set, which applies the
/// n/(n-1) correction.
SampleStats empirical_stats(const std::vector<ShotRecord>& records,
                            bool bessel_correction = false);

}  // namespace spinmix
