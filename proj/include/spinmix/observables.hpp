#pragma once

#include <span>
#include <string>
#include <vector>

#include "spinmix/core.hpp"
#include "spinmix/states.hpp"

// Collective spin observables S_alpha = sum_i s_alpha,i and the three
// evaluation routes for their means and variances:
//
//   dense        <Phi|O|Phi> on the expanded state (the oracle route),
//   trace        Tr(rho O) against a density operator,
//   product-fast O(N) analytics for unentangled states, valid because
//                cross-site covariances vanish in a product state.
//
// The first two are proven equal by construction of rho; the library keeps
// them as independent code paths so that the equality stays checkable.

namespace spinmix {

/// One single-site term c * s_alpha,i of a collective observable.
struct LocalSpinTerm {
    int site;            // 1-based
    Axis axis;
    double coefficient;  // real so the observable stays Hermitian
};

/// Formal sum of single-site spin terms. Never materialized densely unless
/// a dense route asks for it.
struct CollectiveObservable {
    int n_sites;
    std::vector<LocalSpinTerm> terms;

    /// Canonicalizes: sorts by (site, axis), merges duplicates, drops
    /// exact-zero coefficients.
    CollectiveObservable(int n_sites, std::vector<LocalSpinTerm> terms);
};

/// S_alpha = sum over all n sites of s_alpha,i.
CollectiveObservable collective(Axis axis, int n_sites);

enum class Method { Dense, Trace, ProductFast };

std::string method_name(Method method);

/// First and second moments of an observable in a state, in units of hbar
/// (mean) and hbar^2 (variance).
struct MomentReport {
    double mean;
    double variance;
    Method method;

    MomentReport(double mean, double variance, Method method);
};

/// Dense matrix of the observable (sum of embedded site terms); subject to
/// the dense cap.
Matrix materialize(const CollectiveObservable& obs);

/// O|Phi> without materializing O; O(terms * 2^n).
Vector apply(const CollectiveObservable& obs, const PureState& state);

/// <ket|s_axis|ket> for a single spin, closed form.
double site_spin_mean(const SingleSpinKet& ket, Axis axis);

// --- dense route -----------------------------------------------------------

double mean_pure_dense(const PureState& state, const CollectiveObservable& obs);
double mean_pure_dense(const PureState& state, const Matrix& obs);
double variance_pure_dense(const PureState& state, const CollectiveObservable& obs);
double variance_pure_dense(const PureState& state, const Matrix& obs);

// --- ensemble-definition route ----------------------------------------------

// Weighted moments over the members; the variance is the variance of the
// mixture as a whole (second moment of the mixture minus squared mixture
// mean), the quantity whose trace-route twin it must equal.

double mean_ensemble(const Ensemble& ensemble, const CollectiveObservable& obs);
double mean_ensemble(const Ensemble& ensemble, const Matrix& obs);
double variance_ensemble(const Ensemble& ensemble, const CollectiveObservable& obs);
double variance_ensemble(const Ensemble& ensemble, const Matrix& obs);

/// Weighted average of the per-member variances. Diagnostic only: this is
/// NOT the mixture variance and no trace identity holds for it.
double within_member_variance(const Ensemble& ensemble, const CollectiveObservable& obs);

// --- trace route -------------------------------------------------------------

double mean_trace(const DensityOperator& rho, const CollectiveObservable& obs);
double mean_trace(const DensityOperator& rho, const Matrix& obs);
double variance_trace(const DensityOperator& rho, const CollectiveObservable& obs);
double variance_trace(const DensityOperator& rho, const Matrix& obs);

// --- product-state fast path --------------------------------------------------

/// O(N) time, O(1) extra space; works for arbitrary N (no dense cap).
/// mean = sum_i m_i and variance = sum_i (1/4 - m_i^2): the cross-site
/// covariances of a product state vanish and <s^2> = 1/4 per site.
MomentReport moments_product_fast(const ProductState& state, Axis axis);

/// Mixture moments through the fast path; every member must be a product
/// state.
MomentReport moments_product_fast(const Ensemble& ensemble, Axis axis);

// --- bases and matrix elements -------------------------------------------------

/// O_kk' = <k|O|k'> in a user-supplied orthonormal basis (validated to
/// 1e-10).
Matrix matrix_elements(const CollectiveObservable& obs, std::span<const PureState> basis);
Matrix matrix_elements(const Matrix& obs, std::span<const PureState> basis);

/// The diagonal-probability shortcut sum_k |<k|Phi>|^2 O_kk over the
/// computational basis. Correct only for observables diagonal in that
/// basis; kept as a first-class function so its failure on non-commuting
/// observables can be demonstrated.
double diagonal_probability_mean(const PureState& state, const CollectiveObservable& obs);
double diagonal_probability_mean(const PureState& state, const Matrix& obs);

}  // namespace spinmix
