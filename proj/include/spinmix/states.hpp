#pragma once

#include <array>
#include <variant>
#include <vector>

#include "spinmix/core.hpp"

// Builders and validators for the states the library models: product states
// of axis eigenkets, balanced-ordering mixtures, the maximally mixed state,
// generic ensembles, and density operators built from them.

namespace spinmix {

/// Ordered list of +-1 signs, one per site.
struct SignPattern {
    std::vector<int> signs;

    explicit SignPattern(std::vector<int> signs);

    int size() const { return static_cast<int>(signs.size()); }
    /// Equal counts of +1 and -1 (requires an even length).
    bool balanced() const;
    /// Sum of signs; the collective eigenvalue along the pattern axis is half this.
    int sign_sum() const;
};

/// Unentangled pure state: one ket per site, kept unexpanded so that the
/// O(N) product-state routes work far beyond the dense cap.
struct ProductState {
    std::vector<SingleSpinKet> kets;

    explicit ProductState(std::vector<SingleSpinKet> kets);

    int n_sites() const { return static_cast<int>(kets.size()); }
    /// Dense expansion; subject to the dense cap.
    PureState to_pure() const;
};

/// A state an ensemble member may hold: dense or unexpanded product form.
using MemberState = std::variant<PureState, ProductState>;

int member_sites(const MemberState& state);
/// Dense view of a member (expands product states; subject to the dense cap).
PureState member_pure(const MemberState& state);

/// Weighted collection of pure states {p_i, |Phi_i>}. Members need not be
/// orthogonal. Weights are validated to sum to 1 within 1e-12 and then
/// renormalized exactly.
struct Ensemble {
    struct Member {
        double weight;
        MemberState state;
    };

    std::vector<Member> members;

    explicit Ensemble(std::vector<Member> members);

    int n_sites() const;
    bool all_product() const;
};

/// 2^n x 2^n Hermitian, unit-trace, positive-semidefinite matrix.
///
/// `from_matrix` validates all three invariants (PSD down to a -1e-10
/// floor, under the eigenvalue rounding of rank-deficient inputs); the
/// library builders below construct directly from representations that
/// satisfy them and `validate()` re-checks on demand.
class DensityOperator {
  public:
    static DensityOperator from_matrix(int n_sites, Matrix matrix);

    int n_sites() const { return n_sites_; }
    const Matrix& matrix() const { return matrix_; }
    Eigen::Index dim() const { return matrix_.rows(); }

    /// Throws std::invalid_argument when any invariant fails.
    void validate() const;

    /// Hermiticity and trace at 1e-12; eigenvalues >= -1e-10.
    static constexpr double kPsdFloor = -1e-10;

  private:
    DensityOperator(int n_sites, Matrix matrix) : n_sites_(n_sites), matrix_(std::move(matrix)) {}

    friend DensityOperator maximally_mixed(int n_sites);
    friend DensityOperator density_from_ensemble(const Ensemble& ensemble);

    int n_sites_;
    Matrix matrix_;
};

/// Product of axis eigenkets, site i carrying sign pattern[i]: an eigenstate
/// of the collective spin component along `axis` with eigenvalue sign_sum/2.
ProductState pattern_state(Axis axis, const SignPattern& pattern);

/// All sign patterns of length n with equal +/- counts, in lexicographic
/// order with + before -. Exactly n!/((n/2)!(n/2)!) of them.
std::vector<SignPattern> balanced_patterns(int n_sites);

/// Enumeration cap for balanced_patterns: binomial(20,10) = 184756 members.
inline constexpr int kBalancedEnumerationCap = 20;

/// The uniform mixture of all balanced-ordering product states along `axis`,
/// each with weight 1/binomial(n, n/2).
Ensemble balanced_mixture(Axis axis, int n_sites);

/// Totally unpolarized state I/2^n.
DensityOperator maximally_mixed(int n_sites);

/// rho = sum_i p_i |Phi_i><Phi_i|. For a single pure member this is the
/// projector on that member.
DensityOperator density_from_ensemble(const Ensemble& ensemble);

/// Polarization vector a with a_alpha = Tr(rho sigma_alpha) for a single
/// spin; ||a|| <= 1, with equality exactly for pure states.
std::array<double, 3> polarization_vector(const DensityOperator& rho);

}  // namespace spinmix
