#include "spinmix/states.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace spinmix {

SignPattern::SignPattern(std::vector<int> s) : signs(std::move(s)) {
    if (signs.empty()) {
        throw std::invalid_argument("sign pattern must be non-empty");
    }
    for (int sign : signs) {
        if (sign != 1 && sign != -1) {
            throw std::invalid_argument("sign pattern entries must be +1 or -1");
        }
    }
}

bool SignPattern::balanced() const {
    return size() % 2 == 0 && sign_sum() == 0;
}

int SignPattern::sign_sum() const {
    int sum = 0;
    for (int sign : signs) {
        sum += sign;
    }
    return sum;
}

ProductState::ProductState(std::vector<SingleSpinKet> k) : kets(std::move(k)) {
    if (kets.empty()) {
        throw std::invalid_argument("product state needs at least one site");
    }
}

PureState ProductState::to_pure() const { return tensor_state(kets); }

int member_sites(const MemberState& state) {
    return std::visit([](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PureState>) {
            return s.n_sites;
        } else {
            return s.n_sites();
        }
    }, state);
}

PureState member_pure(const MemberState& state) {
    if (const auto* pure = std::get_if<PureState>(&state)) {
        return *pure;
    }
    return std::get<ProductState>(state).to_pure();
}

Ensemble::Ensemble(std::vector<Member> m) : members(std::move(m)) {
    if (members.empty()) {
        throw std::invalid_argument("ensemble must have at least one member");
    }
    const int sites = member_sites(members.front().state);
    double total = 0.0;
    for (const Member& member : members) {
        if (member.weight < 0.0 || member.weight > 1.0 + kTol) {
            throw std::invalid_argument("ensemble weights must lie in [0, 1]");
        }
        if (member_sites(member.state) != sites) {
            throw std::invalid_argument("ensemble members must share the same site count");
        }
        total += member.weight;
    }
    if (std::abs(total - 1.0) > kTol) {
        throw std::invalid_argument("ensemble weights must sum to 1 (got " +
                                    std::to_string(total) + ")");
    }
    for (Member& member : members) {
        member.weight /= total;
    }
}

int Ensemble::n_sites() const { return member_sites(members.front().state); }

bool Ensemble::all_product() const {
    for (const Member& member : members) {
        if (!std::holds_alternative<ProductState>(member.state)) {
            return false;
        }
    }
    return true;
}

DensityOperator DensityOperator::from_matrix(int n_sites, Matrix matrix) {
    require_dense(n_sites);
    if (matrix.rows() != matrix.cols() || matrix.rows() != Eigen::Index(1) << n_sites) {
        throw std::invalid_argument("density matrix dimension does not match 2^n_sites");
    }
    DensityOperator rho(n_sites, std::move(matrix));
    rho.validate();
    return rho;
}

void DensityOperator::validate() const {
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kTol) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    const Complex tr = matrix_.trace();
    if (std::abs(tr - Complex{1.0, 0.0}) > kTol) {
        throw std::invalid_argument("density matrix trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < kPsdFloor) {
        throw std::invalid_argument("density matrix is not positive semidefinite");
    }
}

ProductState pattern_state(Axis axis, const SignPattern& pattern) {
    std::vector<SingleSpinKet> kets;
    kets.reserve(pattern.signs.size());
    for (int sign : pattern.signs) {
        kets.push_back(axis_eigenket(axis, sign));
    }
    return ProductState(std::move(kets));
}

std::vector<SignPattern> balanced_patterns(int n_sites) {
    if (n_sites < 2 || n_sites % 2 != 0) {
        throw std::invalid_argument("balanced patterns require an even site count >= 2");
    }
    if (n_sites > kBalancedEnumerationCap) {
        throw std::length_error("balanced pattern enumeration capped at " +
                                std::to_string(kBalancedEnumerationCap) + " sites");
    }
    // Site 1 is the most significant mask bit and a set bit means -1, so
    // increasing mask order is lexicographic order with + before -.
    std::vector<SignPattern> patterns;
    const unsigned count = 1u << n_sites;
    for (unsigned mask = 0; mask < count; ++mask) {
        if (std::popcount(mask) != n_sites / 2) {
            continue;
        }
        std::vector<int> signs(n_sites);
        for (int i = 0; i < n_sites; ++i) {
            signs[i] = (mask >> (n_sites - 1 - i)) & 1u ? -1 : 1;
        }
        patterns.emplace_back(std::move(signs));
    }
    return patterns;
}

Ensemble balanced_mixture(Axis axis, int n_sites) {
    std::vector<SignPattern> patterns = balanced_patterns(n_sites);
    const double weight = 1.0 / static_cast<double>(patterns.size());
    std::vector<Ensemble::Member> members;
    members.reserve(patterns.size());
    for (const SignPattern& pattern : patterns) {
        members.push_back({weight, pattern_state(axis, pattern)});
    }
    return Ensemble(std::move(members));
}

DensityOperator maximally_mixed(int n_sites) {
    require_dense(n_sites);
    const Eigen::Index dim = Eigen::Index(1) << n_sites;
    Matrix matrix = Matrix::Identity(dim, dim) / static_cast<double>(dim);
    return DensityOperator(n_sites, std::move(matrix));
}

DensityOperator density_from_ensemble(const Ensemble& ensemble) {
    const int n = ensemble.n_sites();
    require_dense(n);
    const Eigen::Index dim = Eigen::Index(1) << n;
    Matrix matrix = Matrix::Zero(dim, dim);
    for (const Ensemble::Member& member : ensemble.members) {
        const PureState pure = member_pure(member.state);
        matrix.noalias() += member.weight * (pure.amplitudes * pure.amplitudes.adjoint());
    }
    return DensityOperator(n, std::move(matrix));
}

std::array<double, 3> polarization_vector(const DensityOperator& rho) {
    if (rho.n_sites() != 1) {
        throw std::invalid_argument("polarization vector is defined for a single spin");
    }
    std::array<double, 3> a{};
    double norm2 = 0.0;
    for (std::size_t i = 0; i < kAxes.size(); ++i) {
        const Complex component = (rho.matrix() * pauli(kAxes[i])).trace();
        if (std::abs(component.imag()) > kTol) {
            throw std::invalid_argument("polarization component has an imaginary part");
        }
        a[i] = component.real();
        norm2 += a[i] * a[i];
    }
    if (norm2 > 1.0 + 2.0 * kTol) {
        throw std::invalid_argument("polarization vector exceeds unit length");
    }
    return a;
}

}  // namespace spinmix
