#include "spinmix/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace spinmix {

namespace {

constexpr double kImagTol = 1e-10;
constexpr double kVarianceFloor = -1e-10;

double real_checked(Complex value, const char* what) {
    if (std::abs(value.imag()) > kImagTol) {
        throw std::invalid_argument(std::string(what) +
                                    " has a non-negligible imaginary part (" +
                                    std::to_string(value.imag()) +
                                    "); the observable is not Hermitian");
    }
    return value.real();
}

void require_same_sites(int state_sites, int obs_sites) {
    if (state_sites != obs_sites) {
        throw std::invalid_argument("observable acts on " + std::to_string(obs_sites) +
                                    " sites but the state has " + std::to_string(state_sites));
    }
}

void require_same_dim(Eigen::Index state_dim, const Matrix& obs) {
    if (obs.rows() != obs.cols() || obs.rows() != state_dim) {
        throw std::invalid_argument("dense observable dimension mismatch");
    }
}

// O * M column by column, without materializing O.
Matrix apply_to_columns(const CollectiveObservable& obs, const Matrix& m) {
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    const int n = obs.n_sites;
    for (const LocalSpinTerm& term : obs.terms) {
        const Matrix site_op = term.coefficient * spin_component(term.axis);
        for (Eigen::Index col = 0; col < m.cols(); ++col) {
            Vector column = m.col(col);
            detail::apply_site_operator(site_op, term.site, n, column);
            out.col(col) += column;
        }
    }
    return out;
}

template <typename Obs>
std::pair<double, double> ensemble_moments(const Ensemble& ensemble, const Obs& obs) {
    double mean = 0.0;
    double second = 0.0;
    for (const Ensemble::Member& member : ensemble.members) {
        const PureState pure = member_pure(member.state);
        const double m = mean_pure_dense(pure, obs);
        const double v = variance_pure_dense(pure, obs);
        mean += member.weight * m;
        second += member.weight * (v + m * m);
    }
    return {mean, second};
}

void require_orthonormal(std::span<const PureState> basis) {
    if (basis.empty()) {
        throw std::invalid_argument("matrix_elements needs a non-empty basis");
    }
    const Eigen::Index dim = basis.front().dim();
    for (const PureState& state : basis) {
        if (state.dim() != dim) {
            throw std::invalid_argument("basis states have mismatched dimensions");
        }
    }
    for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = i; j < basis.size(); ++j) {
            const Complex overlap = basis[i].amplitudes.dot(basis[j].amplitudes);
            const Complex expected = i == j ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
            if (std::abs(overlap - expected) > 1e-10) {
                throw std::invalid_argument("matrix_elements requires an orthonormal basis");
            }
        }
    }
}

}  // namespace

CollectiveObservable::CollectiveObservable(int sites, std::vector<LocalSpinTerm> raw)
    : n_sites(sites) {
    if (n_sites < 1) {
        throw std::invalid_argument("collective observable needs at least one site");
    }
    for (const LocalSpinTerm& term : raw) {
        if (term.site < 1 || term.site > n_sites) {
            throw std::out_of_range("observable term site " + std::to_string(term.site) +
                                    " out of range [1, " + std::to_string(n_sites) + "]");
        }
        if (!std::isfinite(term.coefficient)) {
            throw std::invalid_argument("observable coefficients must be finite");
        }
    }
    std::sort(raw.begin(), raw.end(), [](const LocalSpinTerm& a, const LocalSpinTerm& b) {
        return std::tie(a.site, a.axis) < std::tie(b.site, b.axis);
    });
    for (const LocalSpinTerm& term : raw) {
        if (!terms.empty() && terms.back().site == term.site && terms.back().axis == term.axis) {
            terms.back().coefficient += term.coefficient;
        } else {
            terms.push_back(term);
        }
    }
    std::erase_if(terms, [](const LocalSpinTerm& t) { return t.coefficient == 0.0; });
}

CollectiveObservable collective(Axis axis, int n_sites) {
    if (n_sites < 1) {
        throw std::invalid_argument("collective observable needs at least one site");
    }
    std::vector<LocalSpinTerm> terms;
    terms.reserve(n_sites);
    for (int site = 1; site <= n_sites; ++site) {
        terms.push_back({site, axis, 1.0});
    }
    return {n_sites, std::move(terms)};
}

std::string method_name(Method method) {
    switch (method) {
        case Method::Dense: return "dense";
        case Method::Trace: return "trace";
        case Method::ProductFast: return "product-fast";
    }
    throw std::invalid_argument("invalid method");
}

MomentReport::MomentReport(double mean_value, double variance_value, Method m)
    : mean(mean_value), variance(variance_value), method(m) {
    if (!(variance >= kVarianceFloor)) {
        throw std::invalid_argument("variance " + std::to_string(variance) +
                                    " below the numerical floor");
    }
}

Matrix materialize(const CollectiveObservable& obs) {
    require_dense(obs.n_sites);
    const Eigen::Index dim = Eigen::Index(1) << obs.n_sites;
    Matrix out = Matrix::Zero(dim, dim);
    for (const LocalSpinTerm& term : obs.terms) {
        out += term.coefficient * embed_site_operator(spin_component(term.axis), term.site,
                                                      obs.n_sites);
    }
    return out;
}

Vector apply(const CollectiveObservable& obs, const PureState& state) {
    require_same_sites(state.n_sites, obs.n_sites);
    Vector out = Vector::Zero(state.dim());
    for (const LocalSpinTerm& term : obs.terms) {
        Vector scratch = state.amplitudes;
        detail::apply_site_operator(term.coefficient * spin_component(term.axis), term.site,
                                    state.n_sites, scratch);
        out += scratch;
    }
    return out;
}

double site_spin_mean(const SingleSpinKet& ket, Axis axis) {
    const Complex cross = std::conj(ket.up) * ket.down;
    switch (axis) {
        case Axis::X: return cross.real();
        case Axis::Y: return cross.imag();
        case Axis::Z: return 0.5 * (std::norm(ket.up) - std::norm(ket.down));
    }
    throw std::invalid_argument("invalid axis");
}

double mean_pure_dense(const PureState& state, const CollectiveObservable& obs) {
    const Vector applied = apply(obs, state);
    return real_checked(state.amplitudes.dot(applied), "mean");
}

double mean_pure_dense(const PureState& state, const Matrix& obs) {
    require_same_dim(state.dim(), obs);
    return real_checked(state.amplitudes.dot(obs * state.amplitudes), "mean");
}

double variance_pure_dense(const PureState& state, const CollectiveObservable& obs) {
    const Vector applied = apply(obs, state);
    const double mean = real_checked(state.amplitudes.dot(applied), "mean");
    // Real coefficients make the observable Hermitian, so <O^2> = |O Phi|^2.
    return applied.squaredNorm() - mean * mean;
}

double variance_pure_dense(const PureState& state, const Matrix& obs) {
    require_same_dim(state.dim(), obs);
    const Vector applied = obs * state.amplitudes;
    const double mean = real_checked(state.amplitudes.dot(applied), "mean");
    const double second = real_checked(state.amplitudes.dot(obs * applied), "second moment");
    return second - mean * mean;
}

double mean_ensemble(const Ensemble& ensemble, const CollectiveObservable& obs) {
    return ensemble_moments(ensemble, obs).first;
}

double mean_ensemble(const Ensemble& ensemble, const Matrix& obs) {
    return ensemble_moments(ensemble, obs).first;
}

double variance_ensemble(const Ensemble& ensemble, const CollectiveObservable& obs) {
    const auto [mean, second] = ensemble_moments(ensemble, obs);
    return second - mean * mean;
}

double variance_ensemble(const Ensemble& ensemble, const Matrix& obs) {
    const auto [mean, second] = ensemble_moments(ensemble, obs);
    return second - mean * mean;
}

double within_member_variance(const Ensemble& ensemble, const CollectiveObservable& obs) {
    double total = 0.0;
    for (const Ensemble::Member& member : ensemble.members) {
        total += member.weight * variance_pure_dense(member_pure(member.state), obs);
    }
    return total;
}

double mean_trace(const DensityOperator& rho, const CollectiveObservable& obs) {
    require_same_sites(rho.n_sites(), obs.n_sites);
    return real_checked(apply_to_columns(obs, rho.matrix()).trace(), "trace mean");
}

double mean_trace(const DensityOperator& rho, const Matrix& obs) {
    require_same_dim(rho.dim(), obs);
    return real_checked(rho.matrix().cwiseProduct(obs.transpose()).sum(), "trace mean");
}

double variance_trace(const DensityOperator& rho, const CollectiveObservable& obs) {
    require_same_sites(rho.n_sites(), obs.n_sites);
    const Matrix once = apply_to_columns(obs, rho.matrix());
    const double mean = real_checked(once.trace(), "trace mean");
    const double second = real_checked(apply_to_columns(obs, once).trace(),
                                       "trace second moment");
    return second - mean * mean;
}

double variance_trace(const DensityOperator& rho, const Matrix& obs) {
    require_same_dim(rho.dim(), obs);
    const double mean = real_checked(rho.matrix().cwiseProduct(obs.transpose()).sum(),
                                     "trace mean");
    const Matrix squared = obs * obs;
    const double second = real_checked(rho.matrix().cwiseProduct(squared.transpose()).sum(),
                                       "trace second moment");
    return second - mean * mean;
}

MomentReport moments_product_fast(const ProductState& state, Axis axis) {
    double mean = 0.0;
    double variance = 0.0;
    for (const SingleSpinKet& ket : state.kets) {
        const double m = site_spin_mean(ket, axis);
        mean += m;
        variance += 0.25 - m * m;  // <s^2> = 1/4 for every spin-1/2 ket
    }
    return {mean, variance, Method::ProductFast};
}

MomentReport moments_product_fast(const Ensemble& ensemble, Axis axis) {
    if (!ensemble.all_product()) {
        throw std::invalid_argument(
            "the product-state fast path needs every ensemble member in product form");
    }
    double mean = 0.0;
    double second = 0.0;
    for (const Ensemble::Member& member : ensemble.members) {
        const MomentReport r = moments_product_fast(std::get<ProductState>(member.state), axis);
        mean += member.weight * r.mean;
        second += member.weight * (r.variance + r.mean * r.mean);
    }
    return {mean, second - mean * mean, Method::ProductFast};
}

Matrix matrix_elements(const CollectiveObservable& obs, std::span<const PureState> basis) {
    require_orthonormal(basis);
    const auto size = static_cast<Eigen::Index>(basis.size());
    Matrix out(size, size);
    for (Eigen::Index j = 0; j < size; ++j) {
        const Vector applied = apply(obs, basis[j]);
        for (Eigen::Index i = 0; i < size; ++i) {
            out(i, j) = basis[i].amplitudes.dot(applied);
        }
    }
    return out;
}

Matrix matrix_elements(const Matrix& obs, std::span<const PureState> basis) {
    require_orthonormal(basis);
    require_same_dim(basis.front().dim(), obs);
    const auto size = static_cast<Eigen::Index>(basis.size());
    Matrix out(size, size);
    for (Eigen::Index j = 0; j < size; ++j) {
        const Vector applied = obs * basis[j].amplitudes;
        for (Eigen::Index i = 0; i < size; ++i) {
            out(i, j) = basis[i].amplitudes.dot(applied);
        }
    }
    return out;
}

double diagonal_probability_mean(const PureState& state, const CollectiveObservable& obs) {
    return diagonal_probability_mean(state, materialize(obs));
}

double diagonal_probability_mean(const PureState& state, const Matrix& obs) {
    require_same_dim(state.dim(), obs);
    double total = 0.0;
    for (Eigen::Index k = 0; k < state.dim(); ++k) {
        total += std::norm(state.amplitudes(k)) *
                 real_checked(obs(k, k), "diagonal matrix element");
    }
    return total;
}

}  // namespace spinmix
