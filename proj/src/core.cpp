#include "spinmix/core.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace spinmix {

namespace {

std::atomic<int> g_dense_site_cap{kDefaultDenseSiteCap};

const Complex kI{0.0, 1.0};

}  // namespace

char axis_name(Axis axis) {
    switch (axis) {
        case Axis::X: return 'x';
        case Axis::Y: return 'y';
        case Axis::Z: return 'z';
    }
    throw std::invalid_argument("invalid axis");
}

Axis axis_from_name(char name) {
    switch (name) {
        case 'x': case 'X': return Axis::X;
        case 'y': case 'Y': return Axis::Y;
        case 'z': case 'Z': return Axis::Z;
        default:
            throw std::invalid_argument(std::string("unknown axis name: ") + name);
    }
}

int dense_site_cap() { return g_dense_site_cap.load(); }

void set_dense_site_cap(int cap) {
    if (cap < 1) {
        throw std::invalid_argument("dense site cap must be >= 1");
    }
    g_dense_site_cap.store(cap);
}

void require_dense(int n_sites) {
    if (n_sites < 1) {
        throw std::invalid_argument("site count must be >= 1");
    }
    if (n_sites > dense_site_cap()) {
        throw std::length_error("dense representation refused: " + std::to_string(n_sites) +
                                " sites exceeds the dense cap of " +
                                std::to_string(dense_site_cap()) +
                                " (use the product-state fast path for large assemblies)");
    }
}

SingleSpinKet::SingleSpinKet(Complex up_amplitude, Complex down_amplitude)
    : up(up_amplitude), down(down_amplitude) {
    const double norm2 = std::norm(up) + std::norm(down);
    if (std::abs(norm2 - 1.0) > kTol) {
        throw std::invalid_argument("single-spin ket is not unit norm (|a|^2+|b|^2 = " +
                                    std::to_string(norm2) + ")");
    }
}

PureState::PureState(int sites, Vector amps) : n_sites(sites), amplitudes(std::move(amps)) {
    if (n_sites < 1) {
        throw std::invalid_argument("pure state needs at least one site");
    }
    if (amplitudes.size() != Eigen::Index(1) << n_sites) {
        throw std::invalid_argument("amplitude count does not match 2^n_sites");
    }
    if (std::abs(amplitudes.squaredNorm() - 1.0) > kTol) {
        throw std::invalid_argument("pure state is not unit norm");
    }
}

Matrix pauli(Axis axis) {
    Matrix m = Matrix::Zero(2, 2);
    switch (axis) {
        case Axis::X:
            m(0, 1) = 1.0;
            m(1, 0) = 1.0;
            break;
        case Axis::Y:
            m(0, 1) = -kI;
            m(1, 0) = kI;
            break;
        case Axis::Z:
            m(0, 0) = 1.0;
            m(1, 1) = -1.0;
            break;
    }
    return m;
}

Matrix spin_component(Axis axis) { return 0.5 * pauli(axis); }

SingleSpinKet axis_eigenket(Axis axis, int sign) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("eigenket sign must be +1 or -1");
    }
    const double r = 1.0 / std::sqrt(2.0);
    const double s = static_cast<double>(sign);
    switch (axis) {
        case Axis::X: return {r, s * r};
        case Axis::Y: return {r, kI * s * r};
        case Axis::Z: return sign > 0 ? SingleSpinKet{1.0, 0.0} : SingleSpinKet{0.0, 1.0};
    }
    throw std::invalid_argument("invalid axis");
}

PureState tensor_state(std::span<const SingleSpinKet> kets) {
    if (kets.empty()) {
        throw std::invalid_argument("tensor_state: empty ket list");
    }
    const int n = static_cast<int>(kets.size());
    require_dense(n);
    Vector amps = Vector::Ones(1);
    for (const SingleSpinKet& ket : kets) {
        Vector next(amps.size() * 2);
        for (Eigen::Index i = 0; i < amps.size(); ++i) {
            next(2 * i) = amps(i) * ket.up;
            next(2 * i + 1) = amps(i) * ket.down;
        }
        amps = std::move(next);
    }
    return {n, std::move(amps)};
}

PureState tensor_state(const std::vector<SingleSpinKet>& kets) {
    return tensor_state(std::span<const SingleSpinKet>(kets));
}

Matrix embed_site_operator(const Matrix& op, int site, int n_sites) {
    if (op.rows() != 2 || op.cols() != 2) {
        throw std::invalid_argument("embed_site_operator expects a 2x2 operator");
    }
    require_dense(n_sites);
    if (site < 1 || site > n_sites) {
        throw std::out_of_range("site " + std::to_string(site) + " out of range [1, " +
                                std::to_string(n_sites) + "]");
    }
    const Eigen::Index dim = Eigen::Index(1) << n_sites;
    const Eigen::Index bit = Eigen::Index(1) << (n_sites - site);  // site 1 = MSB
    Matrix out = Matrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index base = k & ~bit;
        const int col = (k & bit) ? 1 : 0;
        out(base, k) += op(0, col);
        out(base | bit, k) += op(1, col);
    }
    return out;
}

namespace detail {

void apply_site_operator(const Matrix& op, int site, int n_sites, Vector& amplitudes) {
    const Eigen::Index bit = Eigen::Index(1) << (n_sites - site);
    const Eigen::Index dim = amplitudes.size();
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (k & bit) {
            continue;
        }
        const Complex a0 = amplitudes(k);
        const Complex a1 = amplitudes(k | bit);
        amplitudes(k) = op(0, 0) * a0 + op(0, 1) * a1;
        amplitudes(k | bit) = op(1, 0) * a0 + op(1, 1) * a1;
    }
}

}  // namespace detail

}  // namespace spinmix
