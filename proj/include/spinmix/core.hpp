#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Single-spin primitives (Pauli algebra, spin components, axis eigenkets)
// and tensor-product assembly of multi-spin states and operators.
//
// Conventions used throughout the library:
//   - computational z-basis; site 1 is the most significant bit of a basis
//     index, so |+-> on two spins is basis vector e_1,
//   - reduced units: spin components are sigma/2 with eigenvalues +-1/2,
//   - all values are immutable after construction and every operation is a
//     pure function.

namespace spinmix {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Measurement/quantization axes, ordered X < Y < Z for serialization.
enum class Axis { X, Y, Z };

constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

char axis_name(Axis axis);
Axis axis_from_name(char name);  // accepts 'x','y','z' (either case)

/// Absolute tolerance for numeric equality at dense sizes (n <= 12).
inline constexpr double kTol = 1e-12;

/// Dense representations refuse more sites than this by default; a
/// 2^12-dimensional complex matrix is ~268 MB.
inline constexpr int kDefaultDenseSiteCap = 12;

int dense_site_cap();
void set_dense_site_cap(int cap);

/// Throws std::length_error when 2^n_sites exceeds the dense cap.
void require_dense(int n_sites);

/// A single spin-1/2 ket: amplitudes on |+> and |-> in the z-basis.
/// Unit norm is enforced to 1e-12 at construction.
struct SingleSpinKet {
    Complex up;
    Complex down;

    SingleSpinKet(Complex up_amplitude, Complex down_amplitude);

    Eigen::Vector2cd amplitudes() const { return {up, down}; }
};

/// Pure state of an n-site spin assembly: 2^n amplitudes over the
/// computational basis, unit norm within 1e-12.
struct PureState {
    int n_sites;
    Vector amplitudes;

    PureState(int n_sites, Vector amplitudes);

    Eigen::Index dim() const { return amplitudes.size(); }
};

/// Standard Pauli matrix in the z-basis.
Matrix pauli(Axis axis);

/// Spin component s = sigma/2; eigenvalues exactly +-1/2.
Matrix spin_component(Axis axis);

/// Normalized eigenket of spin_component(axis) with eigenvalue sign/2.
/// Phase convention: real positive leading amplitude where possible,
/// |-y> = (|+> - i|->)/sqrt(2).
SingleSpinKet axis_eigenket(Axis axis, int sign);

/// Tensor product of single-spin kets; kets[0] becomes site 1 (the most
/// significant basis bit).
PureState tensor_state(std::span<const SingleSpinKet> kets);
PureState tensor_state(const std::vector<SingleSpinKet>& kets);

/// op (2x2) acting on `site` (1-based), identity on the other n-1 sites.
Matrix embed_site_operator(const Matrix& op, int site, int n_sites);

namespace detail {

/// In-place action of a 2x2 operator on one site of a 2^n amplitude
/// vector. Shared by the observable routes; O(2^n).
void apply_site_operator(const Matrix& op, int site, int n_sites, Vector& amplitudes);

}  // namespace detail

}  // namespace spinmix
