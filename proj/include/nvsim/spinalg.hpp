#pragma once

// Dense complex linear algebra for Hilbert spaces of dimension <= 81.
//
// All operators are stored densely. Frequencies are angular (rad/s) and times
// are seconds, so a propagator is exp(-i H t) with no further factors.

#include <complex>
#include <string_view>

#include <Eigen/Dense>

namespace nvsim {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using State = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kUnitarityTol = 1e-9;

struct Eigensystem {
  RealVector values;  // ascending
  Operator vectors;   // columns are eigenvectors
};

Operator kron(const Operator& a, const Operator& b);

Operator commutator(const Operator& a, const Operator& b);

double max_abs(const Operator& m);

// ||H - H^dagger||_max
double hermiticity_defect(const Operator& h);

// ||U^dagger U - I||_max
double unitarity_defect(const Operator& u);

bool is_diagonal(const Operator& h);

// Throws NumericalError carrying ||H - H^dagger||_max when H fails the
// relative Hermiticity gate.
void require_hermitian(const Operator& h, std::string_view what = "operator");

Eigensystem eigh(const Operator& h);

Operator propagator(const Eigensystem& es, double t);
Operator propagator(const Operator& h, double t);

// exp(-i H t) psi without forming the propagator.
State evolve(const Eigensystem& es, const State& psi, double t);

double expect(const State& psi, const Operator& o);

}  // namespace nvsim
