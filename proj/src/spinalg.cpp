#include "nvsim/spinalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

Operator kron(const Operator& a, const Operator& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols();
  const Eigen::Index rb = b.rows(), cb = b.cols();
  Operator out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i) {
    for (Eigen::Index j = 0; j < ca; ++j) {
      out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    }
  }
  return out;
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

double max_abs(const Operator& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const Operator& h) {
  if (h.rows() != h.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  return max_abs(h - h.adjoint());
}

double unitarity_defect(const Operator& u) {
  return max_abs(u.adjoint() * u - Operator::Identity(u.cols(), u.cols()));
}

bool is_diagonal(const Operator& h) {
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      if (i != j && h(i, j) != Complex(0.0, 0.0)) {
        return false;
      }
    }
  }
  return true;
}

void require_hermitian(const Operator& h, std::string_view what) {
  if (h.rows() != h.cols()) {
    std::ostringstream msg;
    msg << what << " is not square (" << h.rows() << "x" << h.cols() << ")";
    throw DimensionError(msg.str());
  }
  const double defect = hermiticity_defect(h);
  const double scale = max_abs(h);
  if (defect > kHermiticityTol * scale) {
    std::ostringstream msg;
    msg << what << " is not Hermitian: ||H - H^dagger||_max = " << defect
        << " exceeds " << kHermiticityTol << " * ||H||_max = " << kHermiticityTol * scale;
    throw NumericalError(msg.str());
  }
}

Eigensystem eigh(const Operator& h) {
  require_hermitian(h, "eigh input");
  // Symmetrize so rounding noise in the lower triangle cannot leak in.
  const Operator sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigh: Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Operator propagator(const Eigensystem& es, double t) {
  const Eigen::Index n = es.values.size();
  Eigen::VectorXcd phases(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    phases(k) = std::polar(1.0, -es.values(k) * t);
  }
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

Operator propagator(const Operator& h, double t) { return propagator(eigh(h), t); }

State evolve(const Eigensystem& es, const State& psi, double t) {
  State coeffs = es.vectors.adjoint() * psi;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs(k) *= std::polar(1.0, -es.values(k) * t);
  }
  return es.vectors * coeffs;
}

double expect(const State& psi, const Operator& o) {
  if (o.rows() != o.cols() || o.rows() != psi.size()) {
    std::ostringstream msg;
    msg << "expect: state dimension " << psi.size() << " does not match operator dimension "
        << o.rows() << "x" << o.cols();
    throw DimensionError(msg.str());
  }
  const Complex value = psi.dot(o * psi);  // conjugates psi
  const double scale = std::max(1.0, max_abs(o)) * std::max(1.0, psi.squaredNorm());
  if (std::abs(value.imag()) > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "expect: imaginary part " << value.imag() << " exceeds tolerance; observable not Hermitian?";
    throw NumericalError(msg.str());
  }
  return value.real();
}

}  // namespace nvsim
