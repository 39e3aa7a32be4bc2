// Dense complex operator algebra for few-level systems (dim 2..4).
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qotto {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr Cplx I_UNIT{0.0, 1.0};

// |k><l| on a dim-dimensional space
inline Mat ketbra(int dim, int k, int l) {
    Mat m = Mat::Zero(dim, dim);
    m(k, l) = 1.0;
    return m;
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline double hermiticity_defect(const Mat& m) {
    return max_abs(m - m.adjoint().eval());
}

struct Spectrum {
    RVec eigenvalues;  // ascending
    Mat eigenvectors;  // columns, unitary
};

// Eigendecomposition of a Hermitian matrix; rejects inputs whose
// anti-Hermitian part exceeds the tolerance.
inline Spectrum hermitian_spectrum(const Mat& a, double herm_tol = 1e-10) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("hermitian_spectrum: matrix not square");
    const double defect = hermiticity_defect(a);
    if (defect > herm_tol) {
        std::ostringstream os;
        os << "hermitian_spectrum: input not Hermitian, max|A - A^dag| = "
           << defect;
        throw std::invalid_argument(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_spectrum: eigensolver failed");
    return Spectrum{es.eigenvalues(), es.eigenvectors()};
}

// State of the system: complex Hermitian, unit trace, positive semidefinite.
struct DensityMatrix {
    Mat m;
    std::vector<std::string> basis_labels;  // may be empty

    int dim() const { return static_cast<int>(m.rows()); }

    // Invariant tolerances follow what an adaptive integrator can maintain:
    // Hermiticity 1e-12, trace 1e-9, min eigenvalue >= -1e-9.
    void validate() const {
        const double hd = hermiticity_defect(m);
        if (hd > 1e-12) {
            std::ostringstream os;
            os << "DensityMatrix: Hermiticity defect " << hd;
            throw std::runtime_error(os.str());
        }
        const double tr_err = std::abs(m.trace() - Cplx(1.0));
        if (tr_err > 1e-9) {
            std::ostringstream os;
            os << "DensityMatrix: trace deviates from 1 by " << tr_err;
            throw std::runtime_error(os.str());
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
        const double lam_min = es.eigenvalues().minCoeff();
        if (lam_min < -1e-9) {
            std::ostringstream os;
            os << "DensityMatrix: negative eigenvalue " << lam_min;
            throw std::runtime_error(os.str());
        }
    }

    static DensityMatrix pure(int dim, int level,
                              std::vector<std::string> labels = {}) {
        return DensityMatrix{ketbra(dim, level, level), std::move(labels)};
    }

    static DensityMatrix diagonal(const RVec& populations,
                                  std::vector<std::string> labels = {}) {
        Mat m = populations.cast<Cplx>().asDiagonal();
        return DensityMatrix{std::move(m), std::move(labels)};
    }

    static DensityMatrix maximally_mixed(int dim) {
        return DensityMatrix{Mat::Identity(dim, dim) / double(dim), {}};
    }
};

// S = -sum lambda ln lambda, k_B = 1. Eigenvalues in [-1e-9, 0) are treated
// as roundoff and clamped to 0; anything below that is a positivity error.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho.m, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam < -1e-9) {
            std::ostringstream os;
            os << "von_neumann_entropy: positivity violation, eigenvalue "
               << lam;
            throw std::runtime_error(os.str());
        }
        if (lam > 0.0) s -= lam * std::log(lam);
    }
    return s;
}

inline Cplx expectation(const DensityMatrix& rho, const Mat& op) {
    if (rho.m.rows() != op.rows() || rho.m.cols() != op.cols())
        throw std::invalid_argument("expectation: dimension mismatch");
    return (rho.m * op).trace();
}

inline double real_expectation(const DensityMatrix& rho, const Mat& op) {
    return expectation(rho, op).real();
}

// 1/2 * sum |eig(a - b)| for Hermitian a, b
inline double trace_distance(const Mat& a, const Mat& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qotto
