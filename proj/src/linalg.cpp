#include "ndkf/linalg.hpp"

#include <cmath>
#include <sstream>

namespace ndkf {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotSPD: return "NotSPD";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidStage: return "InvalidStage";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::BadArgs: return "BadArgs";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

namespace linalg {

namespace {

constexpr double kPowerTolerance = 1e-10;
constexpr int kPowerMaxIterations = 10000;
constexpr int kPowerRestarts = 4;

std::string shape(const Matrix &m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

} // namespace

Matrix symmetrize(const Matrix &m) { return 0.5 * (m + m.transpose()); }

bool all_finite(const Matrix &m) { return m.allFinite(); }

Matrix cholesky_lower(const Matrix &m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "cholesky of non-square " + shape(m));
    }
    if (!m.allFinite()) {
        throw Error(ErrorKind::NotSPD, "matrix has non-finite entries");
    }
    const Eigen::Index n = m.rows();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
        throw Error(ErrorKind::NotSPD, "matrix is not symmetric");
    }

    Matrix lower = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double pivot = m(j, j) - lower.row(j).head(j).squaredNorm();
        if (!(pivot > 0.0)) {
            std::ostringstream os;
            os << "non-positive pivot " << pivot << " at column " << j;
            throw Error(ErrorKind::NotSPD, os.str());
        }
        lower(j, j) = std::sqrt(pivot);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double dot = lower.row(i).head(j).dot(lower.row(j).head(j));
            lower(i, j) = (m(i, j) - dot) / lower(j, j);
        }
    }
    return lower;
}

Matrix invert_spd(const Matrix &m) {
    if (m.rows() == 1 && m.cols() == 1) {
        const double v = m(0, 0);
        if (!std::isfinite(v) || !(v > 0.0)) {
            throw Error(ErrorKind::NotSPD, "non-positive scalar pivot");
        }
        return Matrix::Constant(1, 1, 1.0 / v);
    }
    const Matrix lower = cholesky_lower(m);
    Matrix inv = Matrix::Identity(m.rows(), m.cols());
    lower.triangularView<Eigen::Lower>().solveInPlace(inv);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
    return symmetrize(inv);
}

double spectral_norm(const Matrix &m) {
    if (!m.allFinite()) {
        throw Error(ErrorKind::NoConvergence, "spectral norm of non-finite matrix");
    }
    const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return 0.0;
    }
    // Work on the scaled Gram matrix so squaring cannot overflow.
    const Matrix gram = (m / scale).transpose() * (m / scale);
    const Eigen::Index n = gram.rows();

    for (int restart = 0; restart < kPowerRestarts; ++restart) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            // Deterministic start; each restart tilts the vector differently.
            v(i) = 1.0 + 0.37 * static_cast<double>(restart) *
                             std::sin(1.0 + static_cast<double>(i) * (restart + 1));
        }
        v.normalize();

        // Iterate with G^(2^j): the power is squared each step so nearly equal
        // leading singular values still separate in a few dozen iterations.
        Matrix power = gram;
        for (int it = 0; it < kPowerMaxIterations; ++it) {
            Vector next = power * v;
            const double len = next.norm();
            if (!(len > 0.0)) {
                break; // start vector in the numerical null space
            }
            v = next / len;
            const Vector gv = gram * v;
            const double lambda = v.dot(gv);
            // For symmetric G the Rayleigh quotient lies within ‖Gv − λv‖ of an eigenvalue.
            if ((gv - lambda * v).norm() <= kPowerTolerance * lambda) {
                return scale * std::sqrt(std::max(lambda, 0.0));
            }
            const double peak = power.cwiseAbs().maxCoeff();
            if (peak > 0.0 && std::isfinite(peak)) {
                power = (power / peak) * (power / peak);
            }
        }
    }
    throw Error(ErrorKind::NoConvergence, "power iteration did not reach 1e-10 on " + shape(m));
}

} // namespace linalg
} // namespace ndkf
