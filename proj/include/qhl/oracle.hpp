#pragma once

#include "qhl/model.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace qhl::oracle {

inline constexpr int kMaxQubits = 10;   // dense cap (1024 x 1024)

// Dense full Hamiltonian a_i X_i + sum c_pq Z_p Z_q, computational basis.
inline MatrixXc dense_hamiltonian(const HamiltonianSpec& spec, int drive) {
    if (spec.n > kMaxQubits)
        throw std::invalid_argument("dense_hamiltonian: n exceeds dense cap");
    if (drive < 0 || drive >= spec.n)
        throw std::invalid_argument("dense_hamiltonian: drive out of range");
    const int dim = 1 << spec.n;
    MatrixXc H = MatrixXc::Zero(dim, dim);
    const cplx drive_amp = spec.a[drive] * std::exp(cplx(0.0, spec.phi));
    for (int s = 0; s < dim; ++s) {
        // ZZ diagonal
        double diag = 0.0;
        for (int p = 0; p < spec.n; ++p)
            for (int q = p + 1; q < spec.n; ++q) {
                const int zp = bit_of(s, p, spec.n) ? -1 : 1;
                const int zq = bit_of(s, q, spec.n) ? -1 : 1;
                diag += spec.coupling(p, q) * zp * zq;
            }
        H(s, s) = diag;
        // X on the drive qubit; for phi != 0, (cos phi X - sin phi Y)
        // couples |...0...> -> |...1...> with amplitude a e^{+i phi} on the
        // <0|H|1> element.
        const int flipped = s ^ unit_bit(drive, spec.n);
        if (bit_of(s, drive, spec.n) == 0)
            H(s, flipped) = drive_amp;            // row <s,bit=0| col |bit=1>
        else
            H(s, flipped) = std::conj(drive_amp);
    }
    return H;
}

// Matrix exponential exp(-i H t) via Hermitian eigendecomposition.
inline MatrixXc dense_propagator(const MatrixXc& H, double t) {
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("dense_propagator: H not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(H);
    const auto& V = es.eigenvectors();
    Eigen::VectorXcd phases(H.rows());
    for (Eigen::Index k = 0; k < H.rows(); ++k)
        phases(k) = std::exp(cplx(0.0, -es.eigenvalues()(k) * t));
    return V * phases.asDiagonal() * V.adjoint();
}

// Largest matrix element of U connecting different invariant subspaces.
inline double verify_block_structure(const MatrixXc& U, const std::vector<SubspacePair>& pairs) {
    const Eigen::Index dim = U.rows();
    std::vector<int> group(dim, -1);
    for (size_t k = 0; k < pairs.size(); ++k) {
        group[pairs[k].v_m] = static_cast<int>(k);
        group[pairs[k].v_n] = static_cast<int>(k);
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            if (group[i] != group[j])
                worst = std::max(worst, std::abs(U(i, j)));
    return worst;
}

} // namespace qhl::oracle
