#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qhl {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;

// Bit convention: qubit 0 is the leftmost bit of a bitstring, so basis state
// |b_0 b_1 ... b_{n-1}> has integer index read most-significant-first.
inline int bit_of(uint32_t state, int qubit, int n) {
    return (state >> (n - 1 - qubit)) & 1u;
}

inline uint32_t unit_bit(int qubit, int n) {
    return 1u << (n - 1 - qubit);
}

inline std::string bitstring(uint32_t state, int n) {
    std::string s(n, '0');
    for (int q = 0; q < n; ++q)
        if (bit_of(state, q, n)) s[q] = '1';
    return s;
}

inline uint32_t parse_bitstring(const std::string& s) {
    uint32_t v = 0;
    for (char c : s) {
        v <<= 1;
        if (c == '1') v |= 1u;
        else if (c != '0') throw std::invalid_argument("bad bitstring: " + s);
    }
    return v;
}

// Index of the unordered qubit pair (p,q), p<q, in the row-major enumeration
// (0,1),(0,2),...,(0,n-1),(1,2),...
inline int pair_index(int n, int p, int q) {
    if (p > q) std::swap(p, q);
    return p * n - p * (p + 1) / 2 + (q - p - 1);
}

inline int num_pairs(int n) { return n * (n - 1) / 2; }

// ---------------------------------------------------------------------------
// HamiltonianSpec: H_i = a_i X_i + sum_{p<q} c_pq Z_p Z_q  (rad/us units)
// ---------------------------------------------------------------------------
struct HamiltonianSpec {
    int n = 0;
    std::vector<double> a;            // per-qubit X-drive coefficient
    Eigen::MatrixXd c;                // symmetric coupling matrix, zero diagonal
    double phi = 0.0;                 // drive phase (rad)

    HamiltonianSpec() = default;
    HamiltonianSpec(int n_, std::vector<double> a_, Eigen::MatrixXd c_, double phi_ = 0.0)
        : n(n_), a(std::move(a_)), c(std::move(c_)), phi(phi_) {
        validate();
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("HamiltonianSpec: need n >= 2");
        if (static_cast<int>(a.size()) != n)
            throw std::invalid_argument("HamiltonianSpec: a must have length n");
        if (c.rows() != n || c.cols() != n)
            throw std::invalid_argument("HamiltonianSpec: c must be n x n");
        for (int i = 0; i < n; ++i) {
            if (c(i, i) != 0.0)
                throw std::invalid_argument("HamiltonianSpec: c diagonal must be zero");
            for (int j = i + 1; j < n; ++j)
                if (c(i, j) != c(j, i))
                    throw std::invalid_argument("HamiltonianSpec: c must be symmetric");
        }
    }

    double coupling(int p, int q) const { return c(p, q); }
};

// ---------------------------------------------------------------------------
// SubspacePair: one invariant subspace of H_drive, spanned by (|v_m>, |v_n>)
// with v_m XOR v_n = e_drive and bit `drive` of v_m equal to 0.
// ---------------------------------------------------------------------------
struct SubspacePair {
    int n = 0;
    int drive = 0;
    uint32_t v_m = 0;                 // logical zero
    uint32_t v_n = 0;                 // logical one
    std::vector<int> lambda;          // +-1 per unordered pair (p<q), on v_m

    SubspacePair() = default;
    SubspacePair(int n_, int drive_, uint32_t vm) : n(n_), drive(drive_), v_m(vm) {
        if (bit_of(vm, drive_, n_) != 0)
            throw std::invalid_argument("SubspacePair: bit `drive` of v_m must be 0");
        v_n = vm | unit_bit(drive_, n_);
        lambda.resize(num_pairs(n_));
        for (int p = 0; p < n_; ++p)
            for (int q = p + 1; q < n_; ++q)
                lambda[pair_index(n_, p, q)] =
                    bit_of(vm, p, n_) == bit_of(vm, q, n_) ? +1 : -1;
    }

    int lambda_pq(int p, int q) const { return lambda[pair_index(n, p, q)]; }
    bool touches_drive(int p, int q) const { return p == drive || q == drive; }
};

// Time-integrated 2x2 block content (rad). The implied block Hamiltonian is
// [[C+B, A],[A, C-B]] / T before integration.
struct BlockIntegrals {
    double A = 0.0;   // a_drive * T
    double B = 0.0;   // sum over edges touching drive of lambda_pq c_pq T
    double C = 0.0;   // sum over remaining edges of lambda_pq c_pq T
    double T = 0.0;   // evolution time (us)
};

// All 2^{n-1} invariant subspaces of H_drive, in ascending v_m order.
inline std::vector<SubspacePair> enumerate_subspaces(const HamiltonianSpec& spec, int drive) {
    if (drive < 0 || drive >= spec.n)
        throw std::invalid_argument("enumerate_subspaces: drive out of range");
    std::vector<SubspacePair> out;
    out.reserve(1u << (spec.n - 1));
    const uint32_t e = unit_bit(drive, spec.n);
    for (uint32_t m = 0; m < (1u << spec.n); ++m)
        if ((m & e) == 0) out.emplace_back(spec.n, drive, m);
    return out;
}

inline BlockIntegrals project_block(const HamiltonianSpec& spec, const SubspacePair& pair, double T) {
    if (T <= 0.0) throw std::invalid_argument("project_block: T must be positive");
    BlockIntegrals b;
    b.T = T;
    b.A = spec.a[pair.drive] * T;
    for (int p = 0; p < spec.n; ++p) {
        for (int q = p + 1; q < spec.n; ++q) {
            const double term = pair.lambda_pq(p, q) * spec.coupling(p, q) * T;
            if (pair.touches_drive(p, q)) b.B += term;
            else b.C += term;
        }
    }
    return b;
}

// Canonical linearly independent selection: the all-zero logical state plus
// single-one states at positions k != drive, drive+1, truncated to `count`.
// Positions above the drive come first so that the leading n-1-drive rows
// stay independent over the couplings c_{drive,j} with j > drive (the
// unknowns left in round `drive` of the learning iteration).
inline std::vector<SubspacePair> select_subspaces(int n, int drive, int count) {
    if (count < 1 || count > n - 1)
        throw std::invalid_argument("select_subspaces: count must be in [1, n-1]");
    std::vector<uint32_t> zeros;
    zeros.push_back(0u);
    for (int k = drive + 2; k < n; ++k) zeros.push_back(unit_bit(k, n));
    for (int k = 0; k < drive; ++k) zeros.push_back(unit_bit(k, n));
    std::vector<SubspacePair> out;
    for (int r = 0; r < count; ++r) out.emplace_back(n, drive, zeros[r]);
    return out;
}

// ---------------------------------------------------------------------------
// CoefficientMatrix: +-1 entries lambda_{drive,j} per (row = subspace,
// col = unknown coupling c_{drive,j}, j != drive ascending).
// ---------------------------------------------------------------------------
struct CoefficientMatrix {
    int drive = 0;
    std::vector<int> columns;                 // qubit j per column
    std::vector<std::vector<int>> rows;       // +-1 entries

    int n_rows() const { return static_cast<int>(rows.size()); }
    int n_cols() const { return static_cast<int>(columns.size()); }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m(n_rows(), n_cols());
        for (int r = 0; r < n_rows(); ++r)
            for (int c = 0; c < n_cols(); ++c) m(r, c) = rows[r][c];
        return m;
    }
};

// Exact integer rank and (for square inputs) determinant by fraction-free
// Bareiss elimination. Entries are +-1 so everything stays in int64.
inline std::pair<int, long long> integer_rank_det(std::vector<std::vector<long long>> m) {
    const int R = static_cast<int>(m.size());
    const int C = R ? static_cast<int>(m[0].size()) : 0;
    long long prev = 1;
    int rank = 0;
    long long det = 1;
    bool swapped_sign = false;
    for (int col = 0; col < C && rank < R; ++col) {
        int pivot = -1;
        for (int r = rank; r < R; ++r)
            if (m[r][col] != 0) { pivot = r; break; }
        if (pivot < 0) { det = 0; continue; }
        if (pivot != rank) { std::swap(m[pivot], m[rank]); swapped_sign = !swapped_sign; }
        for (int r = rank + 1; r < R; ++r) {
            for (int c2 = col + 1; c2 < C; ++c2)
                m[r][c2] = (m[rank][col] * m[r][c2] - m[r][col] * m[rank][c2]) / prev;
            m[r][col] = 0;
        }
        prev = m[rank][col];
        ++rank;
    }
    if (R == C && rank == R) det = swapped_sign ? -prev : prev;
    else if (R == C) det = 0;
    else det = 0;
    return {rank, det};
}

inline CoefficientMatrix coefficient_matrix(const std::vector<SubspacePair>& pairs, int drive) {
    if (pairs.empty()) throw std::invalid_argument("coefficient_matrix: no pairs");
    CoefficientMatrix cm;
    cm.drive = drive;
    const int n = pairs.front().n;
    for (int j = 0; j < n; ++j)
        if (j != drive) cm.columns.push_back(j);
    for (const auto& p : pairs) {
        if (p.drive != drive)
            throw std::invalid_argument("coefficient_matrix: pairs must share the drive");
        std::vector<int> row;
        row.reserve(cm.columns.size());
        for (int j : cm.columns) row.push_back(p.lambda_pq(drive, j));
        cm.rows.push_back(std::move(row));
    }
    std::vector<std::vector<long long>> im(cm.rows.size());
    for (size_t r = 0; r < cm.rows.size(); ++r)
        im[r].assign(cm.rows[r].begin(), cm.rows[r].end());
    auto [rank, det] = integer_rank_det(std::move(im));
    (void)det;
    const int expected = std::min<int>(cm.n_rows(), n - 1);
    if (rank < expected)
        throw std::runtime_error("coefficient_matrix: singular selection (rank " +
                                 std::to_string(rank) + " < " + std::to_string(expected) + ")");
    return cm;
}

// |det| of a square coefficient matrix, exact.
inline long long coefficient_det(const CoefficientMatrix& cm) {
    if (cm.n_rows() != cm.n_cols())
        throw std::invalid_argument("coefficient_det: matrix not square");
    std::vector<std::vector<long long>> im(cm.rows.size());
    for (size_t r = 0; r < cm.rows.size(); ++r)
        im[r].assign(cm.rows[r].begin(), cm.rows[r].end());
    return integer_rank_det(std::move(im)).second;
}

// ---------------------------------------------------------------------------
// block_decompose: verify U^dag H U is a direct sum of consecutive 2x2 blocks.
// ---------------------------------------------------------------------------
struct BlockDecomposition {
    std::vector<Eigen::Matrix2cd> blocks;
    double max_off_block = 0.0;
};

inline BlockDecomposition block_decompose(const MatrixXc& H, const MatrixXc& U,
                                          double tol = 1e-10) {
    const Eigen::Index dim = H.rows();
    if (H.cols() != dim || U.rows() != dim || U.cols() != dim || dim % 2 != 0)
        throw std::invalid_argument("block_decompose: dimension mismatch");
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("block_decompose: H is not Hermitian");
    if ((U.adjoint() * U - MatrixXc::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("block_decompose: U is not unitary");

    MatrixXc M = U.adjoint() * H * U;
    BlockDecomposition out;
    double worst = 0.0;
    Eigen::Index wi = 0, wj = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (i / 2 == j / 2) continue;
            const double mag = std::abs(M(i, j));
            if (mag > worst) { worst = mag; wi = i; wj = j; }
        }
    }
    out.max_off_block = worst;
    if (worst > tol)
        throw std::runtime_error("block_decompose: not block-diagonal, |M(" +
                                 std::to_string(wi) + "," + std::to_string(wj) +
                                 ")| = " + std::to_string(worst));
    for (Eigen::Index b = 0; b < dim / 2; ++b)
        out.blocks.push_back(M.block<2, 2>(2 * b, 2 * b));
    return out;
}

} // namespace qhl
