#include "bdsde/condexp.hpp"

#include <bit>
#include <cmath>

#include "bdsde/error.hpp"
#include "bdsde/parallel.hpp"

namespace bdsde {

std::string to_string(BackendKind k) { return k == BackendKind::mc ? "mc" : "tree"; }

BackendKind parse_backend(const std::string& name) {
    if (name == "mc") return BackendKind::mc;
    if (name == "tree") return BackendKind::tree;
    throw InvalidArgument("unknown backend '" + name + "'");
}

namespace {

std::size_t binom(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// All exponent vectors of total degree <= deg over nb variables, graded order.
std::vector<std::vector<int>> monomials(int nb, int deg) {
    std::vector<std::vector<int>> out{std::vector<int>(nb, 0)};
    std::vector<std::vector<int>> frontier = out;
    for (int k = 1; k <= deg; ++k) {
        std::vector<std::vector<int>> next;
        for (const auto& e : frontier) {
            int last = nb - 1;
            while (last >= 0 && e[last] == 0) --last;
            for (int v = std::max(last, 0); v < nb; ++v) {
                auto f = e;
                ++f[v];
                next.push_back(f);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

}  // namespace

std::size_t RegressionBasis::feature_count(int d, int l) const {
    const int nb = (use_w ? d : 0) + (use_btail ? l : 0) + (use_db ? l : 0);
    return binom(static_cast<std::size_t>(nb + degree), static_cast<std::size_t>(degree));
}

Eigen::MatrixXd fit_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::optional<double> ridge) {
    const Eigen::Index M = X.rows(), p = X.cols();
    if (Y.rows() != M) throw InvalidArgument("targets and features have different row counts");
    if (p == 0) throw InvalidArgument("regression needs at least one feature");
    if (M < 10 * p) throw InvalidArgument("regression needs at least 10 rows per feature");
    if (ridge && *ridge < 0.0) throw InvalidArgument("ridge parameter must be non-negative");

    Eigen::MatrixXd G = (X.transpose() * X) / static_cast<double>(M);
    Eigen::MatrixXd R = (X.transpose() * Y) / static_cast<double>(M);
    const double tau = ridge ? *ridge : 1e-8 * G.trace() / static_cast<double>(p);
    // The intercept is not shrunk, so constant targets come back unchanged.
    for (Eigen::Index k = 0; k < p; ++k) {
        const double c0 = X(0, k);
        if (c0 == 0.0 || (X.col(k).array() != c0).any()) G(k, k) += tau;
    }

    // Pivoted Cholesky on the residual variance of each column relative to its
    // own scale; a column is dropped only when it is dependent at that scale.
    // Fixed tie-break (lowest index wins).
    std::vector<Eigen::Index> perm(p);
    for (Eigen::Index k = 0; k < p; ++k) perm[k] = k;
    Eigen::MatrixXd A = G;
    const Eigen::VectorXd D = G.diagonal();
    auto rel = [&](Eigen::Index j) { return D(perm[j]) > 0.0 ? A(j, j) / D(perm[j]) : 0.0; };
    Eigen::Index rank = 0;
    double min_pivot = 0.0, max_pivot = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
        Eigen::Index best = k;
        for (Eigen::Index j = k + 1; j < p; ++j)
            if (rel(j) > rel(best)) best = j;
        if (!(rel(best) > 1e-13)) break;
        if (best != k) {
            A.row(k).swap(A.row(best));
            A.col(k).swap(A.col(best));
            std::swap(perm[k], perm[best]);
        }
        const double piv = A(k, k);
        if (rank == 0) max_pivot = min_pivot = piv;
        max_pivot = std::max(max_pivot, piv);
        min_pivot = std::min(min_pivot, piv);
        const double lkk = std::sqrt(piv);
        A(k, k) = lkk;
        for (Eigen::Index j = k + 1; j < p; ++j) A(j, k) /= lkk;
        for (Eigen::Index j = k + 1; j < p; ++j)
            for (Eigen::Index c = k + 1; c <= j; ++c) {
                A(j, c) -= A(j, k) * A(c, k);
                A(c, j) = A(j, c);
            }
        ++rank;
    }
    if (rank == 0) throw NumericalFailure("regression design is identically zero");
    if (max_pivot / min_pivot > 1e12) throw NumericalFailure("regression system is ill-conditioned");

    // Solve L L' beta_r = R_r on the retained pivots.
    Eigen::MatrixXd L = A.topLeftCorner(rank, rank).triangularView<Eigen::Lower>();
    Eigen::MatrixXd rhs(rank, Y.cols());
    for (Eigen::Index k = 0; k < rank; ++k) rhs.row(k) = R.row(perm[k]);
    Eigen::MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(rhs);
    Eigen::MatrixXd beta_r = L.transpose().triangularView<Eigen::Upper>().solve(tmp);
    Eigen::MatrixXd Xr(M, rank);
    for (Eigen::Index k = 0; k < rank; ++k) Xr.col(k) = X.col(perm[k]);
    return Xr * beta_r;
}

std::vector<double> fit_predict(const Eigen::MatrixXd& X, std::span<const double> targets, std::optional<double> ridge) {
    Eigen::MatrixXd Y(X.rows(), 1);
    if (static_cast<Eigen::Index>(targets.size()) != X.rows())
        throw InvalidArgument("targets and features have different row counts");
    for (Eigen::Index m = 0; m < X.rows(); ++m) Y(m, 0) = targets[m];
    const Eigen::MatrixXd P = fit_predict(X, Y, ridge);
    return std::vector<double>(P.data(), P.data() + P.rows());
}

// Tree backend.

TreeBackend::TreeBackend(const TimeGrid& grid) : Backend(grid, 1, 1), sd_(std::sqrt(grid.dt)) {
    if (grid.N > 20) throw InvalidArgument("tree backend is capped at N = 20");
}

std::size_t TreeBackend::child(std::size_t i, std::size_t node, std::size_t branch) const {
    const std::size_t N = grid().N;
    const std::size_t h = node >> (N - i);
    const std::size_t b = node & ((std::size_t{1} << (N - i)) - 1);
    const std::size_t h2 = h | (branch << i);
    return (h2 << (N - i - 1)) | (b >> 1);
}

double TreeBackend::dW(std::size_t, std::size_t, std::size_t branch, int) const { return branch ? sd_ : -sd_; }

double TreeBackend::dB(std::size_t, std::size_t node, std::size_t, int) const { return (node & 1U) ? sd_ : -sd_; }

void TreeBackend::expect(std::size_t, std::span<const double> vals, std::size_t cols, std::span<double> out) const {
    const std::size_t n = nodes(0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k)
            for (std::size_t c = 0; c < cols; ++c)
                out[k * cols + c] = 0.5 * (vals[(2 * k) * cols + c] + vals[(2 * k + 1) * cols + c]);
    });
}

void TreeBackend::state(std::size_t i, std::size_t node, std::span<double> w, double& btail, double& db) const {
    const std::size_t N = grid().N;
    const std::size_t h = node >> (N - i);
    const std::size_t b = node & ((std::size_t{1} << (N - i)) - 1);
    w[0] = sd_ * (2.0 * std::popcount(h) - static_cast<double>(i));
    btail = sd_ * (2.0 * std::popcount(b) - static_cast<double>(N - i));
    db = i < N ? ((b & 1U) ? sd_ : -sd_) : 0.0;
}

TreeState tree_build(const Problem& p, const TimeGrid& grid) {
    if (p.d != 1 || p.l != 1) throw InvalidArgument("tree backend needs d = l = 1");
    TreeBackend tb(grid);
    TreeState st{grid, std::vector<std::vector<double>>(grid.N + 1)};
    const std::size_t n = tb.nodes(grid.N);
    auto& last = st.slices[grid.N];
    last.resize(n);
    double w = 0.0, bt = 0.0, db = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        tb.state(grid.N, k, std::span<double>(&w, 1), bt, db);
        last[k] = p.xi(NodeState{grid.T, std::span<const double>(&w, 1), 0.0, 0.0});
    }
    return st;
}

std::vector<double> tree_expect(const TreeState& state, std::size_t i, std::span<const double> successors) {
    TreeBackend tb(state.grid);
    if (i >= state.grid.N) throw InvalidArgument("tree_expect step out of range");
    if (successors.size() != 2 * tb.nodes(i)) throw InvalidArgument("tree_expect needs two successors per node");
    std::vector<double> out(tb.nodes(i));
    tb.expect(i, successors, 1, out);
    return out;
}

// Regression backend.

RegressionBackend::RegressionBackend(SharedPaths paths, RegressionBasis basis)
    : Backend(paths->grid(), paths->d(), paths->l()), paths_(std::move(paths)), basis_(basis) {
    if (basis_.degree < 0) throw InvalidArgument("basis degree must be non-negative");
    const std::size_t M = paths_->paths(), N = grid().N;
    const int d = this->d(), l = this->l();
    if (basis_.feature_count(d, l) * 10 > M)
        throw InvalidArgument("regression basis has more than M/10 features");
    w_.assign((N + 1) * M * d, 0.0);
    btail_.assign((N + 1) * M * l, 0.0);
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m) {
            for (std::size_t i = 0; i < N; ++i)
                for (int k = 0; k < d; ++k) w_[((i + 1) * M + m) * d + k] = w_[(i * M + m) * d + k] + paths_->dW(i, m, k);
            for (std::size_t i = N; i-- > 0;)
                for (int j = 0; j < l; ++j)
                    btail_[(i * M + m) * l + j] = btail_[((i + 1) * M + m) * l + j] + paths_->dB(i, m, j);
        }
    });
}

void RegressionBackend::state(std::size_t i, std::size_t node, std::span<double> w, double& btail, double& db) const {
    const std::size_t M = paths_->paths();
    for (int k = 0; k < d(); ++k) w[k] = w_[(i * M + node) * d() + k];
    btail = btail_[(i * M + node) * l()];
    db = i < grid().N ? paths_->dB(i, node, 0) : 0.0;
}

Eigen::MatrixXd RegressionBackend::design(std::size_t i) const {
    const std::size_t M = paths_->paths();
    const int d = this->d(), l = this->l();
    const int nb = (basis_.use_w ? d : 0) + (basis_.use_btail ? l : 0) + (basis_.use_db ? l : 0);
    const auto mons = monomials(nb, basis_.degree);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(mons.size()));
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        std::vector<double> base(nb);
        for (std::size_t m = b; m < e; ++m) {
            int c = 0;
            if (basis_.use_w)
                for (int k = 0; k < d; ++k) base[c++] = w_[(i * M + m) * d + k];
            if (basis_.use_btail)
                for (int j = 0; j < l; ++j) base[c++] = btail_[(i * M + m) * l + j];
            if (basis_.use_db)
                for (int j = 0; j < l; ++j) base[c++] = paths_->dB(i, m, j);
            for (std::size_t q = 0; q < mons.size(); ++q) {
                double v = 1.0;
                for (int a = 0; a < nb; ++a)
                    for (int r = 0; r < mons[q][a]; ++r) v *= base[a];
                X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) = v;
            }
        }
    });
    return X;
}

void RegressionBackend::expect(std::size_t i, std::span<const double> vals, std::size_t cols, std::span<double> out) const {
    const std::size_t M = paths_->paths();
    const Eigen::MatrixXd X = design(i);
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(cols));
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t c = 0; c < cols; ++c) Y(m, c) = vals[m * cols + c];
    const Eigen::MatrixXd P = fit_predict(X, Y, basis_.ridge);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t c = 0; c < cols; ++c) out[m * cols + c] = P(m, c);
}

}  // namespace bdsde
