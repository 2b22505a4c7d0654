#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bdsde/coefficients.hpp"
#include "bdsde/noise.hpp"

namespace bdsde {

enum class BackendKind { mc, tree };
std::string to_string(BackendKind k);
BackendKind parse_backend(const std::string& name);

/// Regression features at step i: monomials up to `degree` in the selected
/// state variables W_{t_i}, B_T - B_{t_i} and dB_i (the constant is always included).
struct RegressionBasis {
    bool use_w = true;
    bool use_btail = true;
    bool use_db = true;
    int degree = 1;
    std::optional<double> ridge;  // unset: 1e-8 * trace(G) / dim(G) with G = X'X / M; constant columns are not shrunk

    std::size_t feature_count(int d, int l) const;
};

/// Ridge least squares of every column of `targets` on `features`, evaluated
/// back at the rows of `features`. Columns whose residual pivot vanishes relative
/// to their own diagonal entry (exact linear dependence) are dropped in a fixed order.


Eigen::MatrixXd fit_predict(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                            std::optional<double> ridge);
std::vector<double> fit_predict(const Eigen::MatrixXd& features, std::span<const double> targets,
                                std::optional<double> ridge);

/// Conditional expectation engine for the backward sweep. At step i every node
/// has branches() successors in slice i+1; expect() averages over dW_i only.
class Backend {
public:
    virtual ~Backend() = default;

    virtual BackendKind kind() const = 0;
    const TimeGrid& grid() const { return grid_; }
    int d() const { return d_; }
    int l() const { return l_; }

    virtual std::size_t nodes(std::size_t i) const = 0;
    virtual std::size_t branches() const = 0;
    virtual std::size_t child(std::size_t i, std::size_t node, std::size_t branch) const = 0;
    virtual double dW(std::size_t i, std::size_t node, std::size_t branch, int k) const = 0;
    virtual double dB(std::size_t i, std::size_t node, std::size_t branch, int j) const = 0;

    /// vals[(node * branches + branch) * cols + c] -> out[node * cols + c].
    virtual void expect(std::size_t i, std::span<const double> vals, std::size_t cols, std::span<double> out) const = 0;

    /// W_{t_i} (d values), B_T - B_{t_i} and dB_i for the first B component.
    virtual void state(std::size_t i, std::size_t node, std::span<double> w, double& btail, double& db) const = 0;

protected:
    Backend(TimeGrid grid, int d, int l) : grid_(grid), d_(d), l_(l) {}

private:
    TimeGrid grid_;
    int d_;
    int l_;
};

using SharedBackend = std::shared_ptr<const Backend>;

/// Exact Rademacher tree for d = l = 1. Slice i stores 2^N nodes
/// n = h * 2^{N-i} + b with h the W history (bit k = sign of dW_k) and b the
/// B future (bit j = sign of dB_{i+j}).
class TreeBackend final : public Backend {
public:
    explicit TreeBackend(const TimeGrid& grid);

    BackendKind kind() const override { return BackendKind::tree; }
    std::size_t nodes(std::size_t) const override { return std::size_t{1} << grid().N; }
    std::size_t branches() const override { return 2; }
    std::size_t child(std::size_t i, std::size_t node, std::size_t branch) const override;
    double dW(std::size_t i, std::size_t node, std::size_t branch, int k) const override;
    double dB(std::size_t i, std::size_t node, std::size_t branch, int j) const override;
    void expect(std::size_t i, std::span<const double> vals, std::size_t cols, std::span<double> out) const override;
    void state(std::size_t i, std::size_t node, std::span<double> w, double& btail, double& db) const override;

    double sqrt_dt() const { return sd_; }

private:
    double sd_;
};

/// Least-squares Monte Carlo over a sampled bundle (one successor per path).
class RegressionBackend final : public Backend {
public:
    RegressionBackend(SharedPaths paths, RegressionBasis basis);

    BackendKind kind() const override { return BackendKind::mc; }
    std::size_t nodes(std::size_t) const override { return paths_->paths(); }
    std::size_t branches() const override { return 1; }
    std::size_t child(std::size_t, std::size_t node, std::size_t) const override { return node; }
    double dW(std::size_t i, std::size_t node, std::size_t, int k) const override { return paths_->dW(i, node, k); }
    double dB(std::size_t i, std::size_t node, std::size_t, int j) const override { return paths_->dB(i, node, j); }
    void expect(std::size_t i, std::span<const double> vals, std::size_t cols, std::span<double> out) const override;
    void state(std::size_t i, std::size_t node, std::span<double> w, double& btail, double& db) const override;

    const PathBundle& paths() const { return *paths_; }
    const RegressionBasis& basis() const { return basis_; }
    Eigen::MatrixXd design(std::size_t i) const;

private:
    SharedPaths paths_;
    RegressionBasis basis_;
    std::vector<double> w_;      // [(i * M + m) * d + k]
    std::vector<double> btail_;  // [(i * M + m) * l + j]
};

struct TreeState {
    TimeGrid grid;
    std::vector<std::vector<double>> slices;  // slices[i] has 2^N entries; terminal slice filled
};

TreeState tree_build(const Problem& p, const TimeGrid& grid);
/// Average of successor values over the two signs of dW_i, B future held fixed.
/// `successors` is laid out as (node, branch) pairs of slice i.
std::vector<double> tree_expect(const TreeState& state, std::size_t i, std::span<const double> successors);

}  // namespace bdsde
