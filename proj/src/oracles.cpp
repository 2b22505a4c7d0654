#include "bdsde/oracles.hpp"

#include <algorithm>

namespace bdsde {

namespace {

const char* oracle_wT = R"(# Martingale terminal value on the tree.
[problem]
name = oracle_wT
T = 1
xi = w1
f = 0
g = 0

[numerics]
backend = tree
N = 8

[checks]
# Y_0 = E[W_T] = 0
expect.Y0 = 0
expect.Y0.tol = 1e-12
# Z = 1 on every node, so sum |Z|^2 dt = T
expect.z_energy = 1
expect.z_energy.tol = 1e-12
)";

const char* oracle_decay = R"(# Linear decay with a deterministic terminal value.
[problem]
name = oracle_decay
T = 1
xi = 1
f = -y
g = 0

[numerics]
backend = tree
N = 10

[checks]
# explicit scheme: Y_0 = (1 - dt)^N = 0.9^10
expect.Y0 = 0.3486784401
expect.Y0.tol = 1e-12
)";

const char* oracle_btail = R"(# Constant backward noise coefficient: Y_t = B_T - B_t.
[problem]
name = oracle_btail
T = 1
xi = 0
f = 0
g = 1

[numerics]
backend = tree
N = 8

[checks]
# mean of B_T over the root nodes
expect.Y0 = 0
expect.Y0.tol = 1e-12
# Z = 0 since Y never depends on W
expect.z_energy = 0
expect.z_energy.tol = 1e-12
)";

const char* oracle_drift = R"(# Linear drift in z with a Brownian terminal value.
[problem]
name = oracle_drift
T = 1
xi = w1
f = 0.5*z1
g = 0

[numerics]
backend = tree
N = 8

[checks]
# Z = 1 exactly, so Y_0 = E[W_T] + 0.5 T
expect.Y0 = 0.5
expect.Y0.tol = 1e-12
)";

}  // namespace

const std::vector<Oracle>& oracles() {
    static const std::vector<Oracle> all = {
        {"oracle_wT", "xi = W_T, f = g = 0; Y0 = 0, z_energy = T", oracle_wT},
        {"oracle_decay", "f = -y, xi = 1; Y0 = (1 - dt)^N", oracle_decay},
        {"oracle_btail", "g = 1, xi = 0; Y_t = B_T - B_t", oracle_btail},
        {"oracle_drift", "xi = W_T, f = z/2; Y0 = T/2", oracle_drift},
    };
    return all;
}

const Oracle* find_oracle(const std::string& name) {
    const auto& all = oracles();
    auto it = std::find_if(all.begin(), all.end(), [&](const Oracle& o) { return o.name == name; });
    return it == all.end() ? nullptr : &*it;
}

}  // namespace bdsde
