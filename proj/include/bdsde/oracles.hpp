#pragma once

#include <string>
#include <vector>

namespace bdsde {

// Built-in scenarios with closed-form answers. `text` is scenario-file source.
struct Oracle {
    std::string name;
    std::string description;
    std::string text;
};

const std::vector<Oracle>& oracles();
const Oracle* find_oracle(const std::string& name);

}  // namespace bdsde
