#pragma once

#include <string>

#include "fockctl/nn.hpp"

namespace fockctl {

/// Serialized policy/value networks plus optimizer state. Stored as JSON;
/// doubles round-trip exactly (shortest-representation encoding).
struct Checkpoint {
    GaussianPolicy policy;
    Mlp value_net;
    AdamState adam_policy;
    AdamState adam_value;
    std::string config_hash;
    std::uint64_t seed = 0;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace fockctl
