#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "lsd/error.hpp"

namespace lsd
{

/** @brief Two disjoint, nonempty groups of shape ids */
struct Partition {
    std::vector<std::string> cluster_a;
    std::vector<std::string> cluster_b;

    [[nodiscard]] bool in_a(const std::string& id) const
    {
        return std::find(cluster_a.begin(), cluster_a.end(), id) != cluster_a.end();
    }
    [[nodiscard]] bool in_b(const std::string& id) const
    {
        return std::find(cluster_b.begin(), cluster_b.end(), id) != cluster_b.end();
    }

    void validate() const
    {
        require(!cluster_a.empty() && !cluster_b.empty(), ErrorCode::PreconditionViolation,
                "partition clusters must both be nonempty");
        for (const auto& id : cluster_a) {
            require(!in_b(id), ErrorCode::PreconditionViolation, "shape '" + id + "' is in both clusters");
        }
    }
};

}  // namespace lsd
