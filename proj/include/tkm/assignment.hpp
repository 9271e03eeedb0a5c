#ifndef TKM_ASSIGNMENT_HPP
#define TKM_ASSIGNMENT_HPP

#include <vector>

#include "core.hpp"

namespace tkm {

/**
 * @brief Hard cluster assignment: one label per point plus the per-cluster member lists.
 *
 * Member lists are sorted ascending. Every point belongs to exactly one cluster.
 */
class Assignment {
public:
    Assignment() = default;

    Assignment(std::vector<std::size_t> labels, std::size_t k) : labels_(std::move(labels)), members_(k) {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] >= k) {
                throw Error("label " + std::to_string(labels_[i]) + " of point " + std::to_string(i) +
                            " is out of range for k=" + std::to_string(k));
            }
            members_[labels_[i]].push_back(i);
        }
    }

    std::size_t n() const { return labels_.size(); }
    std::size_t k() const { return members_.size(); }

    std::size_t label(std::size_t i) const { return labels_[i]; }
    const std::vector<std::size_t>& labels() const { return labels_; }
    const std::vector<std::size_t>& members(std::size_t j) const { return members_[j]; }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out;
        out.reserve(members_.size());
        for (const auto& m : members_) {
            out.push_back(m.size());
        }
        return out;
    }

    friend bool operator==(const Assignment&, const Assignment&) = default;

private:
    std::vector<std::size_t> labels_;
    std::vector<std::vector<std::size_t>> members_;
};

inline void require_consistent(const Dataset& ds, const Assignment& a, const Centroids& cs) {
    require_same_dim(ds, cs);
    if (a.n() != ds.n()) {
        throw Error("assignment covers " + std::to_string(a.n()) + " points, dataset has " + std::to_string(ds.n()));
    }
    if (a.k() != cs.k()) {
        throw Error("assignment has k=" + std::to_string(a.k()) + ", centroids have k=" + std::to_string(cs.k()));
    }
}

}  // namespace tkm

#endif  // TKM_ASSIGNMENT_HPP
