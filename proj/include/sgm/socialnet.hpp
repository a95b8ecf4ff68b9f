#pragma once

#include "sgm/model.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace sgm {

inline std::size_t intersection_size(const ServiceSet& a, const ServiceSet& b) {
    std::size_t n = 0;
    const ServiceSet& small = a.size() <= b.size() ? a : b;
    const ServiceSet& large = a.size() <= b.size() ? b : a;
    for (const auto& s : small) n += large.count(s);
    return n;
}

/// Directed similarity: |from ∩ to| / |to|. A weight of 1 means the target's
/// needs are fully contained in the source's.
inline double edge_weight(const ServiceSet& from_services, const ServiceSet& to_services) {
    if (to_services.empty()) throw std::invalid_argument("edge_weight: empty target service set");
    return static_cast<double>(intersection_size(from_services, to_services)) /
           static_cast<double>(to_services.size());
}

/// Greedy team-formation similarity: |i ∩ j| / |i|. Divides by the source set;
/// kept distinct from edge_weight on purpose.
inline double alg3_similarity(const ServiceSet& i_services, const ServiceSet& j_services) {
    if (i_services.empty()) throw std::invalid_argument("alg3_similarity: empty source service set");
    return static_cast<double>(intersection_size(i_services, j_services)) /
           static_cast<double>(i_services.size());
}

/// Complete weighted directed graph over agents; weights computed on demand
/// from the stored service sets, with a dense cache below the node cap.
class SimilarityGraph {
public:
    SimilarityGraph() = default;

    explicit SimilarityGraph(std::vector<std::pair<AgentId, ServiceSet>> agents,
                             std::size_t cache_cap = 2000)
        : agents_(std::move(agents)) {
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            if (agents_[i].second.empty())
                throw std::invalid_argument("SimilarityGraph: empty service set for " + agents_[i].first);
            index_[agents_[i].first] = i;
        }
        if (agents_.size() <= cache_cap) {
            cache_.assign(agents_.size() * agents_.size(), -1.0);
            for (std::size_t i = 0; i < agents_.size(); ++i)
                for (std::size_t j = 0; j < agents_.size(); ++j)
                    cache_[i * agents_.size() + j] =
                        edge_weight(agents_[i].second, agents_[j].second);
        }
    }

    std::size_t size() const { return agents_.size(); }

    std::vector<AgentId> nodes() const {
        std::vector<AgentId> out;
        out.reserve(agents_.size());
        for (const auto& [id, _] : agents_) out.push_back(id);
        return out;
    }

    double weight(const AgentId& from, const AgentId& to) const {
        std::size_t i = index_.at(from), j = index_.at(to);
        if (!cache_.empty()) return cache_[i * agents_.size() + j];
        return edge_weight(agents_[i].second, agents_[j].second);
    }

    /// Ordered pairs (from, to) with weight >= threshold, excluding loops.
    std::vector<std::pair<AgentId, AgentId>> edges_at_least(double threshold) const {
        std::vector<std::pair<AgentId, AgentId>> out;
        for (std::size_t i = 0; i < agents_.size(); ++i)
            for (std::size_t j = 0; j < agents_.size(); ++j)
                if (i != j && weight(agents_[i].first, agents_[j].first) >= threshold)
                    out.emplace_back(agents_[i].first, agents_[j].first);
        return out;
    }

private:
    std::vector<std::pair<AgentId, ServiceSet>> agents_;
    std::map<AgentId, std::size_t> index_;
    std::vector<double> cache_;
};

inline SimilarityGraph build_graph(std::vector<std::pair<AgentId, ServiceSet>> agents,
                                   std::size_t cache_cap = 2000) {
    return SimilarityGraph(std::move(agents), cache_cap);
}

}  // namespace sgm
