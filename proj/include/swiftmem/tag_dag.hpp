#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swiftmem/error.hpp"
#include "swiftmem/tag.hpp"
#include "swiftmem/types.hpp"
#include "swiftmem/vector_math.hpp"

namespace swiftmem {

/// Hierarchical tag index. Edges run from a broader tag to a more specific
/// one; the graph is kept acyclic by checking reachability on every insert.
class TagDag {
public:
    using NodeIndex = std::uint32_t;

    struct Node {
        TagId tag;
        std::vector<EpisodeId> episodes; // sorted, unique
        std::vector<NodeIndex> parents;  // in relation-acceptance order
        std::vector<NodeIndex> children; // in relation-acceptance order
        Embedding embedding;
        double norm = 0.0; // L2 norm of `embedding`
    };

    enum class RelationStatus { Accepted, RejectedCycle, RejectedDuplicate };

    struct RelationResult {
        RelationStatus status = RelationStatus::Accepted;
        std::string reason;

        bool accepted() const noexcept { return status == RelationStatus::Accepted; }
    };

    struct Counters {
        std::size_t nodes_visited = 0;
    };

    explicit TagDag(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }

    /// Creates the node if needed and refreshes its embedding. Episode set and edges are kept.
    NodeIndex upsert_tag(const TagId& tag, Embedding embedding) {
        if (embedding.size() != dim_)
            throw Error(ErrorCode::DimensionMismatch, "tag '" + tag.str() + "' embedding length " +
                                                          std::to_string(embedding.size()) + ", expected " +
                                                          std::to_string(dim_));
        const double norm = l2_norm(embedding);
        if (auto it = index_.find(tag.str()); it != index_.end()) {
            nodes_[it->second].embedding = std::move(embedding);
            nodes_[it->second].norm = norm;
            return it->second;
        }
        const auto idx = static_cast<NodeIndex>(nodes_.size());
        nodes_.push_back(Node{tag, {}, {}, {}, std::move(embedding), norm});
        index_.emplace(tag.str(), idx);
        return idx;
    }

    void attach_episode(const TagId& tag, EpisodeId id) {
        auto& eps = nodes_[require(tag)].episodes;
        if (eps.empty() || eps.back() < id) {
            eps.push_back(id);
            return;
        }
        auto pos = std::lower_bound(eps.begin(), eps.end(), id);
        if (pos == eps.end() || *pos != id) eps.insert(pos, id);
    }

    /// Adds parent -> child unless the edge exists already or would close a cycle.
    RelationResult add_relation(const TagId& parent, const TagId& child) {
        const NodeIndex p = require(parent);
        const NodeIndex c = require(child);
        if (p == c) throw Error(ErrorCode::SelfLoop, "'" + parent.str() + "' -> itself");
        auto& kids = nodes_[p].children;
        if (std::find(kids.begin(), kids.end(), c) != kids.end())
            return {RelationStatus::RejectedDuplicate, "edge " + parent.str() + " -> " + child.str() + " exists"};
        if (reaches(c, p))
            return {RelationStatus::RejectedCycle,
                    "edge " + parent.str() + " -> " + child.str() + " would close a cycle"};
        kids.push_back(c);
        nodes_[c].parents.push_back(p);
        edges_.emplace_back(p, c);
        return {};
    }

    /// Seeds (deduplicated, unknown ones skipped) followed by every tag reachable
    /// through child edges within `depth` steps, in breadth-first level order.
    /// With `include_parents`, the direct parents of the seeds are appended.
    std::vector<TagId> expand_tags(std::span<const TagId> seeds, std::size_t depth, bool include_parents = false,
                                   Counters* counters = nullptr) const {
        std::vector<NodeIndex> order;
        std::vector<char> seen(nodes_.size(), 0);
        for (const auto& s : seeds) {
            auto it = index_.find(s.str());
            if (it == index_.end() || seen[it->second]) continue;
            seen[it->second] = 1;
            order.push_back(it->second);
        }
        const std::size_t seed_count = order.size();
        std::size_t level_begin = 0;
        for (std::size_t level = 0; level < depth && level_begin < order.size(); ++level) {
            const std::size_t level_end = order.size();
            for (std::size_t i = level_begin; i < level_end; ++i) {
                for (NodeIndex child : nodes_[order[i]].children) {
                    if (counters) ++counters->nodes_visited;
                    if (seen[child]) continue;
                    seen[child] = 1;
                    order.push_back(child);
                }
            }
            level_begin = level_end;
        }
        if (include_parents) {
            for (std::size_t i = 0; i < seed_count; ++i) {
                for (NodeIndex parent : nodes_[order[i]].parents) {
                    if (counters) ++counters->nodes_visited;
                    if (seen[parent]) continue;
                    seen[parent] = 1;
                    order.push_back(parent);
                }
            }
        }
        std::vector<TagId> out;
        out.reserve(order.size());
        for (NodeIndex n : order) out.push_back(nodes_[n].tag);
        return out;
    }

    /// Sorted union of the episode sets of the known tags in `tags`.
    std::vector<EpisodeId> episodes_for(std::span<const TagId> tags) const {
        std::vector<EpisodeId> out;
        for (const auto& t : tags) {
            auto it = index_.find(t.str());
            if (it == index_.end()) continue;
            const auto& eps = nodes_[it->second].episodes;
            out.insert(out.end(), eps.begin(), eps.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool contains(const TagId& tag) const { return index_.contains(tag.str()); }
    std::optional<NodeIndex> index_of(const TagId& tag) const {
        auto it = index_.find(tag.str());
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const Node& node(NodeIndex i) const { return nodes_.at(i); }
    const Node& node(const TagId& tag) const { return nodes_[require(tag)]; }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    /// Accepted edges in acceptance order.
    std::span<const std::pair<NodeIndex, NodeIndex>> edges() const noexcept { return edges_; }

    std::vector<TagId> parents_of(const TagId& tag) const { return tags_of(node(tag).parents); }
    std::vector<TagId> children_of(const TagId& tag) const { return tags_of(node(tag).children); }

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    double avg_parents() const noexcept {
        std::size_t total = 0;
        for (const auto& n : nodes_) total += n.parents.size();
        return nodes_.empty() ? 0.0 : double(total) / double(nodes_.size());
    }
    double avg_children() const noexcept {
        std::size_t total = 0;
        for (const auto& n : nodes_) total += n.children.size();
        return nodes_.empty() ? 0.0 : double(total) / double(nodes_.size());
    }

    /// Bytes held by the index proper: tag embeddings, adjacency lists and
    /// node headers. Episode postings are excluded.
    std::size_t index_bytes() const noexcept {
        std::size_t bytes = 0;
        for (const auto& n : nodes_) {
            bytes += sizeof(Node) + n.tag.str().capacity();
            bytes += n.embedding.capacity() * sizeof(float);
            bytes += (n.parents.capacity() + n.children.capacity()) * sizeof(NodeIndex);
        }
        return bytes;
    }

    /// Graphviz rendering, one node per tag and one arrow per parent -> child edge.
    std::string to_dot() const {
        std::ostringstream os;
        os << "digraph tags {\n";
        for (const auto& n : nodes_) os << "  \"" << n.tag << "\" [episodes=" << n.episodes.size() << "];\n";
        for (const auto& [p, c] : edges_) os << "  \"" << nodes_[p].tag << "\" -> \"" << nodes_[c].tag << "\";\n";
        os << "}\n";
        return os.str();
    }

private:
    NodeIndex require(const TagId& tag) const {
        auto it = index_.find(tag.str());
        if (it == index_.end()) throw Error(ErrorCode::UnknownTag, "'" + tag.str() + "'");
        return it->second;
    }

    std::vector<TagId> tags_of(const std::vector<NodeIndex>& ids) const {
        std::vector<TagId> out;
        out.reserve(ids.size());
        for (auto i : ids) out.push_back(nodes_[i].tag);
        return out;
    }

    // Depth-first search along child edges.
    bool reaches(NodeIndex from, NodeIndex target) const {
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<NodeIndex> stack{from};
        seen[from] = 1;
        while (!stack.empty()) {
            const NodeIndex n = stack.back();
            stack.pop_back();
            if (n == target) return true;
            for (NodeIndex c : nodes_[n].children) {
                if (!seen[c]) {
                    seen[c] = 1;
                    stack.push_back(c);
                }
            }
        }
        return false;
    }

    std::size_t dim_;
    std::vector<Node> nodes_;
    std::unordered_map<std::string, NodeIndex> index_;
    std::vector<std::pair<NodeIndex, NodeIndex>> edges_;
};

} // namespace swiftmem
