// Information-form fusion and synchronous consensus rounds.
#pragma once

#include <string>
#include <vector>

#include "ndkf/filter.hpp"
#include "ndkf/linalg.hpp"

namespace ndkf::fusion {

/// Neighbor sets N_i (0-based); every set contains its own node.
class Topology {
public:
    /// Throws ConfigError if a set is empty, misses its own node, or holds an out-of-range index.
    explicit Topology(std::vector<std::vector<int>> neighbors);

    static Topology fully_connected(int n);
    static Topology isolated(int n);
    static Topology ring(int n);
    static Topology line(int n);
    /// Node 0 is the hub.
    static Topology star(int n);
    /// "full", "ring", "line", "star", or "isolated".
    static Topology named(const std::string &kind, int n);

    int size() const { return static_cast<int>(neighbors_.size()); }
    const std::vector<int> &neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
    /// Σ|N_i|, the messages delivered in one round.
    int message_count() const;

private:
    std::vector<std::vector<int>> neighbors_;
};

/// Precision W = P⁻¹ and information vector z = W·x̂.
struct InfoMessage {
    Matrix w;
    Vector z;
};

enum class FusionScale {
    Sum,     ///< W_f = ΣW_j, z_f = Σz_j
    Average, ///< both sums divided by |N_i|
};

/// Throws NotSPD for a singular or indefinite covariance.
InfoMessage info_contribution(const filter::Belief &belief);

filter::Belief fuse(const std::vector<InfoMessage> &messages, FusionScale scale = FusionScale::Sum,
                    long time = 0);

/// One synchronous round: every output depends only on the input snapshot.
std::vector<filter::Belief> consensus_round(const std::vector<filter::Belief> &beliefs, const Topology &topo,
                                            FusionScale scale = FusionScale::Sum);

} // namespace ndkf::fusion
