#include "ndkf/fusion.hpp"

#include <algorithm>

namespace ndkf::fusion {

Topology::Topology(std::vector<std::vector<int>> neighbors) : neighbors_(std::move(neighbors)) {
    const int n = size();
    if (n < 1) {
        throw Error(ErrorKind::ConfigError, "topology needs at least one node");
    }
    for (int i = 0; i < n; ++i) {
        auto &set = neighbors_[static_cast<std::size_t>(i)];
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        if (std::find(set.begin(), set.end(), i) == set.end()) {
            throw Error(ErrorKind::ConfigError,
                        "topology: neighbor set of node " + std::to_string(i + 1) + " must contain itself");
        }
        for (int j : set) {
            if (j < 0 || j >= n) {
                throw Error(ErrorKind::ConfigError,
                            "topology: node " + std::to_string(i + 1) + " lists out-of-range neighbor " +
                                std::to_string(j + 1));
            }
        }
    }
}

Topology Topology::fully_connected(int n) {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            nb[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    return Topology(std::move(nb));
}

Topology Topology::isolated(int n) {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nb[static_cast<std::size_t>(i)] = {i};
    }
    return Topology(std::move(nb));
}

Topology Topology::ring(int n) {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nb[static_cast<std::size_t>(i)] = {i, (i + 1) % n, (i + n - 1) % n};
    }
    return Topology(std::move(nb));
}

Topology Topology::line(int n) {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto &set = nb[static_cast<std::size_t>(i)];
        set.push_back(i);
        if (i > 0) {
            set.push_back(i - 1);
        }
        if (i + 1 < n) {
            set.push_back(i + 1);
        }
    }
    return Topology(std::move(nb));
}

Topology Topology::star(int n) {
    std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nb[0].push_back(i);
        if (i > 0) {
            nb[static_cast<std::size_t>(i)] = {0, i};
        }
    }
    return Topology(std::move(nb));
}

Topology Topology::named(const std::string &kind, int n) {
    if (kind == "full") return fully_connected(n);
    if (kind == "ring") return ring(n);
    if (kind == "line") return line(n);
    if (kind == "star") return star(n);
    if (kind == "isolated") return isolated(n);
    throw Error(ErrorKind::ConfigError, "topology.kind: unknown topology '" + kind + "'");
}

int Topology::message_count() const {
    int total = 0;
    for (const auto &set : neighbors_) {
        total += static_cast<int>(set.size());
    }
    return total;
}

InfoMessage info_contribution(const filter::Belief &belief) {
    InfoMessage msg;
    msg.w = linalg::invert_spd(belief.cov);
    msg.z = msg.w * belief.mean;
    return msg;
}

filter::Belief fuse(const std::vector<InfoMessage> &messages, FusionScale scale, long time) {
    if (messages.empty()) {
        throw Error(ErrorKind::DimensionMismatch, "fuse needs at least one message");
    }
    const Eigen::Index n = messages.front().z.size();
    Matrix w = Matrix::Zero(n, n);
    Vector z = Vector::Zero(n);
    for (const auto &msg : messages) {
        if (msg.z.size() != n || msg.w.rows() != n || msg.w.cols() != n) {
            throw Error(ErrorKind::DimensionMismatch, "fuse: messages disagree in dimension");
        }
        w += msg.w;
        z += msg.z;
    }
    if (scale == FusionScale::Average) {
        const auto count = static_cast<double>(messages.size());
        w /= count;
        z /= count;
    }
    filter::Belief out;
    out.cov = linalg::invert_spd(linalg::symmetrize(w));
    out.mean = out.cov * z;
    out.stage = filter::Stage::Fused;
    out.time = time;
    return out;
}

std::vector<filter::Belief> consensus_round(const std::vector<filter::Belief> &beliefs, const Topology &topo,
                                            FusionScale scale) {
    if (static_cast<int>(beliefs.size()) != topo.size()) {
        throw Error(ErrorKind::DimensionMismatch, "consensus_round: one belief per topology node required");
    }
    std::vector<InfoMessage> contributions;
    contributions.reserve(beliefs.size());
    for (const auto &b : beliefs) {
        if (b.stage == filter::Stage::Predicted) {
            throw Error(ErrorKind::InvalidStage, "consensus_round requires updated or fused beliefs");
        }
        contributions.push_back(info_contribution(b));
    }
    std::vector<filter::Belief> out;
    out.reserve(beliefs.size());
    std::vector<InfoMessage> inbox;
    for (int i = 0; i < topo.size(); ++i) {
        inbox.clear();
        for (int j : topo.neighbors(i)) {
            inbox.push_back(contributions[static_cast<std::size_t>(j)]);
        }
        out.push_back(fuse(inbox, scale, beliefs[static_cast<std::size_t>(i)].time));
    }
    return out;
}

} // namespace ndkf::fusion
