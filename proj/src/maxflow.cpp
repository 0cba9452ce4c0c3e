#include "spheregc/maxflow.hpp"

#include "spheregc/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <limits>

namespace spheregc {

double FlowNetwork::cut_capacity(const std::vector<bool>& source_side) const {
    double total = direct_flow;
    for (int v = 0; v < node_count; ++v) {
        const auto i = static_cast<std::size_t>(v);
        total += source_side[i] ? sink_capacity[i] : source_capacity[i];
    }
    for (const Arc& a : arcs) {
        if (source_side[static_cast<std::size_t>(a.from)] && !source_side[static_cast<std::size_t>(a.to)]) {
            total += a.capacity;
        }
    }
    return total;
}

namespace {

constexpr int kNone = -1;
constexpr int kTerminal = -2;
constexpr int kOrphan = -3;
constexpr int kInfiniteDist = std::numeric_limits<int>::max();

// Two-tree augmenting-path solver over a forward-star residual graph.
// Residual arcs come in pairs (forward, reverse) linked through `sister_`.
class TwoTreeSolver {
public:
    explicit TwoTreeSolver(const FlowNetwork& net) : net_(net) {
        const int n = net.node_count;
        const std::size_t m = net.arcs.size();
        offset_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (const Arc& a : net.arcs) {
            if (a.from < 0 || a.from >= n || a.to < 0 || a.to >= n) {
                throw InvalidArgument("arc endpoint out of range");
            }
            if (!(a.capacity >= 0.0)) {
                throw InvalidArgument("arc capacity must be non-negative");
            }
            if (a.from == a.to) {
                continue;
            }
            ++offset_[static_cast<std::size_t>(a.from) + 1];
            ++offset_[static_cast<std::size_t>(a.to) + 1];
        }
        for (int v = 0; v < n; ++v) {
            offset_[static_cast<std::size_t>(v) + 1] += offset_[static_cast<std::size_t>(v)];
        }
        const auto slots = static_cast<std::size_t>(offset_.back());
        head_.resize(slots);
        sister_.resize(slots);
        rcap_.resize(slots);
        forward_slot_.assign(m, -1);
        std::vector<int> fill(offset_.begin(), offset_.end() - 1);
        for (std::size_t k = 0; k < m; ++k) {
            const Arc& a = net.arcs[k];
            if (a.from == a.to) {
                continue;
            }
            const int f = fill[static_cast<std::size_t>(a.from)]++;
            const int r = fill[static_cast<std::size_t>(a.to)]++;
            head_[f] = a.to;
            head_[r] = a.from;
            sister_[f] = r;
            sister_[r] = f;
            rcap_[f] = a.capacity;
            rcap_[r] = 0.0;
            forward_slot_[k] = f;
        }

        const auto nn = static_cast<std::size_t>(n);
        parent_.assign(nn, kNone);
        in_sink_.assign(nn, 0);
        queued_.assign(nn, 0);
        ts_.assign(nn, 0);
        dist_.assign(nn, 0);
        tr_cap_.assign(nn, 0.0);
    }

    CutResult solve() {
        const auto start = std::chrono::steady_clock::now();
        const int n = net_.node_count;
        flow_ = net_.direct_flow;
        for (int v = 0; v < n; ++v) {
            const double src = net_.source_capacity[static_cast<std::size_t>(v)];
            const double snk = net_.sink_capacity[static_cast<std::size_t>(v)];
            if (!(src >= 0.0) || !(snk >= 0.0)) {
                throw InvalidArgument("terminal capacity must be non-negative");
            }
            flow_ += std::min(src, snk);
            tr_cap_[v] = src - snk;
            if (tr_cap_[v] > 0.0) {
                in_sink_[v] = 0;
            } else if (tr_cap_[v] < 0.0) {
                in_sink_[v] = 1;
            } else {
                continue;
            }
            parent_[v] = kTerminal;
            ts_[v] = 0;
            dist_[v] = 1;
            activate(v);
        }

        int current = -1;
        while (true) {
            int i = current;
            if (i >= 0 && parent_[i] == kNone) {
                i = -1;
            }
            if (i < 0) {
                i = next_active();
                if (i < 0) {
                    break;
                }
            }

            const int middle = grow(i);
            ++time_;
            if (middle >= 0) {
                current = i;
                augment(middle);
                adopt_orphans();
            } else {
                current = -1;
            }
        }

        CutResult result;
        result.flow_value = flow_;
        result.source_side = source_side();
        result.arc_flow.assign(net_.arcs.size(), 0.0);
        for (std::size_t k = 0; k < net_.arcs.size(); ++k) {
            if (forward_slot_[k] >= 0) {
                result.arc_flow[k] = rcap_[sister_[forward_slot_[k]]];
            }
        }
        result.terminal_flow.resize(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            const auto i = static_cast<std::size_t>(v);
            result.terminal_flow[i] = (net_.source_capacity[i] - net_.sink_capacity[i]) - tr_cap_[i];
        }
        result.stats.augmentations = augmentations_;
        result.stats.orphans_adopted = orphans_adopted_;
        result.stats.solve_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return result;
    }

private:
    void activate(int v) {
        if (!queued_[v]) {
            queued_[v] = 1;
            active_.push_back(v);
        }
    }

    int next_active() {
        while (!active_.empty()) {
            const int v = active_.front();
            active_.pop_front();
            queued_[v] = 0;
            if (parent_[v] != kNone) {
                return v;
            }
        }
        return -1;
    }

    void set_orphan(int v) {
        parent_[v] = kOrphan;
        orphans_.push_back(v);
    }

    // Extends the tree containing i by one layer. Returns the residual arc
    // joining the two trees (source-tree tail, sink-tree head), or -1.
    int grow(int i) {
        const int begin = offset_[i];
        const int end = offset_[i + 1];
        if (!in_sink_[i]) {
            for (int a = begin; a < end; ++a) {
                if (rcap_[a] <= 0.0) {
                    continue;
                }
                const int j = head_[a];
                if (parent_[j] == kNone) {
                    in_sink_[j] = 0;
                    parent_[j] = sister_[a];
                    ts_[j] = ts_[i];
                    dist_[j] = dist_[i] + 1;
                    activate(j);
                } else if (in_sink_[j]) {
                    return a;
                } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                    parent_[j] = sister_[a];
                    ts_[j] = ts_[i];
                    dist_[j] = dist_[i] + 1;
                }
            }
        } else {
            for (int a = begin; a < end; ++a) {
                if (rcap_[sister_[a]] <= 0.0) {
                    continue;
                }
                const int j = head_[a];
                if (parent_[j] == kNone) {
                    in_sink_[j] = 1;
                    parent_[j] = sister_[a];
                    ts_[j] = ts_[i];
                    dist_[j] = dist_[i] + 1;
                    activate(j);
                } else if (!in_sink_[j]) {
                    return sister_[a];
                } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                    parent_[j] = sister_[a];
                    ts_[j] = ts_[i];
                    dist_[j] = dist_[i] + 1;
                }
            }
        }
        return -1;
    }

    void augment(int middle) {
        // Parent arcs point from a node towards its tree root.
        double bottleneck = rcap_[middle];
        int i = head_[sister_[middle]];
        while (parent_[i] != kTerminal) {
            const int a = parent_[i];
            bottleneck = std::min(bottleneck, rcap_[sister_[a]]);
            i = head_[a];
        }
        bottleneck = std::min(bottleneck, tr_cap_[i]);
        i = head_[middle];
        while (parent_[i] != kTerminal) {
            const int a = parent_[i];
            bottleneck = std::min(bottleneck, rcap_[a]);
            i = head_[a];
        }
        bottleneck = std::min(bottleneck, -tr_cap_[i]);

        rcap_[sister_[middle]] += bottleneck;
        rcap_[middle] -= bottleneck;

        i = head_[sister_[middle]];
        while (true) {
            const int a = parent_[i];
            if (a == kTerminal) {
                break;
            }
            rcap_[a] += bottleneck;
            rcap_[sister_[a]] -= bottleneck;
            if (rcap_[sister_[a]] <= 0.0) {
                rcap_[sister_[a]] = 0.0;
                set_orphan(i);
            }
            i = head_[a];
        }
        tr_cap_[i] -= bottleneck;
        if (tr_cap_[i] <= 0.0) {
            tr_cap_[i] = 0.0;
            set_orphan(i);
        }

        i = head_[middle];
        while (true) {
            const int a = parent_[i];
            if (a == kTerminal) {
                break;
            }
            rcap_[sister_[a]] += bottleneck;
            rcap_[a] -= bottleneck;
            if (rcap_[a] <= 0.0) {
                rcap_[a] = 0.0;
                set_orphan(i);
            }
            i = head_[a];
        }
        tr_cap_[i] += bottleneck;
        if (tr_cap_[i] >= 0.0) {
            tr_cap_[i] = 0.0;
            set_orphan(i);
        }

        flow_ += bottleneck;
        ++augmentations_;
    }

    // Distance from j to its tree root through valid parents, or
    // kInfiniteDist when the chain ends at an orphan. Caches results by
    // timestamp along the walked path.
    int origin_distance(int j) {
        int d = 0;
        int k = j;
        while (true) {
            if (ts_[k] == time_) {
                d += dist_[k];
                break;
            }
            const int a = parent_[k];
            ++d;
            if (a == kTerminal) {
                ts_[k] = time_;
                dist_[k] = 1;
                break;
            }
            if (a == kOrphan) {
                return kInfiniteDist;
            }
            k = head_[a];
        }
        int dd = d;
        for (k = j; ts_[k] != time_; k = head_[parent_[k]]) {
            ts_[k] = time_;
            dist_[k] = dd--;
        }
        return d;
    }

    void adopt_orphans() {
        while (!orphans_.empty()) {
            const int i = orphans_.front();
            orphans_.pop_front();
            ++orphans_adopted_;
            const bool sink_tree = in_sink_[i] != 0;
            const int begin = offset_[i];
            const int end = offset_[i + 1];

            int best = -1;
            int best_dist = kInfiniteDist;
            for (int a = begin; a < end; ++a) {
                const double residual = sink_tree ? rcap_[a] : rcap_[sister_[a]];
                if (residual <= 0.0) {
                    continue;
                }
                const int j = head_[a];
                if (parent_[j] == kNone || (in_sink_[j] != 0) != sink_tree) {
                    continue;
                }
                const int d = origin_distance(j);
                if (d < best_dist) {
                    best = a;
                    best_dist = d;
                }
            }

            if (best >= 0) {
                parent_[i] = best;
                ts_[i] = time_;
                dist_[i] = best_dist + 1;
                continue;
            }

            parent_[i] = kNone;
            for (int a = begin; a < end; ++a) {
                const int j = head_[a];
                if (parent_[j] == kNone || (in_sink_[j] != 0) != sink_tree) {
                    continue;
                }
                const double residual = sink_tree ? rcap_[a] : rcap_[sister_[a]];
                if (residual > 0.0) {
                    activate(j);
                }
                const int pa = parent_[j];
                if (pa != kTerminal && pa != kOrphan && head_[pa] == i) {
                    set_orphan(j);
                }
            }
        }
    }

    // Complement of the set of nodes that can still reach t.
    std::vector<bool> source_side() const {
        const int n = net_.node_count;
        std::vector<char> reaches_sink(static_cast<std::size_t>(n), 0);
        std::vector<int> queue;
        queue.reserve(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            if (tr_cap_[v] < 0.0) {
                reaches_sink[v] = 1;
                queue.push_back(v);
            }
        }
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int w = queue[q];
            for (int a = offset_[w]; a < offset_[w + 1]; ++a) {
                const int u = head_[a];
                if (!reaches_sink[u] && rcap_[sister_[a]] > 0.0) {
                    reaches_sink[u] = 1;
                    queue.push_back(u);
                }
            }
        }
        std::vector<bool> side(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            side[static_cast<std::size_t>(v)] = !reaches_sink[v];
        }
        return side;
    }

    const FlowNetwork& net_;
    std::vector<int> offset_;
    std::vector<int> head_;
    std::vector<int> sister_;
    std::vector<double> rcap_;
    std::vector<int> forward_slot_;

    std::vector<int> parent_;
    std::vector<char> in_sink_;
    std::vector<char> queued_;
    std::vector<int> ts_;
    std::vector<int> dist_;
    std::vector<double> tr_cap_;

    std::deque<int> active_;
    std::deque<int> orphans_;
    int time_ = 0;
    double flow_ = 0.0;
    std::size_t augmentations_ = 0;
    std::size_t orphans_adopted_ = 0;
};

} // namespace

CutResult max_flow(const FlowNetwork& net) {
    if (net.source_capacity.size() != static_cast<std::size_t>(net.node_count) ||
        net.sink_capacity.size() != static_cast<std::size_t>(net.node_count)) {
        throw InvalidArgument("terminal capacity arrays do not match node count");
    }
    TwoTreeSolver solver(net);
    return solver.solve();
}

BruteForceCut brute_force_min_cut(const FlowNetwork& net) {
    const int n = net.node_count;
    if (n > kBruteForceMaxNodes) {
        throw InvalidArgument("brute-force min cut limited to " + std::to_string(kBruteForceMaxNodes) +
                              " nodes (got " + std::to_string(n) + ")");
    }
    BruteForceCut best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<bool> side(static_cast<std::size_t>(n));
    const std::uint64_t combos = std::uint64_t{1} << n;
    for (std::uint64_t m = 0; m < combos; ++m) {
        for (int v = 0; v < n; ++v) {
            side[static_cast<std::size_t>(v)] = ((m >> (n - 1 - v)) & 1U) != 0;
        }
        const double value = net.cut_capacity(side);
        if (value < best.value) {
            best.value = value;
            best.source_side = side;
        }
    }
    return best;
}

} // namespace spheregc
