#pragma once

#include "spheregc/flow_network.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace spheregc {

struct CutStats {
    std::size_t augmentations = 0;
    std::size_t orphans_adopted = 0;
    double solve_ms = 0.0;
};

struct CutResult {
    double flow_value = 0.0;
    // Membership of every non-terminal node in the source side; s and t
    // are implicit (always in / always out).
    std::vector<bool> source_side;
    // Final flow on each input arc, aligned with FlowNetwork::arcs.
    std::vector<double> arc_flow;
    // Net terminal flow per node: flow received from s minus flow sent to t.
    std::vector<double> terminal_flow;
    CutStats stats;
};

// Exact max-flow by augmenting paths over two search trees (one rooted at
// s, one at t) with orphan adoption. The returned source side is the
// largest minimum-cut source set: every node that cannot reach t in the
// final residual graph. Deterministic for a fixed arc order.
CutResult max_flow(const FlowNetwork& net);

struct BruteForceCut {
    double value = 0.0;
    std::vector<bool> source_side;
};

inline constexpr int kBruteForceMaxNodes = 20;

// Exhaustive minimum over all 2^N source sets. Ties resolve to the
// lexicographically least membership vector (node 0 most significant,
// "out" before "in"). Throws InvalidArgument when N > kBruteForceMaxNodes.
BruteForceCut brute_force_min_cut(const FlowNetwork& net);

// DIMACS max-flow text: "p max N M", "n <id> s", "n <id> t", "a u v cap".
// Node v is written as id v+1; s and t take ids node_count+1 and
// node_count+2. Terminal capacities become s->v and v->t arcs.
void write_dimacs(const FlowNetwork& net, std::ostream& out);
FlowNetwork read_dimacs(std::istream& in);

} // namespace spheregc
