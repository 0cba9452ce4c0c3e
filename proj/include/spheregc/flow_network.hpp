#pragma once

#include <cstddef>
#include <vector>

namespace spheregc {

struct Arc {
    int from = 0;
    int to = 0;
    double capacity = 0.0;
};

// Directed s-t network over nodes 0..node_count-1. The source and sink are
// implicit: their arcs are stored as per-node terminal capacities.
struct FlowNetwork {
    int node_count = 0;
    std::vector<double> source_capacity; // s -> v
    std::vector<double> sink_capacity;   // v -> t
    std::vector<Arc> arcs;

    // Networks built from ray costs: arcs[0, z_arc_count) are the along-ray
    // arcs, the following r_arc_count arcs join neighbouring rays. Both
    // carry capacity `infinity`. Zero for generic networks.
    std::size_t z_arc_count = 0;
    std::size_t r_arc_count = 0;
    double infinity = 0.0;

    // Capacity of a direct s -> t arc, if any (DIMACS input only).
    double direct_flow = 0.0;

    explicit FlowNetwork(int nodes = 0)
        : node_count(nodes), source_capacity(static_cast<std::size_t>(nodes), 0.0),
          sink_capacity(static_cast<std::size_t>(nodes), 0.0) {}

    void add_arc(int from, int to, double capacity) { arcs.push_back({from, to, capacity}); }
    void add_source(int v, double capacity) { source_capacity[static_cast<std::size_t>(v)] += capacity; }
    void add_sink(int v, double capacity) { sink_capacity[static_cast<std::size_t>(v)] += capacity; }

    bool is_structural(std::size_t arc_index) const { return arc_index < z_arc_count + r_arc_count; }

    // Capacity of the cut whose source side is `source_side` (s implied in,
    // t implied out).
    double cut_capacity(const std::vector<bool>& source_side) const;
};

} // namespace spheregc
