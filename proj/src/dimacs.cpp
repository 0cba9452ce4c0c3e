#include "spheregc/error.hpp"
#include "spheregc/maxflow.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace spheregc {

void write_dimacs(const FlowNetwork& net, std::ostream& out) {
    const int n = net.node_count;
    const int s = n + 1;
    const int t = n + 2;
    std::size_t m = net.arcs.size();
    for (int v = 0; v < n; ++v) {
        const auto i = static_cast<std::size_t>(v);
        m += (net.source_capacity[i] > 0.0 ? 1 : 0) + (net.sink_capacity[i] > 0.0 ? 1 : 0);
    }
    if (net.direct_flow > 0.0) {
        ++m;
    }
    const auto old_precision = out.precision(17);
    out << "c spheregc flow network: " << n << " nodes, " << net.z_arc_count << " z-arcs, "
        << net.r_arc_count << " r-arcs\n";
    out << "p max " << n + 2 << ' ' << m << '\n';
    out << "n " << s << " s\n";
    out << "n " << t << " t\n";
    if (net.direct_flow > 0.0) {
        out << "a " << s << ' ' << t << ' ' << net.direct_flow << '\n';
    }
    for (int v = 0; v < n; ++v) {
        const double c = net.source_capacity[static_cast<std::size_t>(v)];
        if (c > 0.0) {
            out << "a " << s << ' ' << v + 1 << ' ' << c << '\n';
        }
    }
    for (int v = 0; v < n; ++v) {
        const double c = net.sink_capacity[static_cast<std::size_t>(v)];
        if (c > 0.0) {
            out << "a " << v + 1 << ' ' << t << ' ' << c << '\n';
        }
    }
    for (const Arc& a : net.arcs) {
        out << "a " << a.from + 1 << ' ' << a.to + 1 << ' ' << a.capacity << '\n';
    }
    out.precision(old_precision);
}

namespace {

[[noreturn]] void dimacs_error(std::size_t line_no, const std::string& what) {
    throw FormatError("DIMACS line " + std::to_string(line_no) + ": " + what);
}

struct RawArc {
    long long from;
    long long to;
    double capacity;
};

} // namespace

FlowNetwork read_dimacs(std::istream& in) {
    long long declared_nodes = -1;
    long long source = -1;
    long long sink = -1;
    std::vector<RawArc> raw;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == 'c' || line[0] == '\r') {
            continue;
        }
        std::istringstream ls(line);
        char tag = 0;
        ls >> tag;
        if (tag == 'p') {
            std::string kind;
            long long arcs = 0;
            if (!(ls >> kind >> declared_nodes >> arcs) || kind != "max" || declared_nodes < 2) {
                dimacs_error(line_no, "expected 'p max <nodes> <arcs>'");
            }
            raw.reserve(static_cast<std::size_t>(std::max(0LL, arcs)));
        } else if (tag == 'n') {
            long long id = 0;
            std::string role;
            if (!(ls >> id >> role) || (role != "s" && role != "t")) {
                dimacs_error(line_no, "expected 'n <id> s|t'");
            }
            (role == "s" ? source : sink) = id;
        } else if (tag == 'a') {
            RawArc a{};
            if (!(ls >> a.from >> a.to >> a.capacity)) {
                dimacs_error(line_no, "expected 'a <from> <to> <capacity>'");
            }
            if (declared_nodes < 0) {
                dimacs_error(line_no, "arc before problem line");
            }
            if (a.from < 1 || a.to < 1 || a.from > declared_nodes || a.to > declared_nodes) {
                dimacs_error(line_no, "node id out of range");
            }
            if (!(a.capacity >= 0.0)) {
                dimacs_error(line_no, "negative capacity");
            }
            raw.push_back(a);
        } else {
            dimacs_error(line_no, std::string("unknown record '") + tag + "'");
        }
    }
    if (declared_nodes < 0) {
        throw FormatError("DIMACS input has no problem line");
    }
    if (source < 1 || sink < 1 || source == sink) {
        throw FormatError("DIMACS input must name distinct source and sink nodes");
    }

    // Non-terminal ids keep their relative order.
    std::map<long long, int> compact;
    for (long long id = 1; id <= declared_nodes; ++id) {
        if (id != source && id != sink) {
            compact.emplace(id, static_cast<int>(compact.size()));
        }
    }
    FlowNetwork net(static_cast<int>(compact.size()));
    for (const RawArc& a : raw) {
        if (a.from == source && a.to == sink) {
            net.direct_flow += a.capacity;
        } else if (a.from == source) {
            if (a.to != source) net.add_source(compact.at(a.to), a.capacity);
        } else if (a.to == sink) {
            if (a.from != sink) net.add_sink(compact.at(a.from), a.capacity);
        } else if (a.to == source || a.from == sink) {
            continue; // cannot carry s-t flow
        } else {
            net.add_arc(compact.at(a.from), compact.at(a.to), a.capacity);
        }
    }
    return net;
}

} // namespace spheregc
