#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chainlens/graph.hpp"
#include "chainlens/store.hpp"

namespace chainlens {

// Path template over a property graph: a hop range plus per-hop edge
// predicates and vertex predicates. The text format (one predicate per line,
// grammar in docs/pattern-grammar.md):
//
//   hops 3 5                 # min max (one number = exact)
//   edge value 1000 50000    # satoshi range, inclusive, for every hop
//   edge@2 value 0 100       # ... for hop 2 only (1-based)
//   edge value_rel 0.05      # every hop within +-5% of the first hop's value
//   edge max_delay 3600      # each hop at most this many seconds after the previous
//   edge increasing_time     # strictly increasing timestamps along the path
//   vertex tag ransomware    # every vertex carries this label
//   vertex min_degree 1      # multigraph degree (in+out) bounds
//   vertex max_degree 4
//   anchor 7 12 99           # start vertices (default: all)
struct EdgePredicate {
    std::optional<uint64_t> value_min, value_max;
    std::optional<int64_t> max_delay; // seconds since the previous hop
};

struct PathPattern {
    uint32_t min_hops = 1, max_hops = 1;
    EdgePredicate default_edge;
    std::map<uint32_t, EdgePredicate> per_hop; // 1-based hop index -> override
    std::optional<double> value_rel_band;      // fraction around the first hop's value
    bool increasing_time = false;
    std::optional<std::string> required_tag;
    std::optional<uint64_t> min_degree, max_degree;
    std::vector<uint64_t> anchors; // empty = every vertex

    static PathPattern parse(std::istream& text); // PatternInvalid on bad grammar
    void validate() const;                        // bounds well-ordered, min_hops >= 1
    const EdgePredicate& edge_predicate(uint32_t hop) const;
};

struct Match {
    std::vector<uint64_t> vertices;
    std::vector<uint64_t> edges;
    std::vector<std::pair<std::string, std::string>> bindings; // predicate name -> witnessed value
};

// Depth-first enumeration of simple paths satisfying the pattern, anchors
// (or all vertices) in ascending id order, edges in (neighbor, edge id)
// order; stops after `limit` matches (0 = unlimited). Optional labels give
// the vertex tag predicate something to look at.
std::vector<Match> match_path_pattern(const Graph& graph, const PathPattern& pattern, uint64_t limit = 0,
                                      const std::vector<std::set<std::string>>* vertex_tags = nullptr);

// Maximal peeling chains: runs of >= min_length transactions, each with
// exactly two outputs, where exactly one output is spent by the successor
// (itself a two-output transaction). Ambiguous continuations (both outputs
// spent by two-output transactions) end the chain.
std::vector<std::vector<uint64_t>> find_peeling_chains(const ChainStore& store, uint64_t min_length);

std::string matches_to_csv(const std::vector<Match>& matches);

} // namespace chainlens
