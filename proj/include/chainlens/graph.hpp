#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chainlens/store.hpp"

namespace chainlens {

enum class GraphKind : uint8_t { TxGraph = 0, AddressGraph = 1, ClusterGraph = 2 };

const char* graph_kind_name(GraphKind kind); // tx|address|cluster
std::optional<GraphKind> graph_kind_from_name(std::string_view name);

// Integer-indexed directed multigraph in compressed sparse row form, with
// per-edge property columns (value, timestamp, tx id). Adjacency half-edges
// are sorted by (neighbor, edge id), so iteration order is deterministic and
// parallel edges sit next to each other.
struct Graph {
    GraphKind kind = GraphKind::TxGraph;
    uint64_t vertex_count = 0;

    std::vector<uint64_t> fwd_offsets, rev_offsets; // vertex_count + 1 entries
    std::vector<uint64_t> fwd_nbr, rev_nbr;
    std::vector<uint64_t> fwd_edge, rev_edge;

    std::vector<uint64_t> edge_value;
    std::vector<int64_t> edge_time;
    std::vector<uint64_t> edge_tx;

    // ClusterGraph only: dense vertex id -> representative address id
    std::vector<uint64_t> vertex_labels;

    uint64_t edge_count() const { return edge_value.size(); }

    std::span<const uint64_t> out_neighbors(uint64_t v) const {
        return {fwd_nbr.data() + fwd_offsets[v], fwd_nbr.data() + fwd_offsets[v + 1]};
    }
    std::span<const uint64_t> in_neighbors(uint64_t v) const {
        return {rev_nbr.data() + rev_offsets[v], rev_nbr.data() + rev_offsets[v + 1]};
    }
    std::span<const uint64_t> out_edges(uint64_t v) const {
        return {fwd_edge.data() + fwd_offsets[v], fwd_edge.data() + fwd_offsets[v + 1]};
    }
    std::span<const uint64_t> in_edges(uint64_t v) const {
        return {rev_edge.data() + rev_offsets[v], rev_edge.data() + rev_offsets[v + 1]};
    }
    uint64_t out_degree(uint64_t v) const { return fwd_offsets[v + 1] - fwd_offsets[v]; }
    uint64_t in_degree(uint64_t v) const { return rev_offsets[v + 1] - rev_offsets[v]; }

    // degree of the simple projection (parallel edges collapsed)
    uint64_t out_degree_simple(uint64_t v) const;
    uint64_t in_degree_simple(uint64_t v) const;

    // visits each distinct out-/in-neighbor once, ascending
    template <typename F>
    void for_each_out_simple(uint64_t v, F&& f) const {
        auto nbrs = out_neighbors(v);
        for (size_t i = 0; i < nbrs.size(); ++i)
            if (i == 0 || nbrs[i] != nbrs[i - 1]) f(nbrs[i]);
    }
    template <typename F>
    void for_each_in_simple(uint64_t v, F&& f) const {
        auto nbrs = in_neighbors(v);
        for (size_t i = 0; i < nbrs.size(); ++i)
            if (i == 0 || nbrs[i] != nbrs[i - 1]) f(nbrs[i]);
    }
};

struct EdgeRecord {
    uint64_t src, dst, value;
    int64_t time;
    uint64_t tx_id;
};

// Builds a Graph from an edge list; edge ids are the list positions.
Graph build_graph_from_edges(GraphKind kind, uint64_t vertex_count, const std::vector<EdgeRecord>& edges,
                             std::vector<uint64_t> vertex_labels = {});

// vertices = transactions, one edge per spend link (creator -> spender),
// edge value = the spent output's value, timestamp = the spending tx's.
Graph build_tx_graph(const ChainStore& store);

// vertices = addresses; each transaction fans out one edge from every
// distinct input address to every output occurrence, carrying that output's
// value. Coinbase transactions contribute no input side.
Graph build_address_graph(const ChainStore& store);

struct Clustering; // clustering.hpp

// Quotient of the address graph under a finalized clustering. Parallel edges
// are retained so per-transaction properties survive.
Graph build_cluster_graph(const Graph& addr_graph, const Clustering& clustering);

// --- persistence & export ---------------------------------------------------

void save_graph(const Graph& graph, const std::filesystem::path& file);
Graph load_graph(const std::filesystem::path& file);

// edge list CSV: src,dst,value,timestamp,tx_id (one row per edge, sorted by
// (src, dst, edge_id)); byte-identical across rebuilds of the same store
std::string graph_to_csv(const Graph& graph);

} // namespace chainlens
