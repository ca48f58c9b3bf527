// The three graph perspectives, materialized as CSR with property columns.

#include "chainlens/graph.hpp"

#include <algorithm>
#include <numeric>

#include "chainlens/clustering.hpp"

namespace chainlens {

const char* graph_kind_name(GraphKind kind) {
    switch (kind) {
    case GraphKind::TxGraph: return "tx";
    case GraphKind::AddressGraph: return "address";
    case GraphKind::ClusterGraph: return "cluster";
    }
    return "tx";
}

std::optional<GraphKind> graph_kind_from_name(std::string_view name) {
    if (name == "tx") return GraphKind::TxGraph;
    if (name == "address") return GraphKind::AddressGraph;
    if (name == "cluster") return GraphKind::ClusterGraph;
    return std::nullopt;
}

uint64_t Graph::out_degree_simple(uint64_t v) const {
    uint64_t n = 0;
    for_each_out_simple(v, [&](uint64_t) { ++n; });
    return n;
}

uint64_t Graph::in_degree_simple(uint64_t v) const {
    uint64_t n = 0;
    for_each_in_simple(v, [&](uint64_t) { ++n; });
    return n;
}

Graph build_graph_from_edges(GraphKind kind, uint64_t vertex_count, const std::vector<EdgeRecord>& edges,
                             std::vector<uint64_t> vertex_labels) {
    Graph g;
    g.kind = kind;
    g.vertex_count = vertex_count;
    g.vertex_labels = std::move(vertex_labels);

    uint64_t m = edges.size();
    g.edge_value.resize(m);
    g.edge_time.resize(m);
    g.edge_tx.resize(m);
    for (uint64_t e = 0; e < m; ++e) {
        g.edge_value[e] = edges[e].value;
        g.edge_time[e] = edges[e].time;
        g.edge_tx[e] = edges[e].tx_id;
    }

    // counting sort into CSR, then per-vertex sort by (neighbor, edge id)
    auto build_side = [&](bool forward, std::vector<uint64_t>& offsets, std::vector<uint64_t>& nbr,
                          std::vector<uint64_t>& eid) {
        offsets.assign(vertex_count + 1, 0);
        for (const EdgeRecord& e : edges) ++offsets[(forward ? e.src : e.dst) + 1];
        std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
        nbr.resize(m);
        eid.resize(m);
        std::vector<uint64_t> cursor(offsets.begin(), offsets.end() - 1);
        for (uint64_t e = 0; e < m; ++e) {
            uint64_t key = forward ? edges[e].src : edges[e].dst;
            uint64_t slot = cursor[key]++;
            nbr[slot] = forward ? edges[e].dst : edges[e].src;
            eid[slot] = e;
        }
        for (uint64_t v = 0; v < vertex_count; ++v) {
            uint64_t lo = offsets[v], hi = offsets[v + 1];
            std::vector<std::pair<uint64_t, uint64_t>> bucket;
            bucket.reserve(hi - lo);
            for (uint64_t i = lo; i < hi; ++i) bucket.emplace_back(nbr[i], eid[i]);
            std::sort(bucket.begin(), bucket.end());
            for (uint64_t i = lo; i < hi; ++i) {
                nbr[i] = bucket[i - lo].first;
                eid[i] = bucket[i - lo].second;
            }
        }
    };
    build_side(true, g.fwd_offsets, g.fwd_nbr, g.fwd_edge);
    build_side(false, g.rev_offsets, g.rev_nbr, g.rev_edge);
    return g;
}

Graph build_tx_graph(const ChainStore& store) {
    std::vector<EdgeRecord> edges;
    edges.reserve(store.inputs.size());
    for (const InputRow& in : store.inputs) {
        if (in.spent_output_id == kNoId) continue;
        const OutputRow& out = store.outputs[in.spent_output_id];
        edges.push_back({out.tx_id, in.tx_id, out.value, store.txs[in.tx_id].timestamp, in.tx_id});
    }
    return build_graph_from_edges(GraphKind::TxGraph, store.txs.size(), edges);
}

Graph build_address_graph(const ChainStore& store) {
    std::vector<EdgeRecord> edges;
    std::vector<uint64_t> in_addrs;
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        if (tx.is_coinbase) continue;
        in_addrs.clear();
        for (uint64_t i = tx.first_input; i < tx.first_input + tx.input_count; ++i)
            if (store.inputs[i].resolved_address_id != kNoId)
                in_addrs.push_back(static_cast<uint64_t>(store.inputs[i].resolved_address_id));
        std::sort(in_addrs.begin(), in_addrs.end());
        in_addrs.erase(std::unique(in_addrs.begin(), in_addrs.end()), in_addrs.end());
        if (in_addrs.empty()) continue;
        for (uint64_t src : in_addrs) {
            for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o) {
                const OutputRow& out = store.outputs[o];
                if (out.address_id == kNoId) continue;
                edges.push_back({src, static_cast<uint64_t>(out.address_id), out.value, tx.timestamp, tx_id});
            }
        }
    }
    return build_graph_from_edges(GraphKind::AddressGraph, store.addresses.size(), edges);
}

Graph build_cluster_graph(const Graph& addr_graph, const Clustering& clustering) {
    if (clustering.parent.size() != addr_graph.vertex_count)
        raise(Errc::UnknownCluster, "clustering does not cover the address graph");

    // dense renumbering: k-th smallest representative becomes vertex k
    std::vector<uint64_t> reps;
    reps.reserve(clustering.parent.size());
    for (uint64_t a = 0; a < clustering.parent.size(); ++a)
        if (clustering.find(a) == a) reps.push_back(a);
    std::vector<uint64_t> rep_to_vertex(clustering.parent.size(), 0);
    for (uint64_t k = 0; k < reps.size(); ++k) rep_to_vertex[reps[k]] = k;

    // edge ids carry over 1:1 from the address graph, so property columns
    // stay aligned and the identity quotient reproduces its input
    std::vector<EdgeRecord> edges(addr_graph.edge_count());
    for (uint64_t src = 0; src < addr_graph.vertex_count; ++src) {
        auto nbrs = addr_graph.out_neighbors(src);
        auto eids = addr_graph.out_edges(src);
        for (size_t i = 0; i < nbrs.size(); ++i) {
            uint64_t e = eids[i];
            edges[e] = {rep_to_vertex[clustering.find(src)], rep_to_vertex[clustering.find(nbrs[i])],
                        addr_graph.edge_value[e], addr_graph.edge_time[e], addr_graph.edge_tx[e]};
        }
    }
    uint64_t cluster_count = reps.size();
    return build_graph_from_edges(GraphKind::ClusterGraph, cluster_count, edges, std::move(reps));
}

// --- persistence & export ---------------------------------------------------

namespace {

constexpr uint32_t kGraphFormatVersion = 1;
constexpr char kGraphMagic[4] = {'C', 'L', 'G', 'R'};

void put_u64s(ByteWriter& w, const std::vector<uint64_t>& v) {
    for (uint64_t x : v) w.u64(x);
}
void put_i64s(ByteWriter& w, const std::vector<int64_t>& v) {
    for (int64_t x : v) w.i64(x);
}
std::vector<uint64_t> get_u64s(ByteReader& r, uint64_t n) {
    std::vector<uint64_t> v(n);
    for (uint64_t& x : v) x = r.u64();
    return v;
}
std::vector<int64_t> get_i64s(ByteReader& r, uint64_t n) {
    std::vector<int64_t> v(n);
    for (int64_t& x : v) x = r.i64();
    return v;
}

} // namespace

void save_graph(const Graph& graph, const std::filesystem::path& file) {
    ByteWriter w;
    w.bytes(ByteSpan(reinterpret_cast<const uint8_t*>(kGraphMagic), 4));
    w.u32(kGraphFormatVersion);
    w.u8(static_cast<uint8_t>(graph.kind));
    w.u8(graph.vertex_labels.empty() ? 0 : 1);
    w.u64(graph.vertex_count);
    w.u64(graph.edge_count());
    put_u64s(w, graph.fwd_offsets);
    put_u64s(w, graph.fwd_nbr);
    put_u64s(w, graph.fwd_edge);
    put_u64s(w, graph.rev_offsets);
    put_u64s(w, graph.rev_nbr);
    put_u64s(w, graph.rev_edge);
    put_u64s(w, graph.edge_value);
    put_i64s(w, graph.edge_time);
    put_u64s(w, graph.edge_tx);
    if (!graph.vertex_labels.empty()) put_u64s(w, graph.vertex_labels);
    write_file_atomic(file, w.data());
}

Graph load_graph(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file))
        raise(Errc::NotBuilt, "graph file " + file.string() + " missing (run 'graph' first)");
    Bytes data = read_file(file);
    ByteReader r(data, Errc::StoreCorrupt);
    ByteSpan magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kGraphMagic))
        raise(Errc::StoreCorrupt, "not a graph file: " + file.string());
    if (r.u32() != kGraphFormatVersion) raise(Errc::StoreCorrupt, "unsupported graph format version");

    Graph g;
    g.kind = static_cast<GraphKind>(r.u8());
    bool has_labels = r.u8() != 0;
    g.vertex_count = r.u64();
    uint64_t m = r.u64();
    g.fwd_offsets = get_u64s(r, g.vertex_count + 1);
    g.fwd_nbr = get_u64s(r, m);
    g.fwd_edge = get_u64s(r, m);
    g.rev_offsets = get_u64s(r, g.vertex_count + 1);
    g.rev_nbr = get_u64s(r, m);
    g.rev_edge = get_u64s(r, m);
    g.edge_value = get_u64s(r, m);
    g.edge_time = get_i64s(r, m);
    g.edge_tx = get_u64s(r, m);
    if (has_labels) g.vertex_labels = get_u64s(r, g.vertex_count);
    if (!r.empty()) raise(Errc::StoreCorrupt, "graph file has trailing bytes");
    return g;
}

std::string graph_to_csv(const Graph& graph) {
    std::string out = "src,dst,value,timestamp,tx_id\n";
    for (uint64_t v = 0; v < graph.vertex_count; ++v) {
        auto nbrs = graph.out_neighbors(v);
        auto eids = graph.out_edges(v);
        for (size_t i = 0; i < nbrs.size(); ++i) {
            uint64_t e = eids[i];
            out += std::to_string(v);
            out += ',';
            out += std::to_string(nbrs[i]);
            out += ',';
            out += std::to_string(graph.edge_value[e]);
            out += ',';
            out += std::to_string(graph.edge_time[e]);
            out += ',';
            out += std::to_string(graph.edge_tx[e]);
            out += '\n';
        }
    }
    return out;
}

} // namespace chainlens
