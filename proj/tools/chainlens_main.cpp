// chainlens: parse Bitcoin block data into a columnar store, build the
// transaction/address/cluster graphs, run address-linking heuristics and
// graph analytics, and export results as CSV.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chainlens/analytics.hpp"
#include "chainlens/clustering.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/ingest.hpp"
#include "chainlens/patterns.hpp"
#include "chainlens/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chainlens;

namespace {

struct GlobalOpts {
    std::string data_dir;
    bool quiet = false;
    bool json_errors = false;
};

void progress(const GlobalOpts& g, const std::string& line) {
    if (!g.quiet) std::cout << line << "\n";
}

fs::path data_dir(const GlobalOpts& g) {
    if (!g.data_dir.empty()) return g.data_dir;
    if (const char* env = std::getenv("CHAINLENS_DATA")) return env;
    raise(Errc::NotBuilt, "no data directory (use --data or set CHAINLENS_DATA)");
}

// every CSV gets a sidecar recording the command, parameters and the
// identity of the store it was computed from
void write_csv(const GlobalOpts& g, const fs::path& out, const std::string& content,
               const std::string& command, const json& params) {
    write_file_atomic(out, ByteSpan(reinterpret_cast<const uint8_t*>(content.data()), content.size()));
    json meta;
    meta["command"] = command;
    meta["parameters"] = params;
    fs::path dir = data_dir(g);
    meta["store_manifest_hash"] = store_exists(dir) ? store_manifest_hash(dir) : "";
    std::string text = meta.dump(2);
    text.push_back('\n');
    fs::path side = out;
    side += ".meta.json";
    write_file_atomic(side, ByteSpan(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

GraphKind parse_kind(const std::string& name) {
    std::optional<GraphKind> kind = graph_kind_from_name(name);
    if (!kind) raise(Errc::SchemaError, "unknown graph kind '" + name + "' (tx|address|cluster)");
    return *kind;
}

Graph load_graph_kind(const GlobalOpts& g, const std::string& name) {
    return load_graph(data_dir(g) / "graphs" / (name + ".graph"));
}

Bucket parse_bucket(const std::string& name) {
    if (name == "day") return Bucket::Day;
    if (name == "month") return Bucket::Month;
    raise(Errc::SchemaError, "bucket must be day or month");
}

RateTable load_rates(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoError, "cannot open rates file " + path);
    return RateTable::from_csv(in);
}

std::string scores_csv(const ScoreVector& s) {
    std::string out = "vertex,score\n";
    for (uint64_t v = 0; v < s.scores.size(); ++v)
        out += std::to_string(v) + "," + fmt_score(s.scores[v]) + "\n";
    return out;
}

json score_meta(const ScoreVector& s) {
    return json{{"measure", s.measure},
                {"params", s.params},
                {"iterations", s.iterations},
                {"residual", s.residual},
                {"converged", s.converged},
                {"note", "centrality runs on the simple projection; degree stats count parallel edges"}};
}

// graphs manifest for stage idempotence
bool graph_up_to_date(const fs::path& dir, const std::string& kind, const std::string& store_hash) {
    fs::path mpath = dir / "graphs" / "manifest.json";
    if (!fs::exists(mpath) || !fs::exists(dir / "graphs" / (kind + ".graph"))) return false;
    Bytes data = read_file(mpath);
    json m = json::parse(data.begin(), data.end(), nullptr, false);
    if (m.is_discarded()) return false;
    return m.value("store_manifest_hash", "") == store_hash && m.contains("kinds") &&
           m["kinds"].contains(kind);
}

void record_graph_built(const fs::path& dir, const std::string& kind, const std::string& store_hash) {
    fs::path mpath = dir / "graphs" / "manifest.json";
    json m;
    if (fs::exists(mpath)) {
        Bytes data = read_file(mpath);
        m = json::parse(data.begin(), data.end(), nullptr, false);
        if (m.is_discarded() || m.value("store_manifest_hash", "") != store_hash) m = json::object();
    }
    m["store_manifest_hash"] = store_hash;
    if (!m.contains("kinds")) m["kinds"] = json::object();
    m["kinds"][kind] = true;
    std::string text = m.dump(2);
    text.push_back('\n');
    write_file_atomic(mpath, ByteSpan(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chainlens - graph analytics over Bitcoin blockchain data"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--data", g.data_dir, "data directory (default: $CHAINLENS_DATA)")
        ->envname("CHAINLENS_DATA");
    app.add_flag("--quiet", g.quiet, "suppress progress output");
    app.add_flag("--progress", [](int64_t) {}, "show progress output (default)");
    app.add_flag("--json-errors", g.json_errors, "report errors as JSON on stderr");

    // --- ingest --------------------------------------------------------------
    auto* cmd_ingest = app.add_subcommand("ingest", "parse block files or a fixture into the store");
    std::string fixtures;
    std::vector<std::string> block_files;
    std::string magic_hex = "F9BEB4D9";
    int64_t height_limit = -1;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    cmd_ingest->add_option("--fixtures", fixtures, "fixture chain (one JSON block per line)");
    cmd_ingest->add_option("--blocks", block_files, "raw blk*.dat files");
    cmd_ingest->add_option("--network-magic", magic_hex, "envelope magic, hex (default F9BEB4D9)");
    cmd_ingest->add_option("--height-limit", height_limit, "keep blocks up to this height");
    cmd_ingest->add_option("--workers", workers, "parallel block-file parsers");
    cmd_ingest->callback([&]() {
        if (fixtures.empty() == block_files.empty())
            throw CLI::ValidationError("ingest", "pass exactly one of --fixtures / --blocks");
        IngestOptions opts;
        opts.data_dir = data_dir(g);
        opts.magic = magic_from_hex(magic_hex);
        if (height_limit >= 0) opts.height_limit = static_cast<uint64_t>(height_limit);
        opts.workers = workers;
        StoreLock lock(opts.data_dir);
        IngestResult res;
        if (!fixtures.empty()) {
            res = ingest_fixture_file(fixtures, opts);
        } else {
            std::vector<fs::path> files(block_files.begin(), block_files.end());
            res = ingest_block_files(files, opts);
        }
        if (res.up_to_date) {
            progress(g, "ingest: store already up to date");
        } else {
            progress(g, "ingest: " + std::to_string(res.blocks) + " blocks, " + std::to_string(res.txs) +
                            " txs, " + std::to_string(res.spend_links) + " spend links, " +
                            std::to_string(res.addresses) + " addresses");
        }
    });

    // --- info ----------------------------------------------------------------
    auto* cmd_info = app.add_subcommand("info", "print store manifest counts");
    cmd_info->callback([&]() {
        fs::path dir = data_dir(g);
        if (!store_exists(dir)) raise(Errc::NotBuilt, "no store at " + dir.string());
        Bytes data = read_file(dir / "manifest.json");
        json m = json::parse(data.begin(), data.end());
        const json& counts = m["counts"];
        std::cout << "blocks:       " << counts["blocks"].get<uint64_t>() << "\n"
                  << "transactions: " << counts["transactions"].get<uint64_t>() << "\n"
                  << "inputs:       " << counts["inputs"].get<uint64_t>() << "\n"
                  << "outputs:      " << counts["outputs"].get<uint64_t>() << "\n"
                  << "addresses:    " << counts["addresses"].get<uint64_t>() << "\n"
                  << "spend links:  " << counts["spend_links"].get<uint64_t>() << "\n";
        fs::path cj = dir / "clustering" / "clustering.json";
        if (fs::exists(cj)) {
            Bytes cdata = read_file(cj);
            json cm = json::parse(cdata.begin(), cdata.end());
            std::cout << "clusters:     " << cm["cluster_count"].get<uint64_t>() << " (heuristics: "
                      << cm.value("heuristics", "?") << ")\n";
        } else {
            std::cout << "clusters:     (not built)\n";
        }
        std::cout << "manifest hash: " << store_manifest_hash(dir) << "\n";
    });

    // --- graph -----------------------------------------------------------------
    auto* cmd_graph = app.add_subcommand("graph", "materialize graph perspectives");
    std::string graph_kind = "all";
    cmd_graph->add_option("--kind", graph_kind, "tx|address|cluster|all (default all)");
    cmd_graph->callback([&]() {
        fs::path dir = data_dir(g);
        StoreLock lock(dir);
        std::string store_hash = store_manifest_hash(dir);
        std::vector<std::string> kinds;
        if (graph_kind == "all")
            kinds = {"tx", "address", "cluster"};
        else
            kinds = {graph_kind};

        std::optional<ChainStore> store;
        std::optional<Graph> addr_graph;
        fs::create_directories(dir / "graphs");
        for (const std::string& kind : kinds) {
            parse_kind(kind);
            if (graph_up_to_date(dir, kind, store_hash)) {
                progress(g, "graph " + kind + ": up to date");
                continue;
            }
            if (kind == "cluster" && graph_kind == "all" &&
                !fs::exists(dir / "clustering" / "clustering.json")) {
                progress(g, "graph cluster: skipped (no clustering built yet)");
                continue;
            }
            if (!store) store = load_store(dir);
            Graph built;
            if (kind == "tx") {
                built = build_tx_graph(*store);
            } else if (kind == "address") {
                built = build_address_graph(*store);
            } else {
                if (!addr_graph) addr_graph = build_address_graph(*store);
                Clustering clustering = load_clustering(dir / "clustering");
                built = build_cluster_graph(*addr_graph, clustering);
            }
            save_graph(built, dir / "graphs" / (kind + ".graph"));
            record_graph_built(dir, kind, store_hash);
            progress(g, "graph " + kind + ": " + std::to_string(built.vertex_count) + " vertices, " +
                            std::to_string(built.edge_count()) + " edges");
        }
    });

    // --- cluster ------------------------------------------------------------------
    auto* cmd_cluster = app.add_subcommand("cluster", "address-linking heuristics and cluster queries");
    std::string heuristics = "multi-input";
    uint64_t max_input_addresses = 0;
    cmd_cluster->add_option("--heuristics", heuristics, "multi-input[,change]");
    cmd_cluster->add_option("--max-input-addresses", max_input_addresses,
                            "skip multi-input merges for txs with more distinct input addresses");

    auto* cmd_cluster_stats = cmd_cluster->add_subcommand("stats", "cluster size histogram");
    std::string histogram_out = "histogram.csv";
    cmd_cluster_stats->add_option("--histogram", histogram_out, "output CSV (size,count)");
    uint64_t degree_cluster = UINT64_MAX;
    cmd_cluster_stats->add_option("--degree-of", degree_cluster,
                                  "also print avg in/out degree of this cluster id");

    auto* cmd_cluster_inspect = cmd_cluster->add_subcommand("inspect", "members of an address's cluster");
    std::string inspect_address, inspect_kind = "pubkeyhash";
    cmd_cluster_inspect->add_option("--address", inspect_address, "address payload, 40 hex digits")
        ->required();
    cmd_cluster_inspect->add_option("--kind", inspect_kind, "pubkeyhash|scripthash|multisig");

    cmd_cluster->callback([&]() {
        fs::path dir = data_dir(g);
        if (cmd_cluster_stats->parsed()) {
            Clustering clustering = load_clustering(dir / "clustering");
            std::string csv = "size,count\n";
            for (const auto& [size, count] : cluster_size_distribution(clustering))
                csv += std::to_string(size) + "," + std::to_string(count) + "\n";
            write_csv(g, histogram_out, csv, "cluster stats", {{"histogram", histogram_out}});
            progress(g, "cluster stats: wrote " + histogram_out);
            if (degree_cluster != UINT64_MAX) {
                ChainStore store = load_store(dir);
                DegreeStats ds = cluster_degree_stats(store, clustering, degree_cluster);
                std::cout << "cluster " << degree_cluster << ": avg_in_degree " << ds.avg_in_degree
                          << ", avg_out_degree " << ds.avg_out_degree << "\n";
            }
            return;
        }
        if (cmd_cluster_inspect->parsed()) {
            ChainStore store = load_store(dir);
            Clustering clustering = load_clustering(dir / "clustering");
            AddressKey key;
            std::optional<ScriptClass> kind = script_class_from_name(inspect_kind);
            if (!kind) raise(Errc::SchemaError, "unknown address kind " + inspect_kind);
            key.kind = *kind;
            Bytes payload = hex_decode(inspect_address);
            if (payload.size() != 20) raise(Errc::SchemaError, "address payload must be 20 bytes");
            std::copy_n(payload.begin(), 20, key.payload.begin());
            uint64_t rep = cluster_of(clustering, store, key);
            std::cout << "cluster " << rep << " members:\n";
            for (uint64_t a = 0; a < clustering.parent.size(); ++a)
                if (clustering.find(a) == rep)
                    std::cout << "  " << a << " " << store.addresses[a].payload_hex() << " ("
                              << script_class_name(store.addresses[a].kind) << ")\n";
            return;
        }

        // heuristic run
        StoreLock lock(dir);
        std::string store_hash = store_manifest_hash(dir);
        std::string params = heuristics + "/max-inputs=" + std::to_string(max_input_addresses);
        fs::path cj = dir / "clustering" / "clustering.json";
        if (fs::exists(cj)) {
            Bytes data = read_file(cj);
            json m = json::parse(data.begin(), data.end(), nullptr, false);
            if (!m.is_discarded() && m.value("heuristics", "") == params &&
                m.value("store_manifest_hash", "") == store_hash) {
                progress(g, "cluster: up to date");
                return;
            }
        }
        ChainStore store = load_store(dir);
        bool with_change = false;
        std::stringstream hs(heuristics);
        std::string h;
        std::vector<std::string> selected;
        while (std::getline(hs, h, ',')) selected.push_back(h);
        if (selected.empty() || selected[0] != "multi-input")
            raise(Errc::SchemaError, "heuristics must start with multi-input");
        for (size_t i = 1; i < selected.size(); ++i) {
            if (selected[i] == "change")
                with_change = true;
            else
                raise(Errc::SchemaError, "unknown heuristic " + selected[i]);
        }
        Clustering clustering = multi_input_cluster(store, max_input_addresses);
        if (with_change) clustering = change_address_refine(store, std::move(clustering));
        save_clustering(clustering, dir / "clustering", store_hash, params);
        progress(g, "cluster: " + std::to_string(clustering.cluster_count()) + " clusters over " +
                        std::to_string(store.addresses.size()) + " addresses (" + params + ")");
    });

    // --- tag -------------------------------------------------------------------
    auto* cmd_tag = app.add_subcommand("tag", "apply seed tags / propagate labels");
    std::string seeds_file;
    cmd_tag->add_option("--seeds", seeds_file, "CSV: address_payload_hex,kind,label,source");

    auto* cmd_tag_prop = cmd_tag->add_subcommand("propagate", "label propagation over a graph");
    std::string prop_graph = "address";
    int prop_iters = 10;
    std::string prop_out = "labels.csv";
    cmd_tag_prop->add_option("--graph", prop_graph, "tx|address|cluster");
    cmd_tag_prop->add_option("--max-iters", prop_iters, "iteration cap");
    cmd_tag_prop->add_option("--out", prop_out, "output CSV");

    cmd_tag->callback([&]() {
        fs::path dir = data_dir(g);
        if (cmd_tag_prop->parsed()) {
            Graph graph = load_graph_kind(g, prop_graph);
            TagSet tags = load_tags(dir / "tags.json");
            Clustering clustering = load_clustering(dir / "clustering");
            std::map<uint64_t, std::string> seeds;
            for (const SeedTag& s : tags.seeds) {
                uint64_t vertex = s.address_id;
                if (graph.kind == GraphKind::ClusterGraph) {
                    uint64_t rep = clustering.find(s.address_id);
                    auto it = std::lower_bound(graph.vertex_labels.begin(), graph.vertex_labels.end(), rep);
                    if (it == graph.vertex_labels.end() || *it != rep) continue;
                    vertex = static_cast<uint64_t>(it - graph.vertex_labels.begin());
                } else if (graph.kind == GraphKind::TxGraph) {
                    raise(Errc::SchemaError, "label propagation needs the address or cluster graph");
                }
                auto [it2, inserted] = seeds.emplace(vertex, s.label);
                if (!inserted && s.label < it2->second) it2->second = s.label;
            }
            LabelAssignment la = propagate_labels(graph, seeds, prop_iters);
            std::string csv = "vertex,label\n";
            for (uint64_t v = 0; v < la.vertex_label.size(); ++v)
                if (la.vertex_label[v] >= 0) csv += std::to_string(v) + "," + la.labels[la.vertex_label[v]] + "\n";
            write_csv(g, prop_out, csv, "tag propagate",
                      {{"graph", prop_graph}, {"max_iters", prop_iters}, {"iterations", la.iterations}});
            progress(g, "tag propagate: " + std::to_string(la.iterations) + " iterations, wrote " + prop_out);
            return;
        }
        if (seeds_file.empty()) throw CLI::ValidationError("tag", "pass --seeds or the propagate subcommand");
        StoreLock lock(dir);
        ChainStore store = load_store(dir);
        Clustering clustering = load_clustering(dir / "clustering");
        std::ifstream in(seeds_file);
        if (!in) raise(Errc::IoError, "cannot open seeds file " + seeds_file);
        TagSet tags = apply_seed_tags(clustering, store, in);
        save_tags(tags, store, dir / "tags.json");
        progress(g, "tag: " + std::to_string(tags.seeds.size()) + " seeds applied, " +
                        std::to_string(tags.cluster_labels.size()) + " clusters labeled");
        for (const std::string& u : tags.unknown_addresses)
            std::cerr << "warning: seed address not in store: " << u << "\n";
    });

    // --- centrality ---------------------------------------------------------------
    auto* cmd_cent = app.add_subcommand("centrality", "centrality measures");
    cmd_cent->require_subcommand(1);
    std::string cent_graph = "tx", cent_out = "centrality.csv";
    double damping = 0.85, tolerance = 1e-8;
    int max_iter = 200;
    uint64_t sample_sources = 0;
    unsigned cent_workers = 1;
    for (const char* name : {"pagerank", "hits", "betweenness", "closeness", "eigenvector"}) {
        auto* sub = cmd_cent->add_subcommand(name);
        sub->add_option("--graph", cent_graph, "tx|address|cluster");
        sub->add_option("--out", cent_out, "output CSV");
        sub->add_option("--workers", cent_workers, "parallel sources (betweenness/closeness)");
        if (std::string(name) == "pagerank") sub->add_option("--damping", damping, "damping factor");
        if (std::string(name) != "betweenness" && std::string(name) != "closeness") {
            sub->add_option("--tolerance", tolerance, "convergence tolerance");
            sub->add_option("--max-iter", max_iter, "iteration cap");
        }
        if (std::string(name) == "betweenness")
            sub->add_option("--sample-sources", sample_sources,
                            "estimate from K sampled sources (required above 200k vertices)");
    }
    cmd_cent->callback([&]() {
        Graph graph = load_graph_kind(g, cent_graph);
        std::string measure = cmd_cent->get_subcommands().front()->get_name();
        if (measure == "betweenness" && graph.vertex_count > 200000 && sample_sources == 0)
            throw CLI::ValidationError("centrality",
                                       "exact betweenness is limited to 200k vertices; pass --sample-sources K");
        if (measure == "hits") {
            HitsScores scores = hits(graph, tolerance, max_iter);
            std::string csv = "vertex,hub,authority\n";
            for (uint64_t v = 0; v < graph.vertex_count; ++v)
                csv += std::to_string(v) + "," + fmt_score(scores.hubs.scores[v]) + "," +
                       fmt_score(scores.authorities.scores[v]) + "\n";
            write_csv(g, cent_out, csv, "centrality hits", score_meta(scores.hubs));
            progress(g, "centrality hits: wrote " + cent_out +
                            (scores.hubs.converged ? "" : " (did not converge)"));
            return;
        }
        ScoreVector s;
        if (measure == "pagerank")
            s = pagerank(graph, damping, tolerance, max_iter);
        else if (measure == "betweenness")
            s = sample_sources > 0 ? betweenness_sampled(graph, sample_sources, 1, cent_workers)
                                   : betweenness(graph, cent_workers);
        else if (measure == "closeness")
            s = closeness(graph, cent_workers);
        else
            s = eigenvector_centrality(graph, tolerance, max_iter);
        write_csv(g, cent_out, scores_csv(s), "centrality " + measure, score_meta(s));
        progress(g, "centrality " + measure + ": wrote " + cent_out + (s.converged ? "" : " (did not converge)"));
    });

    // --- path / scc ------------------------------------------------------------------
    auto* cmd_path = app.add_subcommand("path", "shortest path between two vertices");
    uint64_t path_from = 0, path_to = 0;
    bool temporal = false;
    std::string path_graph = "tx";
    cmd_path->add_option("--from", path_from, "source vertex")->required();
    cmd_path->add_option("--to", path_to, "destination vertex")->required();
    cmd_path->add_flag("--temporal", temporal, "only non-decreasing edge timestamps");
    cmd_path->add_option("--graph", path_graph, "tx|address|cluster");
    cmd_path->callback([&]() {
        Graph graph = load_graph_kind(g, path_graph);
        std::optional<Path> path = shortest_path(graph, path_from, path_to, temporal);
        if (!path) {
            std::cout << "unreachable\n";
            return;
        }
        std::cout << "hops: " << path->edges.size() << "\n";
        for (size_t i = 0; i < path->vertices.size(); ++i) {
            std::cout << path->vertices[i];
            if (i < path->edges.size())
                std::cout << " -[edge " << path->edges[i] << ", value " << graph.edge_value[path->edges[i]]
                          << ", t " << graph.edge_time[path->edges[i]] << "]-> ";
        }
        std::cout << "\n";
    });

    auto* cmd_scc = app.add_subcommand("scc", "strongly connected components");
    std::string scc_graph = "tx", scc_out;
    cmd_scc->add_option("--graph", scc_graph, "tx|address|cluster");
    cmd_scc->add_option("--out", scc_out, "write vertex,component CSV");
    cmd_scc->callback([&]() {
        Graph graph = load_graph_kind(g, scc_graph);
        SccResult scc = strongly_connected_components(graph);
        std::cout << scc.component_count << " components over " << graph.vertex_count << " vertices\n";
        if (!scc_out.empty()) {
            std::string csv = "vertex,component\n";
            for (uint64_t v = 0; v < graph.vertex_count; ++v)
                csv += std::to_string(v) + "," + std::to_string(scc.component[v]) + "\n";
            write_csv(g, scc_out, csv, "scc", {{"graph", scc_graph}});
        }
    });

    // --- stats -------------------------------------------------------------------------
    auto* cmd_stats = app.add_subcommand("stats", "chain statistics time series");
    cmd_stats->require_subcommand(1);
    std::string bucket_name = "day", rates_file, stats_out = "stats.csv";
    double threshold_usd = 1000.0;
    for (const char* name : {"fees", "velocity", "address-types", "high-value"}) {
        auto* sub = cmd_stats->add_subcommand(name);
        if (std::string(name) != "high-value") sub->add_option("--bucket", bucket_name, "day|month");
        sub->add_option("--rates", rates_file, "CSV date,usd_per_btc");
        sub->add_option("--out", stats_out, "output CSV");
        if (std::string(name) == "high-value")
            sub->add_option("--threshold-usd", threshold_usd, "fee threshold in USD (default 1000)");
    }
    cmd_stats->callback([&]() {
        fs::path dir = data_dir(g);
        ChainStore store = load_store(dir);
        std::string which = cmd_stats->get_subcommands().front()->get_name();
        Bucket bucket = parse_bucket(bucket_name);
        json params = {{"bucket", bucket_name}, {"rates", rates_file}};

        if (which == "velocity") {
            std::string csv = "bucket,velocity\n";
            for (const VelocityPoint& p : velocity_series(store, bucket))
                csv += format_bucket(p.bucket_key, bucket) + "," + fmt_score(p.velocity) + "\n";
            params["formula"] =
                "sum(non-coinbase output value in bucket) / cumulative coinbase supply at bucket end";
            write_csv(g, stats_out, csv, "stats velocity", params);
        } else if (which == "address-types") {
            std::string csv = "bucket,pubkey,pubkeyhash,scripthash,multisig,nonstandard\n";
            for (const AddressTypePoint& p : address_type_series(store, bucket)) {
                csv += format_bucket(p.bucket_key, bucket);
                for (uint64_t c : p.counts) csv += "," + std::to_string(c);
                csv += "\n";
            }
            write_csv(g, stats_out, csv, "stats address-types", params);
        } else if (which == "fees") {
            std::optional<RateTable> rates;
            if (!rates_file.empty()) rates = load_rates(rates_file);
            std::string csv = rates ? "bucket,tx_count,mean_fee_sats,mean_fee_per_byte,mean_fee_usd\n"
                                    : "bucket,tx_count,mean_fee_sats,mean_fee_per_byte\n";
            for (const FeePoint& p : fee_series(store, bucket, rates ? &*rates : nullptr)) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.2f", p.mean_fee_sats);
                csv += format_bucket(p.bucket_key, bucket) + "," + std::to_string(p.tx_count) + "," + buf;
                std::snprintf(buf, sizeof buf, "%.4f", p.mean_fee_per_byte);
                csv += std::string(",") + buf;
                if (rates) csv += "," + format_usd_e8(p.mean_fee_usd_e8);
                csv += "\n";
            }
            write_csv(g, stats_out, csv, "stats fees", params);
        } else { // high-value
            if (rates_file.empty()) raise(Errc::MissingRate, "high-value needs --rates");
            RateTable rates = load_rates(rates_file);
            int64_t threshold_e8 = static_cast<int64_t>(threshold_usd * 100000000.0);
            std::string csv = "date,tx_id,fee_sats,fee_usd\n";
            for (const HighValueTx& t : high_value_transactions(store, rates, threshold_e8))
                csv += format_day(t.day_key) + "," + std::to_string(t.tx_id) + "," +
                       std::to_string(t.fee_sats) + "," + format_usd_e8(t.fee_usd_e8) + "\n";
            params["threshold_usd"] = threshold_usd;
            write_csv(g, stats_out, csv, "stats high-value", params);
        }
        progress(g, "stats " + which + ": wrote " + stats_out);
    });

    // --- match -------------------------------------------------------------------------
    auto* cmd_match = app.add_subcommand("match", "pattern matching over a graph");
    std::string pattern_file, match_graph = "tx", match_out = "matches.csv";
    uint64_t match_limit = 0;
    bool use_tags = false;
    cmd_match->add_option("--pattern", pattern_file, "pattern template file");
    cmd_match->add_option("--graph", match_graph, "tx|address|cluster");
    cmd_match->add_option("--limit", match_limit, "stop after N matches (0 = unlimited)");
    cmd_match->add_option("--out", match_out, "output CSV");
    cmd_match->add_flag("--tags", use_tags, "load tags.json for vertex tag predicates");

    auto* cmd_peel = cmd_match->add_subcommand("peeling", "find peeling chains");
    uint64_t min_length = 3;
    std::string peel_out = "peeling.csv";
    cmd_peel->add_option("--min-length", min_length, "minimum chain length");
    cmd_peel->add_option("--out", peel_out, "output CSV");

    cmd_match->callback([&]() {
        fs::path dir = data_dir(g);
        if (cmd_peel->parsed()) {
            ChainStore store = load_store(dir);
            std::vector<std::vector<uint64_t>> chains = find_peeling_chains(store, min_length);
            std::string csv = "chain_index,length,tx_ids\n";
            for (size_t i = 0; i < chains.size(); ++i) {
                csv += std::to_string(i) + "," + std::to_string(chains[i].size()) + ",";
                for (size_t t = 0; t < chains[i].size(); ++t) {
                    if (t) csv += ';';
                    csv += std::to_string(chains[i][t]);
                }
                csv += "\n";
            }
            write_csv(g, peel_out, csv, "match peeling", {{"min_length", min_length}});
            progress(g, "match peeling: " + std::to_string(chains.size()) + " chains, wrote " + peel_out);
            return;
        }
        if (pattern_file.empty()) throw CLI::ValidationError("match", "pass --pattern or the peeling subcommand");
        std::ifstream in(pattern_file);
        if (!in) raise(Errc::IoError, "cannot open pattern file " + pattern_file);
        PathPattern pattern = PathPattern::parse(in);
        Graph graph = load_graph_kind(g, match_graph);

        std::vector<std::set<std::string>> vertex_tags;
        if (use_tags) {
            TagSet tags = load_tags(dir / "tags.json");
            Clustering clustering = load_clustering(dir / "clustering");
            vertex_tags.resize(graph.vertex_count);
            if (graph.kind == GraphKind::AddressGraph) {
                for (uint64_t a = 0; a < clustering.parent.size(); ++a) {
                    auto it = tags.cluster_labels.find(clustering.find(a));
                    if (it != tags.cluster_labels.end()) vertex_tags[a] = it->second;
                }
            } else if (graph.kind == GraphKind::ClusterGraph) {
                for (uint64_t v = 0; v < graph.vertex_count; ++v) {
                    auto it = tags.cluster_labels.find(graph.vertex_labels[v]);
                    if (it != tags.cluster_labels.end()) vertex_tags[v] = it->second;
                }
            }
        }
        std::vector<Match> matches =
            match_path_pattern(graph, pattern, match_limit, use_tags ? &vertex_tags : nullptr);
        write_csv(g, match_out, matches_to_csv(matches), "match",
                  {{"pattern", pattern_file}, {"graph", match_graph}, {"limit", match_limit}});
        progress(g, "match: " + std::to_string(matches.size()) + " matches, wrote " + match_out);
    });

    // --- export ------------------------------------------------------------------------
    auto* cmd_export = app.add_subcommand("export", "export built artifacts as CSV");
    cmd_export->require_subcommand(1);
    std::string export_graph_kind = "tx", export_out = "export.csv", export_format = "csv";
    auto* exp_graph = cmd_export->add_subcommand("graph", "edge list of a built graph");
    exp_graph->add_option("--kind", export_graph_kind, "tx|address|cluster");
    exp_graph->add_option("--format", export_format, "csv");
    exp_graph->add_option("--out", export_out, "output file");
    auto* exp_clusters = cmd_export->add_subcommand("clusters", "address -> cluster id");
    exp_clusters->add_option("--out", export_out, "output file");
    auto* exp_tags = cmd_export->add_subcommand("tags", "cluster labels");
    exp_tags->add_option("--out", export_out, "output file");
    auto* exp_series = cmd_export->add_subcommand("series", "recompute a stats series");
    std::string series_kind = "fees";
    exp_series->add_option("--kind", series_kind, "fees|velocity|address-types");
    exp_series->add_option("--bucket", bucket_name, "day|month");
    exp_series->add_option("--rates", rates_file, "CSV date,usd_per_btc");
    exp_series->add_option("--out", export_out, "output file");

    cmd_export->callback([&]() {
        fs::path dir = data_dir(g);
        if (export_format != "csv") raise(Errc::SchemaError, "only --format csv is supported");
        if (exp_graph->parsed()) {
            Graph graph = load_graph_kind(g, export_graph_kind);
            write_csv(g, export_out, graph_to_csv(graph), "export graph", {{"kind", export_graph_kind}});
        } else if (exp_clusters->parsed()) {
            ChainStore store = load_store(dir);
            Clustering clustering = load_clustering(dir / "clustering");
            std::string csv = "address_id,payload_hex,kind,cluster_id\n";
            for (uint64_t a = 0; a < clustering.parent.size(); ++a)
                csv += std::to_string(a) + "," + store.addresses[a].payload_hex() + "," +
                       script_class_name(store.addresses[a].kind) + "," +
                       std::to_string(clustering.find(a)) + "\n";
            write_csv(g, export_out, csv, "export clusters", json::object());
        } else if (exp_tags->parsed()) {
            TagSet tags = load_tags(dir / "tags.json");
            std::string csv = "cluster_id,label\n";
            for (const auto& [cluster, labels] : tags.cluster_labels)
                for (const std::string& label : labels)
                    csv += std::to_string(cluster) + "," + label + "\n";
            write_csv(g, export_out, csv, "export tags", json::object());
        } else {
            ChainStore store = load_store(dir);
            Bucket bucket = parse_bucket(bucket_name);
            std::string csv;
            if (series_kind == "velocity") {
                csv = "bucket,velocity\n";
                for (const VelocityPoint& p : velocity_series(store, bucket))
                    csv += format_bucket(p.bucket_key, bucket) + "," + fmt_score(p.velocity) + "\n";
            } else if (series_kind == "address-types") {
                csv = "bucket,pubkey,pubkeyhash,scripthash,multisig,nonstandard\n";
                for (const AddressTypePoint& p : address_type_series(store, bucket)) {
                    csv += format_bucket(p.bucket_key, bucket);
                    for (uint64_t c : p.counts) csv += "," + std::to_string(c);
                    csv += "\n";
                }
            } else if (series_kind == "fees") {
                std::optional<RateTable> rates;
                if (!rates_file.empty()) rates = load_rates(rates_file);
                csv = rates ? "bucket,tx_count,mean_fee_sats,mean_fee_per_byte,mean_fee_usd\n"
                            : "bucket,tx_count,mean_fee_sats,mean_fee_per_byte\n";
                for (const FeePoint& p : fee_series(store, bucket, rates ? &*rates : nullptr)) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.2f", p.mean_fee_sats);
                    csv += format_bucket(p.bucket_key, bucket) + "," + std::to_string(p.tx_count) + "," + buf;
                    std::snprintf(buf, sizeof buf, "%.4f", p.mean_fee_per_byte);
                    csv += std::string(",") + buf;
                    if (rates) csv += "," + format_usd_e8(p.mean_fee_usd_e8);
                    csv += "\n";
                }
            } else {
                raise(Errc::SchemaError, "unknown series kind " + series_kind);
            }
            write_csv(g, export_out, csv, "export series", {{"kind", series_kind}, {"bucket", bucket_name}});
        }
        progress(g, "export: wrote " + export_out);
    });

    // global flags (--data, --quiet, ...) are accepted after subcommands too
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
        for (CLI::App* sub : cmd->get_subcommands([](CLI::App*) { return true; })) {
            sub->fallthrough();
            enable_fallthrough(sub);
        }
    };
    enable_fallthrough(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const Error& e) {
        if (g.json_errors)
            std::cerr << json{{"error", errc_name(e.code())}, {"message", e.detail()}}.dump() << "\n";
        else
            std::cerr << "error[" << errc_name(e.code()) << "]: " << e.detail() << "\n";
        return 1;
    } catch (const std::exception& e) {
        if (g.json_errors)
            std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        else
            std::cerr << "error[Internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
