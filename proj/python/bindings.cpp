// chainlens._core: python bindings over the C++ toolkit. Stores and graphs
// stay in C++; query results cross the boundary as plain python types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "chainlens/analytics.hpp"
#include "chainlens/clustering.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/ingest.hpp"
#include "chainlens/patterns.hpp"
#include "chainlens/store.hpp"

namespace py = pybind11;
using namespace chainlens;

namespace {

Bytes to_bytes(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::dict score_to_dict(const ScoreVector& s) {
    py::dict d;
    d["measure"] = s.measure;
    d["scores"] = s.scores;
    d["iterations"] = s.iterations;
    d["residual"] = s.residual;
    d["converged"] = s.converged;
    return d;
}

std::map<uint64_t, std::string> seeds_from_dict(const py::dict& seeds) {
    std::map<uint64_t, std::string> out;
    for (auto item : seeds) out[item.first.cast<uint64_t>()] = item.second.cast<std::string>();
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bitcoin blockchain graph analytics core";

    py::register_exception<Error>(m, "ChainError");

    py::enum_<ScriptClass>(m, "ScriptClass")
        .value("PAY_TO_PUBKEY", ScriptClass::PayToPubkey)
        .value("PAY_TO_PUBKEY_HASH", ScriptClass::PayToPubkeyHash)
        .value("PAY_TO_SCRIPT_HASH", ScriptClass::PayToScriptHash)
        .value("MULTISIG", ScriptClass::Multisig)
        .value("NON_STANDARD", ScriptClass::NonStandard);

    m.def("classify_script",
          [](const py::bytes& script) { return classify_script(to_bytes(script)); });
    m.def("script_to_address", [](const py::bytes& script) -> py::object {
        std::optional<AddressKey> key = script_to_address(to_bytes(script));
        if (!key) return py::none();
        return py::make_tuple(key->kind, key->payload_hex());
    });
    m.def("compute_txid",
          [](const py::bytes& raw) { return compute_txid(to_bytes(raw)).to_hex(); });

    py::class_<ChainStore, std::shared_ptr<ChainStore>>(m, "Store")
        .def_property_readonly("block_count", [](const ChainStore& s) { return s.blocks.size(); })
        .def_property_readonly("tx_count", [](const ChainStore& s) { return s.txs.size(); })
        .def_property_readonly("input_count", [](const ChainStore& s) { return s.inputs.size(); })
        .def_property_readonly("output_count", [](const ChainStore& s) { return s.outputs.size(); })
        .def_property_readonly("address_count", [](const ChainStore& s) { return s.addresses.size(); })
        .def_property_readonly("spend_link_count", [](const ChainStore& s) { return s.spend_link_count(); })
        .def("tx_hash", [](const ChainStore& s, uint64_t tx_id) { return s.txs.at(tx_id).hash.to_hex(); })
        .def("tx_fee", [](const ChainStore& s, uint64_t tx_id) { return s.txs.at(tx_id).fee; })
        .def("address_hex",
             [](const ChainStore& s, uint64_t id) { return s.addresses.at(id).payload_hex(); })
        .def("find_tx", [](const ChainStore& s, const std::string& hex) -> py::object {
            std::optional<uint64_t> id = s.find_tx(Hash32::from_hex(hex));
            if (!id) return py::none();
            return py::cast(*id);
        })
        .def("save", [](const ChainStore& s, const std::string& dir) { save_store(s, dir); });

    m.def("load_store", [](const std::string& dir) {
        return std::make_shared<ChainStore>(load_store(dir));
    });
    m.def(
        "ingest_fixture",
        [](const std::string& jsonl_path) {
            std::ifstream in(jsonl_path);
            if (!in) raise(Errc::IoError, "cannot open " + jsonl_path);
            return std::make_shared<ChainStore>(ingest_fixture(in));
        },
        py::arg("jsonl_path"));
    m.def("ingest_fixture_text", [](const std::string& text) {
        std::istringstream in(text);
        return std::make_shared<ChainStore>(ingest_fixture(in));
    });

    py::class_<Graph, std::shared_ptr<Graph>>(m, "Graph")
        .def_property_readonly("vertex_count", [](const Graph& g) { return g.vertex_count; })
        .def_property_readonly("edge_count", [](const Graph& g) { return g.edge_count(); })
        .def_property_readonly("kind", [](const Graph& g) { return graph_kind_name(g.kind); })
        .def("out_neighbors",
             [](const Graph& g, uint64_t v) {
                 auto span = g.out_neighbors(v);
                 return std::vector<uint64_t>(span.begin(), span.end());
             })
        .def("in_neighbors",
             [](const Graph& g, uint64_t v) {
                 auto span = g.in_neighbors(v);
                 return std::vector<uint64_t>(span.begin(), span.end());
             })
        .def("edge",
             [](const Graph& g, uint64_t e) {
                 py::dict d;
                 d["value"] = g.edge_value.at(e);
                 d["time"] = g.edge_time.at(e);
                 d["tx_id"] = g.edge_tx.at(e);
                 return d;
             })
        .def_property_readonly("vertex_labels", [](const Graph& g) { return g.vertex_labels; })
        .def("to_csv", &graph_to_csv);

    m.def("build_tx_graph",
          [](const ChainStore& s) { return std::make_shared<Graph>(build_tx_graph(s)); });
    m.def("build_address_graph",
          [](const ChainStore& s) { return std::make_shared<Graph>(build_address_graph(s)); });
    m.def("build_cluster_graph", [](const Graph& addr_graph, const Clustering& clustering) {
        return std::make_shared<Graph>(build_cluster_graph(addr_graph, clustering));
    });
    m.def("load_graph",
          [](const std::string& file) { return std::make_shared<Graph>(load_graph(file)); });

    py::class_<Clustering, std::shared_ptr<Clustering>>(m, "Clustering")
        .def("find", [](const Clustering& c, uint64_t a) { return c.find(a); })
        .def_property_readonly("cluster_count", [](const Clustering& c) { return c.cluster_count(); })
        .def_property_readonly("address_count", [](const Clustering& c) { return c.parent.size(); })
        .def("size_histogram", [](const Clustering& c) { return cluster_size_distribution(c); })
        .def("members", [](const Clustering& c, uint64_t rep) {
            std::vector<uint64_t> out;
            for (uint64_t a = 0; a < c.parent.size(); ++a)
                if (c.find(a) == rep) out.push_back(a);
            return out;
        });

    m.def(
        "multi_input_cluster",
        [](const ChainStore& s, uint64_t max_input_addresses) {
            return std::make_shared<Clustering>(multi_input_cluster(s, max_input_addresses));
        },
        py::arg("store"), py::arg("max_input_addresses") = 0);
    m.def("change_address_refine", [](const ChainStore& s, const Clustering& base) {
        return std::make_shared<Clustering>(change_address_refine(s, base));
    });
    m.def("cluster_degree_stats",
          [](const ChainStore& s, const Clustering& c, uint64_t cluster_id) {
              DegreeStats d = cluster_degree_stats(s, c, cluster_id);
              return py::make_tuple(d.avg_in_degree, d.avg_out_degree);
          });

    m.def(
        "pagerank",
        [](const Graph& g, double damping, double tolerance, int max_iter) {
            return score_to_dict(pagerank(g, damping, tolerance, max_iter));
        },
        py::arg("graph"), py::arg("damping") = 0.85, py::arg("tolerance") = 1e-8,
        py::arg("max_iter") = 200);
    m.def(
        "hits",
        [](const Graph& g, double tolerance, int max_iter) {
            HitsScores h = hits(g, tolerance, max_iter);
            py::dict d;
            d["hubs"] = score_to_dict(h.hubs);
            d["authorities"] = score_to_dict(h.authorities);
            return d;
        },
        py::arg("graph"), py::arg("tolerance") = 1e-8, py::arg("max_iter") = 200);
    m.def(
        "betweenness", [](const Graph& g) { return score_to_dict(betweenness(g)); }, py::arg("graph"));
    m.def(
        "closeness", [](const Graph& g) { return score_to_dict(closeness(g)); }, py::arg("graph"));
    m.def(
        "eigenvector_centrality",
        [](const Graph& g, double tolerance, int max_iter) {
            return score_to_dict(eigenvector_centrality(g, tolerance, max_iter));
        },
        py::arg("graph"), py::arg("tolerance") = 1e-8, py::arg("max_iter") = 500);
    m.def(
        "degree_top_k",
        [](const Graph& g, const std::string& direction, uint64_t k) {
            return degree_top_k(g, direction == "in" ? Direction::In : Direction::Out, k);
        },
        py::arg("graph"), py::arg("direction") = "out", py::arg("k") = 10);

    m.def(
        "shortest_path",
        [](const Graph& g, uint64_t src, uint64_t dst, bool temporal) -> py::object {
            std::optional<Path> p = shortest_path(g, src, dst, temporal);
            if (!p) return py::none();
            py::dict d;
            d["vertices"] = p->vertices;
            d["edges"] = p->edges;
            return d;
        },
        py::arg("graph"), py::arg("src"), py::arg("dst"), py::arg("temporal") = false);
    m.def(
        "reachable_set",
        [](const Graph& g, uint64_t src, uint64_t max_hops, bool temporal) {
            return reachable_set(g, src, max_hops, temporal);
        },
        py::arg("graph"), py::arg("src"), py::arg("max_hops") = 0, py::arg("temporal") = false);
    m.def("strongly_connected_components", [](const Graph& g) {
        SccResult r = strongly_connected_components(g);
        py::dict d;
        d["component"] = r.component;
        d["count"] = r.component_count;
        return d;
    });
    m.def(
        "propagate_labels",
        [](const Graph& g, const py::dict& seeds, int max_iters) {
            LabelAssignment la = propagate_labels(g, seeds_from_dict(seeds), max_iters);
            py::dict out;
            for (uint64_t v = 0; v < la.vertex_label.size(); ++v)
                if (la.vertex_label[v] >= 0) out[py::cast(v)] = la.labels[la.vertex_label[v]];
            return out;
        },
        py::arg("graph"), py::arg("seeds"), py::arg("max_iters") = 10);

    m.def(
        "velocity_series",
        [](const ChainStore& s, const std::string& bucket) {
            std::vector<std::pair<std::string, double>> out;
            Bucket b = bucket == "month" ? Bucket::Month : Bucket::Day;
            for (const VelocityPoint& p : velocity_series(s, b))
                out.emplace_back(format_bucket(p.bucket_key, b), p.velocity);
            return out;
        },
        py::arg("store"), py::arg("bucket") = "day");
    m.def(
        "address_type_series",
        [](const ChainStore& s, const std::string& bucket) {
            Bucket b = bucket == "month" ? Bucket::Month : Bucket::Day;
            py::list out;
            for (const AddressTypePoint& p : address_type_series(s, b)) {
                py::dict d;
                d["bucket"] = format_bucket(p.bucket_key, b);
                for (int c = 0; c < kScriptClassCount; ++c)
                    d[script_class_name(static_cast<ScriptClass>(c))] = p.counts[c];
                out.append(d);
            }
            return out;
        },
        py::arg("store"), py::arg("bucket") = "day");
    m.def(
        "fee_series",
        [](const ChainStore& s, const std::string& bucket, const std::string& rates_csv) {
            Bucket b = bucket == "month" ? Bucket::Month : Bucket::Day;
            std::optional<RateTable> rates;
            if (!rates_csv.empty()) {
                std::istringstream in(rates_csv);
                rates = RateTable::from_csv(in);
            }
            py::list out;
            for (const FeePoint& p : fee_series(s, b, rates ? &*rates : nullptr)) {
                py::dict d;
                d["bucket"] = format_bucket(p.bucket_key, b);
                d["tx_count"] = p.tx_count;
                d["mean_fee_sats"] = p.mean_fee_sats;
                d["mean_fee_per_byte"] = p.mean_fee_per_byte;
                if (rates) d["mean_fee_usd"] = format_usd_e8(p.mean_fee_usd_e8);
                out.append(d);
            }
            return out;
        },
        py::arg("store"), py::arg("bucket") = "day", py::arg("rates_csv") = "");
    m.def(
        "high_value_transactions",
        [](const ChainStore& s, const std::string& rates_csv, double threshold_usd) {
            std::istringstream in(rates_csv);
            RateTable rates = RateTable::from_csv(in);
            py::list out;
            for (const HighValueTx& t :
                 high_value_transactions(s, rates, static_cast<int64_t>(threshold_usd * 1e8))) {
                py::dict d;
                d["tx_id"] = t.tx_id;
                d["fee_sats"] = t.fee_sats;
                d["fee_usd"] = format_usd_e8(t.fee_usd_e8);
                d["date"] = format_day(t.day_key);
                out.append(d);
            }
            return out;
        },
        py::arg("store"), py::arg("rates_csv"), py::arg("threshold_usd") = 1000.0);

    m.def(
        "match_path_pattern",
        [](const Graph& g, const std::string& pattern_text, uint64_t limit) {
            std::istringstream in(pattern_text);
            PathPattern pattern = PathPattern::parse(in);
            py::list out;
            for (const Match& match : match_path_pattern(g, pattern, limit)) {
                py::dict d;
                d["vertices"] = match.vertices;
                d["edges"] = match.edges;
                d["bindings"] = match.bindings;
                out.append(d);
            }
            return out;
        },
        py::arg("graph"), py::arg("pattern_text"), py::arg("limit") = 0);
    m.def(
        "find_peeling_chains",
        [](const ChainStore& s, uint64_t min_length) { return find_peeling_chains(s, min_length); },
        py::arg("store"), py::arg("min_length") = 3);
}
