#include <doctest.h>

#include <random>
#include <sstream>

#include "chainlens/patterns.hpp"
#include "support/chain_sim.hpp"

using namespace chainlens;
using namespace chainlens::testsupport;

namespace {

Graph make_graph(uint64_t n, const std::vector<std::tuple<uint64_t, uint64_t, uint64_t, int64_t>>& edges) {
    std::vector<EdgeRecord> recs;
    for (size_t i = 0; i < edges.size(); ++i) {
        auto [s, d, v, t] = edges[i];
        recs.push_back({s, d, v, t, i});
    }
    return build_graph_from_edges(GraphKind::TxGraph, n, recs);
}

PathPattern parse_pattern(const std::string& text) {
    std::istringstream in(text);
    return PathPattern::parse(in);
}

// brute-force enumeration of all simple paths with predicate filtering,
// written directly against the pattern fields
void enumerate_paths(const Graph& g, const PathPattern& p, std::vector<uint64_t>& vertices,
                     std::vector<uint64_t>& edges, std::vector<bool>& used,
                     std::vector<std::vector<uint64_t>>& out) {
    if (edges.size() >= p.min_hops) out.push_back(vertices);
    if (edges.size() == p.max_hops) return;
    uint64_t v = vertices.back();
    for (uint64_t w = 0; w < g.vertex_count; ++w) {
        if (used[w]) continue;
        for (uint64_t e = 0; e < g.edge_count(); ++e) {
            // edge e must run v -> w
            bool connects = false;
            auto nbrs = g.out_neighbors(v);
            auto eids = g.out_edges(v);
            for (size_t i = 0; i < nbrs.size(); ++i)
                if (eids[i] == e && nbrs[i] == w) connects = true;
            if (!connects) continue;

            uint32_t hop = static_cast<uint32_t>(edges.size()) + 1;
            const EdgePredicate& pred = p.edge_predicate(hop);
            uint64_t value = g.edge_value[e];
            int64_t ts = g.edge_time[e];
            if (pred.value_min && value < *pred.value_min) continue;
            if (pred.value_max && value > *pred.value_max) continue;
            if (hop > 1) {
                int64_t prev = g.edge_time[edges.back()];
                if (p.increasing_time && ts <= prev) continue;
                if (pred.max_delay && ts - prev > *pred.max_delay) continue;
                if (p.value_rel_band) {
                    double first = double(g.edge_value[edges.front()]);
                    double band = *p.value_rel_band * first;
                    if (double(value) - first > band || first - double(value) > band) continue;
                }
            }
            if (p.min_degree && g.out_degree(w) + g.in_degree(w) < *p.min_degree) continue;
            if (p.max_degree && g.out_degree(w) + g.in_degree(w) > *p.max_degree) continue;

            vertices.push_back(w);
            edges.push_back(e);
            used[w] = true;
            enumerate_paths(g, p, vertices, edges, used, out);
            used[w] = false;
            vertices.pop_back();
            edges.pop_back();
        }
    }
}

std::vector<std::vector<uint64_t>> brute_force_matches(const Graph& g, const PathPattern& p) {
    std::vector<std::vector<uint64_t>> out;
    std::vector<uint64_t> anchors = p.anchors;
    if (anchors.empty())
        for (uint64_t v = 0; v < g.vertex_count; ++v) anchors.push_back(v);
    for (uint64_t a : anchors) {
        if (p.min_degree && g.out_degree(a) + g.in_degree(a) < *p.min_degree) continue;
        if (p.max_degree && g.out_degree(a) + g.in_degree(a) > *p.max_degree) continue;
        std::vector<uint64_t> vertices{a}, edges;
        std::vector<bool> used(g.vertex_count, false);
        used[a] = true;
        enumerate_paths(g, p, vertices, edges, used, out);
    }
    return out;
}

std::multiset<std::vector<uint64_t>> as_set(const std::vector<std::vector<uint64_t>>& paths) {
    return {paths.begin(), paths.end()};
}

std::multiset<std::vector<uint64_t>> match_vertexlists(const std::vector<Match>& matches) {
    std::multiset<std::vector<uint64_t>> out;
    for (const Match& m : matches) out.insert(m.vertices);
    return out;
}

} // namespace

TEST_CASE("pattern grammar parses and validates") {
    PathPattern p = parse_pattern("# laundering hops\n"
                                  "hops 3 5\n"
                                  "edge value 1000 50000\n"
                                  "edge@2 value 0 100\n"
                                  "edge max_delay 3600\n"
                                  "edge increasing_time\n"
                                  "vertex min_degree 1\n"
                                  "vertex max_degree 9\n"
                                  "anchor 3 1 3\n");
    CHECK(p.min_hops == 3);
    CHECK(p.max_hops == 5);
    CHECK(p.default_edge.value_min == 1000);
    CHECK(p.per_hop.at(2).value_max == 100);
    CHECK(p.increasing_time);
    CHECK(p.anchors.size() == 3);

    CHECK_THROWS_AS(parse_pattern("edge value 1 2\n"), Error);       // no hops line
    CHECK_THROWS_AS(parse_pattern("hops 0\n"), Error);               // min >= 1
    CHECK_THROWS_AS(parse_pattern("hops 3 2\n"), Error);             // empty range
    CHECK_THROWS_AS(parse_pattern("hops 2\nedge value 9 1\n"), Error);
    CHECK_THROWS_AS(parse_pattern("hops 2\nbogus 1\n"), Error);
    try {
        parse_pattern("hops 1\nvertex min_degree 5\nvertex max_degree 2\n");
        FAIL("expected PatternInvalid");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PatternInvalid);
    }
}

TEST_CASE("three rapid equal-value hops match exactly once") {
    // A -> B -> C -> D, increasing times, values within 5% of the first hop
    Graph g = make_graph(4, {{0, 1, 10000, 100}, {1, 2, 10200, 200}, {2, 3, 9900, 300}});
    PathPattern p = parse_pattern("hops 3\nedge increasing_time\nedge value_rel 0.05\n");
    std::vector<Match> matches = match_path_pattern(g, p);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].vertices == std::vector<uint64_t>{0, 1, 2, 3});
    CHECK(matches[0].edges == std::vector<uint64_t>{0, 1, 2});

    // same graph, 4 hops required: nothing
    PathPattern p4 = parse_pattern("hops 4\nedge increasing_time\n");
    CHECK(match_path_pattern(g, p4).empty());

    // out-of-band value breaks the chain
    Graph wide = make_graph(4, {{0, 1, 10000, 100}, {1, 2, 20000, 200}, {2, 3, 9900, 300}});
    CHECK(match_path_pattern(wide, p).empty());
}

TEST_CASE("anchors restrict the search and order the output") {
    Graph g = make_graph(4, {{0, 1, 1, 0}, {1, 2, 1, 0}, {2, 3, 1, 0}});
    PathPattern anchored = parse_pattern("hops 1 2\nanchor 1\n");
    std::vector<Match> matches = match_path_pattern(g, anchored);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].vertices == std::vector<uint64_t>{1, 2});
    CHECK(matches[1].vertices == std::vector<uint64_t>{1, 2, 3});

    PathPattern bad = parse_pattern("hops 1\nanchor 99\n");
    CHECK_THROWS_AS(match_path_pattern(g, bad), Error);
}

TEST_CASE("limit truncates deterministically") {
    Graph g = make_graph(4, {{0, 1, 1, 0}, {0, 2, 1, 0}, {0, 3, 1, 0}});
    PathPattern p = parse_pattern("hops 1\n");
    std::vector<Match> all = match_path_pattern(g, p);
    CHECK(all.size() == 3);
    std::vector<Match> two = match_path_pattern(g, p, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0].vertices == all[0].vertices);
    CHECK(two[1].vertices == all[1].vertices);
}

TEST_CASE("vertex tags gate matches") {
    Graph g = make_graph(3, {{0, 1, 1, 0}, {1, 2, 1, 0}});
    std::vector<std::set<std::string>> tags(3);
    tags[0].insert("hot");
    tags[1].insert("hot");
    tags[2].insert("cold");
    PathPattern p = parse_pattern("hops 1\nvertex tag hot\n");
    std::vector<Match> matches = match_path_pattern(g, p, 0, &tags);
    REQUIRE(matches.size() == 1); // only 0 -> 1 is all-hot
    CHECK(matches[0].vertices == std::vector<uint64_t>{0, 1});
    // without tags supplied, a tag predicate can never match
    CHECK(match_path_pattern(g, p).empty());
}

TEST_CASE("match set equals brute-force enumeration on random graphs") {
    std::mt19937_64 rng(4040);
    int instances = 0;
    while (instances < 120) {
        uint64_t n = 2 + rng() % 29;
        uint64_t m = n + rng() % (n + 1);
        std::vector<std::tuple<uint64_t, uint64_t, uint64_t, int64_t>> edges;
        for (uint64_t e = 0; e < m; ++e)
            edges.emplace_back(rng() % n, rng() % n, 1000 + rng() % 20000, int64_t(rng() % 500));
        Graph g = make_graph(n, edges);

        std::string text = "hops " + std::to_string(1 + rng() % 2) + " " + std::to_string(2 + rng() % 2) + "\n";
        switch (rng() % 4) {
        case 0: text += "edge value 5000 18000\n"; break;
        case 1: text += "edge increasing_time\nedge max_delay 200\n"; break;
        case 2: text += "vertex max_degree 5\n"; break;
        case 3: text += "edge value_rel 0.25\n"; break;
        }
        PathPattern p = parse_pattern(text);
        std::vector<Match> got = match_path_pattern(g, p);
        CHECK(match_vertexlists(got) == as_set(brute_force_matches(g, p)));

        // soundness: re-verify every emitted match against the graph and pattern
        for (const Match& match : got) {
            REQUIRE(match.vertices.size() == match.edges.size() + 1);
            CHECK(match.edges.size() >= p.min_hops);
            CHECK(match.edges.size() <= p.max_hops);
            std::set<uint64_t> distinct(match.vertices.begin(), match.vertices.end());
            CHECK(distinct.size() == match.vertices.size()); // simple path
            for (size_t i = 0; i < match.edges.size(); ++i) {
                uint64_t e = match.edges[i];
                const EdgePredicate& pred = p.edge_predicate(static_cast<uint32_t>(i) + 1);
                if (pred.value_min) CHECK(g.edge_value[e] >= *pred.value_min);
                if (pred.value_max) CHECK(g.edge_value[e] <= *pred.value_max);
                if (i > 0 && p.increasing_time) CHECK(g.edge_time[e] > g.edge_time[match.edges[i - 1]]);
            }
        }

        // determinism: a second run yields the identical ordering
        std::vector<Match> again = match_path_pattern(g, p);
        REQUIRE(again.size() == got.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(again[i].vertices == got[i].vertices);
            CHECK(again[i].edges == got[i].edges);
        }
        ++instances;
    }
}

TEST_CASE("peeling chains: planted and broken") {
    SUBCASE("a 5-step peel is found whole") {
        ChainSim sim;
        sim.begin_block(1000, 100, 10000000ull);
        TxRef prev{0, 0};
        std::vector<uint64_t> expected;
        uint64_t value = 10000000;
        for (int step = 0; step < 5; ++step) {
            sim.begin_block(1600 + step * 600, 200 + step);
            value -= 200000; // fee + peel
            TxRef t = sim.add_tx({{prev, step == 0 ? 0u : 1u}},
                                 {{300 + step, 100000ull}, {400, value}});
            expected.push_back(2 * step + 2); // tx ids: coinbases interleave
            prev = t;
        }
        ChainStore store = sim.ingest();
        std::vector<std::vector<uint64_t>> chains = find_peeling_chains(store, 5);
        REQUIRE(chains.size() == 1);
        CHECK(chains[0] == expected);
        CHECK(find_peeling_chains(store, 6).empty());
    }

    SUBCASE("a 3-output tx in the middle splits the chain") {
        ChainSim sim;
        sim.begin_block(1000, 100, 10000000ull);
        TxRef prev{0, 0};
        uint32_t spend_vout = 0;
        std::vector<uint64_t> ids;
        uint64_t value = 10000000;
        for (int step = 0; step < 5; ++step) {
            sim.begin_block(1600 + step * 600, 200 + step);
            value -= 300000;
            if (step == 2) {
                // the breaker: three outputs
                prev = sim.add_tx({{prev, spend_vout}},
                                  {{300 + step, 100000ull}, {310 + step, 100000ull}, {400, value}});
                spend_vout = 2;
            } else {
                prev = sim.add_tx({{prev, spend_vout}}, {{300 + step, 100000ull}, {400, value}});
                ids.push_back(2 * step + 2);
                spend_vout = 1;
            }
        }
        ChainStore store = sim.ingest();
        std::vector<std::vector<uint64_t>> chains = find_peeling_chains(store, 2);
        REQUIRE(chains.size() == 2);
        CHECK(chains[0] == std::vector<uint64_t>{ids[0], ids[1]});
        CHECK(chains[1] == std::vector<uint64_t>{ids[2], ids[3]});
        CHECK(find_peeling_chains(store, 3).empty());
    }

    SUBCASE("planted peels among random noise are recovered exactly") {
        std::mt19937_64 rng(5050);
        ChainSim sim;
        sim.begin_block(1000, 1, 50000000ull);
        sim.begin_block(1300, 2, 50000000ull);
        sim.begin_block(1500, 3, 50000000ull);

        // noise: 1-output and 3-output spends of the first two coinbases
        sim.begin_block(1700, 4);
        sim.add_tx({{{0, 0}, 0}}, {{10, 49000000ull}});
        sim.add_tx({{{1, 0}, 0}}, {{11, 16000000ull}, {12, 16000000ull}, {13, 16000000ull}});

        // planted peel of length 6 off the third coinbase
        TxRef prev{2, 0};
        uint32_t vout = 0;
        uint64_t value = 50000000;
        for (int step = 0; step < 6; ++step) {
            sim.begin_block(2000 + step * 600, 100 + step);
            value -= 900000;
            prev = sim.add_tx({{prev, vout}}, {{500 + step, 800000ull}, {600, value}});
            vout = 1;
        }
        ChainStore store = sim.ingest();

        // the peel transactions are the non-coinbase txs of heights 4..9
        std::vector<uint64_t> want;
        for (uint64_t t = 0; t < store.txs.size(); ++t)
            if (!store.txs[t].is_coinbase && store.blocks[store.txs[t].block_id].height >= 4)
                want.push_back(t);
        std::vector<std::vector<uint64_t>> chains = find_peeling_chains(store, 4);
        REQUIRE(chains.size() == 1);
        CHECK(chains[0] == want);
    }
}

TEST_CASE("matches render as CSV") {
    Graph g = make_graph(3, {{0, 1, 500, 10}, {1, 2, 600, 20}});
    PathPattern p = parse_pattern("hops 2\n");
    std::vector<Match> matches = match_path_pattern(g, p);
    std::string csv = matches_to_csv(matches);
    CHECK(csv.find("match_index,vertices,edges,witness") == 0);
    CHECK(csv.find("0,0;1;2,0;1,") != std::string::npos);
    CHECK(csv.find("first_value=500") != std::string::npos);
}
