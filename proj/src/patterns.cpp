// Path-template matching and the peeling-chain detector.

#include "chainlens/patterns.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

namespace chainlens {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

uint64_t parse_u64(const std::string& s, const std::string& context) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        raise(Errc::PatternInvalid, context + ": expected a number, got '" + s + "'");
    return v;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        raise(Errc::PatternInvalid, context + ": expected a number, got '" + s + "'");
    }
}

} // namespace

PathPattern PathPattern::parse(std::istream& text) {
    PathPattern p;
    bool saw_hops = false;
    std::string line;
    size_t line_no = 0;
    while (std::getline(text, line)) {
        ++line_no;
        std::string context = "pattern line " + std::to_string(line_no);
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::vector<std::string> tok = split_ws(line);
        if (tok.empty()) continue;

        if (tok[0] == "hops") {
            if (tok.size() == 2) {
                p.min_hops = p.max_hops = static_cast<uint32_t>(parse_u64(tok[1], context));
            } else if (tok.size() == 3) {
                p.min_hops = static_cast<uint32_t>(parse_u64(tok[1], context));
                p.max_hops = static_cast<uint32_t>(parse_u64(tok[2], context));
            } else {
                raise(Errc::PatternInvalid, context + ": hops takes one or two numbers");
            }
            saw_hops = true;
        } else if (tok[0] == "edge" || tok[0].rfind("edge@", 0) == 0) {
            EdgePredicate* pred = &p.default_edge;
            if (tok[0] != "edge") {
                uint32_t hop = static_cast<uint32_t>(parse_u64(tok[0].substr(5), context));
                if (hop == 0) raise(Errc::PatternInvalid, context + ": hop indexes are 1-based");
                pred = &p.per_hop[hop];
            }
            if (tok.size() >= 2 && tok[1] == "value" && tok.size() == 4) {
                pred->value_min = parse_u64(tok[2], context);
                pred->value_max = parse_u64(tok[3], context);
            } else if (tok.size() == 3 && tok[1] == "value_rel") {
                if (pred != &p.default_edge)
                    raise(Errc::PatternInvalid, context + ": value_rel applies to all hops");
                p.value_rel_band = parse_double(tok[2], context);
            } else if (tok.size() == 3 && tok[1] == "max_delay") {
                pred->max_delay = static_cast<int64_t>(parse_u64(tok[2], context));
            } else if (tok.size() == 2 && tok[1] == "increasing_time") {
                if (pred != &p.default_edge)
                    raise(Errc::PatternInvalid, context + ": increasing_time applies to all hops");
                p.increasing_time = true;
            } else {
                raise(Errc::PatternInvalid, context + ": unknown edge predicate");
            }
        } else if (tok[0] == "vertex") {
            if (tok.size() == 3 && tok[1] == "tag") {
                p.required_tag = tok[2];
            } else if (tok.size() == 3 && tok[1] == "min_degree") {
                p.min_degree = parse_u64(tok[2], context);
            } else if (tok.size() == 3 && tok[1] == "max_degree") {
                p.max_degree = parse_u64(tok[2], context);
            } else {
                raise(Errc::PatternInvalid, context + ": unknown vertex predicate");
            }
        } else if (tok[0] == "anchor") {
            for (size_t i = 1; i < tok.size(); ++i) p.anchors.push_back(parse_u64(tok[i], context));
        } else {
            raise(Errc::PatternInvalid, context + ": unknown directive '" + tok[0] + "'");
        }
    }
    if (!saw_hops) raise(Errc::PatternInvalid, "pattern needs a 'hops' line");
    p.validate();
    return p;
}

void PathPattern::validate() const {
    if (min_hops < 1) raise(Errc::PatternInvalid, "min hops must be >= 1");
    if (max_hops < min_hops) raise(Errc::PatternInvalid, "hop range is empty");
    auto check_edge = [](const EdgePredicate& e) {
        if (e.value_min && e.value_max && *e.value_min > *e.value_max)
            raise(Errc::PatternInvalid, "edge value range is empty");
    };
    check_edge(default_edge);
    for (const auto& [hop, e] : per_hop) check_edge(e);
    if (min_degree && max_degree && *min_degree > *max_degree)
        raise(Errc::PatternInvalid, "degree range is empty");
    if (value_rel_band && *value_rel_band < 0)
        raise(Errc::PatternInvalid, "value_rel band must be non-negative");
}

const EdgePredicate& PathPattern::edge_predicate(uint32_t hop) const {
    auto it = per_hop.find(hop);
    return it == per_hop.end() ? default_edge : it->second;
}

namespace {

struct MatchContext {
    const Graph& graph;
    const PathPattern& pattern;
    uint64_t limit;
    const std::vector<std::set<std::string>>* tags;
    std::vector<Match>& out;

    std::vector<uint64_t> vertices, edges;
    std::vector<char> on_path;
    uint64_t first_value = 0;

    bool vertex_ok(uint64_t v) const {
        if (pattern.min_degree || pattern.max_degree) {
            uint64_t deg = graph.out_degree(v) + graph.in_degree(v);
            if (pattern.min_degree && deg < *pattern.min_degree) return false;
            if (pattern.max_degree && deg > *pattern.max_degree) return false;
        }
        if (pattern.required_tag) {
            if (!tags || v >= tags->size()) return false;
            if (!(*tags)[v].count(*pattern.required_tag)) return false;
        }
        return true;
    }

    bool edge_ok(uint32_t hop, uint64_t edge_id, int64_t prev_ts) const {
        uint64_t value = graph.edge_value[edge_id];
        int64_t ts = graph.edge_time[edge_id];
        const EdgePredicate& pred = pattern.edge_predicate(hop);
        if (pred.value_min && value < *pred.value_min) return false;
        if (pred.value_max && value > *pred.value_max) return false;
        if (hop > 1) {
            if (pattern.increasing_time && ts <= prev_ts) return false;
            if (pred.max_delay && ts - prev_ts > *pred.max_delay) return false;
        }
        if (pattern.value_rel_band && hop > 1) {
            double band = *pattern.value_rel_band * double(first_value);
            double diff = double(value) - double(first_value);
            if (diff > band || -diff > band) return false;
        }
        return true;
    }

    void emit() {
        Match m;
        m.vertices = vertices;
        m.edges = edges;
        m.bindings.emplace_back("hops", std::to_string(edges.size()));
        if (!edges.empty()) {
            m.bindings.emplace_back("first_value", std::to_string(graph.edge_value[edges.front()]));
            m.bindings.emplace_back("last_value", std::to_string(graph.edge_value[edges.back()]));
            m.bindings.emplace_back("start_time", std::to_string(graph.edge_time[edges.front()]));
            m.bindings.emplace_back("end_time", std::to_string(graph.edge_time[edges.back()]));
        }
        out.push_back(std::move(m));
    }

    bool full() const { return limit > 0 && out.size() >= limit; }

    void extend() {
        if (full()) return;
        uint32_t hop = static_cast<uint32_t>(edges.size()) + 1;
        if (hop > pattern.max_hops) return;
        uint64_t v = vertices.back();
        int64_t prev_ts = edges.empty() ? 0 : graph.edge_time[edges.back()];
        auto nbrs = graph.out_neighbors(v);
        auto eids = graph.out_edges(v);
        for (size_t i = 0; i < nbrs.size() && !full(); ++i) {
            uint64_t w = nbrs[i];
            if (on_path[w]) continue; // simple paths only
            if (!vertex_ok(w)) continue;
            if (!edge_ok(hop, eids[i], prev_ts)) continue;
            if (hop == 1) first_value = graph.edge_value[eids[i]];
            vertices.push_back(w);
            edges.push_back(eids[i]);
            on_path[w] = 1;
            if (edges.size() >= pattern.min_hops) emit();
            extend();
            on_path[w] = 0;
            vertices.pop_back();
            edges.pop_back();
        }
    }
};

} // namespace

std::vector<Match> match_path_pattern(const Graph& graph, const PathPattern& pattern, uint64_t limit,
                                      const std::vector<std::set<std::string>>* vertex_tags) {
    pattern.validate();
    for (uint64_t a : pattern.anchors)
        if (a >= graph.vertex_count)
            raise(Errc::PatternInvalid, "anchor " + std::to_string(a) + " out of range");

    std::vector<uint64_t> anchors = pattern.anchors;
    if (anchors.empty()) {
        anchors.resize(graph.vertex_count);
        for (uint64_t v = 0; v < graph.vertex_count; ++v) anchors[v] = v;
    } else {
        std::sort(anchors.begin(), anchors.end());
        anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    }

    std::vector<Match> out;
    MatchContext ctx{graph, pattern, limit, vertex_tags, out, {}, {}, {}, 0};
    ctx.on_path.assign(graph.vertex_count, 0);
    for (uint64_t a : anchors) {
        if (ctx.full()) break;
        if (!ctx.vertex_ok(a)) continue;
        ctx.vertices = {a};
        ctx.edges.clear();
        ctx.on_path[a] = 1;
        ctx.extend();
        ctx.on_path[a] = 0;
    }
    return out;
}

std::vector<std::vector<uint64_t>> find_peeling_chains(const ChainStore& store, uint64_t min_length) {
    if (!store.linked) raise(Errc::NotBuilt, "peeling chains require a linked store");

    // candidate = exactly two outputs; successor = the unique candidate
    // spending exactly one of them
    auto is_candidate = [&](uint64_t tx_id) { return store.txs[tx_id].output_count == 2; };
    std::vector<int64_t> successor(store.txs.size(), kNoId);
    std::vector<uint32_t> pred_count(store.txs.size(), 0);

    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        if (!is_candidate(tx_id)) continue;
        const TxRow& tx = store.txs[tx_id];
        std::vector<uint64_t> continuations;
        for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o) {
            int64_t spender_input = store.outputs[o].spent_by_input;
            if (spender_input == kNoId) continue;
            uint64_t spender = store.inputs[spender_input].tx_id;
            if (is_candidate(spender)) continuations.push_back(spender);
        }
        if (continuations.size() == 1) {
            successor[tx_id] = static_cast<int64_t>(continuations[0]);
            ++pred_count[continuations[0]];
        }
    }

    std::vector<std::vector<uint64_t>> chains;
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        if (!is_candidate(tx_id) || pred_count[tx_id] > 0) continue; // chain heads only
        std::vector<uint64_t> chain{tx_id};
        int64_t cur = successor[tx_id];
        while (cur != kNoId) {
            chain.push_back(static_cast<uint64_t>(cur));
            cur = successor[cur];
        }
        if (chain.size() >= min_length) chains.push_back(std::move(chain));
    }
    return chains; // ordered by first tx id by construction
}

std::string matches_to_csv(const std::vector<Match>& matches) {
    std::string out = "match_index,vertices,edges,witness\n";
    for (size_t i = 0; i < matches.size(); ++i) {
        const Match& m = matches[i];
        out += std::to_string(i);
        out += ',';
        for (size_t v = 0; v < m.vertices.size(); ++v) {
            if (v) out += ';';
            out += std::to_string(m.vertices[v]);
        }
        out += ',';
        for (size_t e = 0; e < m.edges.size(); ++e) {
            if (e) out += ';';
            out += std::to_string(m.edges[e]);
        }
        out += ',';
        for (size_t b = 0; b < m.bindings.size(); ++b) {
            if (b) out += ';';
            out += m.bindings[b].first;
            out += '=';
            out += m.bindings[b].second;
        }
        out += '\n';
    }
    return out;
}

} // namespace chainlens
