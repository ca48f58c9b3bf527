// Computational graph analytics: the centrality suite, temporal traversal,
// components, label propagation and the chain statistics.

#include "chainlens/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <queue>
#include <sstream>
#include <thread>

namespace chainlens {

namespace {

void require_nonempty(const Graph& graph) {
    if (graph.vertex_count == 0) raise(Errc::EmptyGraph, "graph has no vertices");
}

std::string describe(GraphKind kind, std::initializer_list<std::pair<const char*, std::string>> kv) {
    std::string s = std::string("graph=") + graph_kind_name(kind);
    for (const auto& [k, v] : kv) {
        s += ' ';
        s += k;
        s += '=';
        s += v;
    }
    return s;
}

} // namespace

// --- PageRank -------------------------------------------------------------------

ScoreVector pagerank(const Graph& graph, double damping, double tolerance, int max_iter) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;

    std::vector<uint64_t> out_deg(n);
    for (uint64_t v = 0; v < n; ++v) out_deg[v] = graph.out_degree_simple(v);

    std::vector<double> x(n, 1.0 / double(n)), next(n);
    ScoreVector result;
    result.graph_kind = graph.kind;
    result.measure = "pagerank";
    result.params = describe(graph.kind, {{"damping", std::to_string(damping)},
                                          {"tolerance", std::to_string(tolerance)}});
    result.converged = false;

    for (int iter = 1; iter <= max_iter; ++iter) {
        double dangling = 0;
        for (uint64_t v = 0; v < n; ++v)
            if (out_deg[v] == 0) dangling += x[v];
        double base = (1.0 - damping) / double(n) + damping * dangling / double(n);
        std::fill(next.begin(), next.end(), base);
        for (uint64_t v = 0; v < n; ++v) {
            if (out_deg[v] == 0) continue;
            double share = damping * x[v] / double(out_deg[v]);
            graph.for_each_out_simple(v, [&](uint64_t u) { next[u] += share; });
        }
        double delta = 0;
        for (uint64_t v = 0; v < n; ++v) delta += std::abs(next[v] - x[v]);
        x.swap(next);
        result.iterations = iter;
        result.residual = delta;
        if (delta < tolerance) {
            result.converged = true;
            break;
        }
    }
    result.scores = std::move(x);
    return result;
}

// --- HITS -----------------------------------------------------------------------

HitsScores hits(const Graph& graph, double tolerance, int max_iter) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;

    auto l2_normalize = [](std::vector<double>& v) {
        double norm = 0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (double& x : v) x /= norm;
        return norm;
    };

    std::vector<double> hub(n, 1.0 / std::sqrt(double(n))), auth(hub), next(n);
    int iterations = 0;
    double residual = 0;
    bool converged = false;

    for (int iter = 1; iter <= max_iter; ++iter) {
        iterations = iter;
        // authorities from hubs, then hubs from the fresh authorities
        for (uint64_t v = 0; v < n; ++v) {
            double sum = 0;
            graph.for_each_in_simple(v, [&](uint64_t u) { sum += hub[u]; });
            next[v] = sum;
        }
        l2_normalize(next);
        double delta = 0;
        for (uint64_t v = 0; v < n; ++v) delta += std::abs(next[v] - auth[v]);
        auth.swap(next);

        for (uint64_t v = 0; v < n; ++v) {
            double sum = 0;
            graph.for_each_out_simple(v, [&](uint64_t u) { sum += auth[u]; });
            next[v] = sum;
        }
        l2_normalize(next);
        for (uint64_t v = 0; v < n; ++v) delta += std::abs(next[v] - hub[v]);
        hub.swap(next);

        residual = delta;
        if (delta < tolerance) {
            converged = true;
            break;
        }
    }

    HitsScores out;
    out.hubs.graph_kind = out.authorities.graph_kind = graph.kind;
    out.hubs.measure = "hits-hub";
    out.authorities.measure = "hits-authority";
    out.hubs.params = out.authorities.params =
        describe(graph.kind, {{"tolerance", std::to_string(tolerance)}});
    out.hubs.iterations = out.authorities.iterations = iterations;
    out.hubs.residual = out.authorities.residual = residual;
    out.hubs.converged = out.authorities.converged = converged;
    out.hubs.scores = std::move(hub);
    out.authorities.scores = std::move(auth);
    return out;
}

// --- betweenness ------------------------------------------------------------------

namespace {

// Brandes single-source pass over the simple projection, accumulating into bc.
void brandes_from(const Graph& graph, uint64_t s, std::vector<double>& bc) {
    uint64_t n = graph.vertex_count;
    std::vector<int64_t> dist(n, -1);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    std::vector<std::vector<uint64_t>> preds(n);
    std::vector<uint64_t> order;
    order.reserve(n);

    std::deque<uint64_t> queue;
    dist[s] = 0;
    sigma[s] = 1;
    queue.push_back(s);
    while (!queue.empty()) {
        uint64_t v = queue.front();
        queue.pop_front();
        order.push_back(v);
        graph.for_each_out_simple(v, [&](uint64_t w) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if (dist[w] == dist[v] + 1) {
                sigma[w] += sigma[v];
                preds[w].push_back(v);
            }
        });
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        uint64_t w = *it;
        for (uint64_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        if (w != s) bc[w] += delta[w];
    }
}

ScoreVector betweenness_over_sources(const Graph& graph, const std::vector<uint64_t>& sources,
                                     double scale, unsigned workers, const char* measure) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;
    workers = std::max(1u, workers);
    uint64_t chunk_count = std::min<uint64_t>(workers, std::max<uint64_t>(sources.size(), 1));

    // contiguous source chunks, each with its own accumulator, reduced in
    // chunk order so the floating-point sum is reproducible
    std::vector<std::vector<double>> partial(chunk_count, std::vector<double>(n, 0.0));
    std::vector<std::thread> pool;
    for (uint64_t c = 0; c < chunk_count; ++c) {
        uint64_t lo = sources.size() * c / chunk_count;
        uint64_t hi = sources.size() * (c + 1) / chunk_count;
        pool.emplace_back([&, c, lo, hi]() {
            for (uint64_t i = lo; i < hi; ++i) brandes_from(graph, sources[i], partial[c]);
        });
    }
    for (std::thread& t : pool) t.join();

    ScoreVector result;
    result.graph_kind = graph.kind;
    result.measure = measure;
    result.params = describe(graph.kind, {{"sources", std::to_string(sources.size())}});
    result.scores.assign(n, 0.0);
    for (uint64_t c = 0; c < chunk_count; ++c)
        for (uint64_t v = 0; v < n; ++v) result.scores[v] += partial[c][v];
    if (scale != 1.0)
        for (double& s : result.scores) s *= scale;
    result.iterations = static_cast<int>(sources.size());
    return result;
}

} // namespace

ScoreVector betweenness(const Graph& graph, unsigned workers) {
    require_nonempty(graph);
    std::vector<uint64_t> sources(graph.vertex_count);
    for (uint64_t v = 0; v < graph.vertex_count; ++v) sources[v] = v;
    return betweenness_over_sources(graph, sources, 1.0, workers, "betweenness");
}

ScoreVector betweenness_sampled(const Graph& graph, uint64_t sample_sources, uint64_t seed,
                                unsigned workers) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;
    sample_sources = std::min(sample_sources, n);
    if (sample_sources == 0) raise(Errc::EmptyGraph, "sample size must be positive");

    // splitmix64 stream, platform-independent
    auto splitmix = [](uint64_t& state) {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::vector<uint64_t> sources;
    std::vector<bool> used(n, false);
    uint64_t state = seed;
    while (sources.size() < sample_sources) {
        uint64_t v = splitmix(state) % n;
        if (!used[v]) {
            used[v] = true;
            sources.push_back(v);
        }
    }
    std::sort(sources.begin(), sources.end());
    double scale = double(n) / double(sample_sources);
    ScoreVector result = betweenness_over_sources(graph, sources, scale, workers, "betweenness-sampled");
    result.params += " seed=" + std::to_string(seed);
    return result;
}

// --- closeness -------------------------------------------------------------------

ScoreVector closeness(const Graph& graph, unsigned workers) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;
    ScoreVector result;
    result.graph_kind = graph.kind;
    result.measure = "closeness-harmonic";
    result.params = describe(graph.kind, {});
    result.scores.assign(n, 0.0);

    workers = std::max(1u, workers);
    std::vector<std::thread> pool;
    std::atomic<uint64_t> next{0};
    auto run = [&]() {
        std::vector<int64_t> dist(n);
        std::deque<uint64_t> queue;
        while (true) {
            uint64_t s = next.fetch_add(1);
            if (s >= n) return;
            std::fill(dist.begin(), dist.end(), -1);
            dist[s] = 0;
            queue.clear();
            queue.push_back(s);
            while (!queue.empty()) {
                uint64_t v = queue.front();
                queue.pop_front();
                graph.for_each_out_simple(v, [&](uint64_t w) {
                    if (dist[w] < 0) {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                });
            }
            // summed in vertex order so the result does not depend on BFS
            // discovery order
            double sum = 0;
            for (uint64_t v = 0; v < n; ++v)
                if (v != s && dist[v] > 0) sum += 1.0 / double(dist[v]);
            result.scores[s] = sum;
        }
    };
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
    return result;
}

// --- eigenvector -------------------------------------------------------------------

ScoreVector eigenvector_centrality(const Graph& graph, double tolerance, int max_iter) {
    require_nonempty(graph);
    uint64_t n = graph.vertex_count;
    std::vector<double> x(n, 1.0 / std::sqrt(double(n))), next(n);

    ScoreVector result;
    result.graph_kind = graph.kind;
    result.measure = "eigenvector";
    result.params = describe(graph.kind, {{"tolerance", std::to_string(tolerance)}});
    result.converged = false;

    for (int iter = 1; iter <= max_iter; ++iter) {
        for (uint64_t v = 0; v < n; ++v) {
            double sum = 0;
            graph.for_each_in_simple(v, [&](uint64_t u) { sum += x[u]; });
            next[v] = sum;
        }
        double norm = 0;
        for (double v : next) norm += v * v;
        norm = std::sqrt(norm);
        result.iterations = iter;
        if (norm == 0.0) {
            // no in-edges anywhere reachable from the start vector
            x.assign(n, 0.0);
            result.residual = 0.0;
            break;
        }
        for (double& v : next) v /= norm;
        double delta = 0;
        for (uint64_t v = 0; v < n; ++v) delta += std::abs(next[v] - x[v]);
        x.swap(next);
        result.residual = delta;
        if (delta < tolerance) {
            result.converged = true;
            break;
        }
    }
    result.scores = std::move(x);
    return result;
}

// --- degrees ----------------------------------------------------------------------

std::vector<std::pair<uint64_t, uint64_t>> degree_top_k(const Graph& graph, Direction direction,
                                                        uint64_t k) {
    std::vector<std::pair<uint64_t, uint64_t>> rows(graph.vertex_count);
    for (uint64_t v = 0; v < graph.vertex_count; ++v)
        rows[v] = {v, direction == Direction::Out ? graph.out_degree(v) : graph.in_degree(v)};
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (k < rows.size()) rows.resize(k);
    return rows;
}

// --- traversal ---------------------------------------------------------------------

namespace {

struct TemporalState {
    uint64_t vertex;
    int64_t last_ts;
    uint32_t hop;
    int64_t parent; // index into the state arena, -1 for the root
    uint64_t via_edge;
};

void check_vertex(const Graph& graph, uint64_t v, const char* role) {
    if (v >= graph.vertex_count)
        raise(Errc::UnknownVertex, std::string(role) + " vertex " + std::to_string(v) + " out of range");
}

} // namespace

std::optional<Path> shortest_path(const Graph& graph, uint64_t src, uint64_t dst, bool temporal) {
    check_vertex(graph, src, "source");
    check_vertex(graph, dst, "destination");

    if (!temporal) {
        if (src == dst) return Path{{src}, {}};
        std::vector<int64_t> parent(graph.vertex_count, -1);
        std::vector<uint64_t> via_edge(graph.vertex_count, 0);
        std::vector<bool> seen(graph.vertex_count, false);
        std::deque<uint64_t> queue;
        seen[src] = true;
        queue.push_back(src);
        while (!queue.empty()) {
            uint64_t v = queue.front();
            queue.pop_front();
            auto nbrs = graph.out_neighbors(v);
            auto eids = graph.out_edges(v);
            for (size_t i = 0; i < nbrs.size(); ++i) {
                if (i > 0 && nbrs[i] == nbrs[i - 1]) continue; // adjacency sorted: first edge id wins
                uint64_t w = nbrs[i];
                if (seen[w]) continue;
                seen[w] = true;
                parent[w] = static_cast<int64_t>(v);
                via_edge[w] = eids[i];
                if (w == dst) {
                    Path path;
                    for (uint64_t cur = dst; cur != src; cur = parent[cur]) {
                        path.vertices.push_back(cur);
                        path.edges.push_back(via_edge[cur]);
                    }
                    path.vertices.push_back(src);
                    std::reverse(path.vertices.begin(), path.vertices.end());
                    std::reverse(path.edges.begin(), path.edges.end());
                    return path;
                }
                queue.push_back(w);
            }
        }
        return std::nullopt;
    }

    // Temporal BFS over (vertex, last-timestamp) states. A state is kept only
    // if no earlier state at the same vertex has both fewer hops and a
    // timestamp that is no larger (such a state can do anything this one can).
    std::vector<TemporalState> arena;
    std::vector<std::vector<int64_t>> states_at(graph.vertex_count); // pareto state indices per vertex
    arena.push_back({src, INT64_MIN, 0, -1, 0});
    states_at[src].push_back(0);
    if (src == dst) return Path{{src}, {}};

    std::vector<int64_t> frontier{0};
    while (!frontier.empty()) {
        std::vector<int64_t> next_frontier;
        std::optional<int64_t> hit;
        for (int64_t sidx : frontier) {
            TemporalState st = arena[sidx];
            auto nbrs = graph.out_neighbors(st.vertex);
            auto eids = graph.out_edges(st.vertex);
            for (size_t i = 0; i < nbrs.size(); ++i) {
                uint64_t w = nbrs[i];
                int64_t ts = graph.edge_time[eids[i]];
                if (ts < st.last_ts) continue; // non-decreasing along the path
                bool dominated = false;
                for (int64_t prev : states_at[w]) {
                    if (arena[prev].hop <= st.hop + 1 && arena[prev].last_ts <= ts) {
                        dominated = true;
                        break;
                    }
                }
                if (dominated) continue;
                int64_t idx = static_cast<int64_t>(arena.size());
                arena.push_back({w, ts, st.hop + 1, sidx, eids[i]});
                states_at[w].push_back(idx);
                next_frontier.push_back(idx);
                if (w == dst && !hit) hit = idx;
            }
        }
        if (hit) {
            Path path;
            for (int64_t cur = *hit; cur >= 0; cur = arena[cur].parent) {
                path.vertices.push_back(arena[cur].vertex);
                if (arena[cur].parent >= 0) path.edges.push_back(arena[cur].via_edge);
            }
            std::reverse(path.vertices.begin(), path.vertices.end());
            std::reverse(path.edges.begin(), path.edges.end());
            return path;
        }
        frontier = std::move(next_frontier);
    }
    return std::nullopt;
}

std::vector<uint64_t> reachable_set(const Graph& graph, uint64_t src, uint64_t max_hops, bool temporal) {
    check_vertex(graph, src, "source");

    std::vector<bool> reached(graph.vertex_count, false);
    reached[src] = true;

    if (!temporal) {
        std::deque<std::pair<uint64_t, uint64_t>> queue{{src, 0}};
        while (!queue.empty()) {
            auto [v, hop] = queue.front();
            queue.pop_front();
            if (max_hops > 0 && hop == max_hops) continue;
            graph.for_each_out_simple(v, [&](uint64_t w) {
                if (!reached[w]) {
                    reached[w] = true;
                    queue.emplace_back(w, hop + 1);
                }
            });
        }
    } else {
        std::vector<TemporalState> arena;
        std::vector<std::vector<int64_t>> states_at(graph.vertex_count);
        arena.push_back({src, INT64_MIN, 0, -1, 0});
        states_at[src].push_back(0);
        std::vector<int64_t> frontier{0};
        while (!frontier.empty()) {
            std::vector<int64_t> next_frontier;
            for (int64_t sidx : frontier) {
                TemporalState st = arena[sidx];
                if (max_hops > 0 && st.hop == max_hops) continue;
                auto nbrs = graph.out_neighbors(st.vertex);
                auto eids = graph.out_edges(st.vertex);
                for (size_t i = 0; i < nbrs.size(); ++i) {
                    uint64_t w = nbrs[i];
                    int64_t ts = graph.edge_time[eids[i]];
                    if (ts < st.last_ts) continue;
                    bool dominated = false;
                    for (int64_t prev : states_at[w]) {
                        if (arena[prev].hop <= st.hop + 1 && arena[prev].last_ts <= ts) {
                            dominated = true;
                            break;
                        }
                    }
                    if (dominated) continue;
                    int64_t idx = static_cast<int64_t>(arena.size());
                    arena.push_back({w, ts, st.hop + 1, sidx, eids[i]});
                    states_at[w].push_back(idx);
                    next_frontier.push_back(idx);
                    reached[w] = true;
                }
            }
            frontier = std::move(next_frontier);
        }
    }

    std::vector<uint64_t> out;
    for (uint64_t v = 0; v < graph.vertex_count; ++v)
        if (reached[v]) out.push_back(v);
    return out;
}

// --- components ----------------------------------------------------------------------

SccResult strongly_connected_components(const Graph& graph) {
    uint64_t n = graph.vertex_count;
    SccResult result;
    result.component.assign(n, 0);

    // iterative Tarjan
    constexpr uint64_t kUnvisited = UINT64_MAX;
    std::vector<uint64_t> index(n, kUnvisited), low(n, 0), raw_comp(n, kUnvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<uint64_t> tarjan_stack;
    uint64_t next_index = 0, comp_count = 0;

    struct Frame {
        uint64_t v;
        size_t child;
        std::vector<uint64_t> nbrs;
    };
    std::vector<Frame> call_stack;

    auto simple_out = [&](uint64_t v) {
        std::vector<uint64_t> nbrs;
        graph.for_each_out_simple(v, [&](uint64_t w) { nbrs.push_back(w); });
        return nbrs;
    };

    for (uint64_t start = 0; start < n; ++start) {
        if (index[start] != kUnvisited) continue;
        call_stack.push_back({start, 0, simple_out(start)});
        index[start] = low[start] = next_index++;
        tarjan_stack.push_back(start);
        on_stack[start] = true;

        while (!call_stack.empty()) {
            Frame& frame = call_stack.back();
            if (frame.child < frame.nbrs.size()) {
                uint64_t w = frame.nbrs[frame.child++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = next_index++;
                    tarjan_stack.push_back(w);
                    on_stack[w] = true;
                    call_stack.push_back({w, 0, simple_out(w)});
                } else if (on_stack[w]) {
                    low[frame.v] = std::min(low[frame.v], index[w]);
                }
            } else {
                uint64_t v = frame.v;
                call_stack.pop_back();
                if (!call_stack.empty())
                    low[call_stack.back().v] = std::min(low[call_stack.back().v], low[v]);
                if (low[v] == index[v]) {
                    while (true) {
                        uint64_t w = tarjan_stack.back();
                        tarjan_stack.pop_back();
                        on_stack[w] = false;
                        raw_comp[w] = comp_count;
                        if (w == v) break;
                    }
                    ++comp_count;
                }
            }
        }
    }

    // renumber components by their smallest contained vertex
    std::vector<uint64_t> min_vertex(comp_count, UINT64_MAX);
    for (uint64_t v = 0; v < n; ++v) min_vertex[raw_comp[v]] = std::min(min_vertex[raw_comp[v]], v);
    std::vector<uint64_t> order(comp_count);
    for (uint64_t c = 0; c < comp_count; ++c) order[c] = c;
    std::sort(order.begin(), order.end(),
              [&](uint64_t a, uint64_t b) { return min_vertex[a] < min_vertex[b]; });
    std::vector<uint64_t> renumber(comp_count);
    for (uint64_t rank = 0; rank < comp_count; ++rank) renumber[order[rank]] = rank;
    for (uint64_t v = 0; v < n; ++v) result.component[v] = renumber[raw_comp[v]];
    result.component_count = comp_count;
    return result;
}

// --- label propagation ------------------------------------------------------------------

LabelAssignment propagate_labels(const Graph& graph, const std::map<uint64_t, std::string>& seeds,
                                 int max_iters) {
    LabelAssignment out;
    out.vertex_label.assign(graph.vertex_count, -1);

    // label ids in lexicographic order, so smaller id == smaller label
    std::map<std::string, int32_t> label_ids;
    for (const auto& [v, label] : seeds) label_ids.emplace(label, 0);
    for (auto& [label, id] : label_ids) {
        id = static_cast<int32_t>(out.labels.size());
        out.labels.push_back(label);
    }
    for (const auto& [v, label] : seeds) {
        if (v >= graph.vertex_count)
            raise(Errc::UnknownVertex, "seed vertex " + std::to_string(v) + " out of range");
        out.vertex_label[v] = label_ids[label];
    }

    std::vector<int32_t> counts(out.labels.size(), 0);
    for (int iter = 1; iter <= max_iters; ++iter) {
        std::vector<int32_t> next = out.vertex_label;
        bool changed = false;
        for (uint64_t v = 0; v < graph.vertex_count; ++v) {
            if (out.vertex_label[v] >= 0) continue; // labeled vertices (incl. seeds) are fixed
            std::fill(counts.begin(), counts.end(), 0);
            bool any = false;
            graph.for_each_in_simple(v, [&](uint64_t u) {
                if (out.vertex_label[u] >= 0) {
                    ++counts[out.vertex_label[u]];
                    any = true;
                }
            });
            if (!any) continue;
            int32_t best = -1;
            for (int32_t l = 0; l < static_cast<int32_t>(counts.size()); ++l)
                if (counts[l] > 0 && (best < 0 || counts[l] > counts[best])) best = l;
            next[v] = best; // scan order makes ties go to the smaller (lexicographic) label
            changed = true;
        }
        out.vertex_label.swap(next);
        out.iterations = iter;
        if (!changed) break;
    }
    return out;
}

// --- bucketing --------------------------------------------------------------------------

namespace {

int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

struct Civil {
    int year;
    unsigned month, day;
};

Civil civil_from_day(int64_t day_key) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{day_key}}};
    return {int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

int64_t day_from_civil(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    return sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}}
        .time_since_epoch()
        .count();
}

} // namespace

int64_t bucket_start(int64_t timestamp, Bucket bucket) {
    int64_t day = floor_div(timestamp, 86400);
    if (bucket == Bucket::Day) return day * 86400;
    Civil c = civil_from_day(day);
    return day_from_civil(c.year, c.month, 1) * 86400;
}

int64_t next_bucket(int64_t bucket_key, Bucket bucket) {
    if (bucket == Bucket::Day) return bucket_key + 86400;
    Civil c = civil_from_day(bucket_key / 86400);
    if (c.month == 12) return day_from_civil(c.year + 1, 1, 1) * 86400;
    return day_from_civil(c.year, c.month + 1, 1) * 86400;
}

std::string format_bucket(int64_t bucket_key, Bucket bucket) {
    Civil c = civil_from_day(bucket_key / 86400);
    char buf[16];
    if (bucket == Bucket::Day)
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    else
        std::snprintf(buf, sizeof buf, "%04d-%02u", c.year, c.month);
    return buf;
}

std::string format_day(int64_t day_key) {
    Civil c = civil_from_day(day_key);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

// --- rates ------------------------------------------------------------------------------

RateTable RateTable::from_csv(std::istream& csv) {
    RateTable table;
    std::string line;
    size_t line_no = 0;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fail = [&](const std::string& what) {
            raise(Errc::SchemaError, "rates line " + std::to_string(line_no) + ": " + what);
        };
        size_t comma = line.find(',');
        if (comma == std::string::npos) fail("expected date,usd_per_btc");
        std::string date = line.substr(0, comma);
        std::string rate = line.substr(comma + 1);

        if (date.size() != 10 || date[4] != '-' || date[7] != '-') fail("date must be YYYY-MM-DD");
        int year = 0;
        unsigned month = 0, day = 0;
        auto parse_uint = [&](std::string_view s, auto& out) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc() && p == s.data() + s.size();
        };
        if (!parse_uint(std::string_view(date).substr(0, 4), year) ||
            !parse_uint(std::string_view(date).substr(5, 2), month) ||
            !parse_uint(std::string_view(date).substr(8, 2), day))
            fail("date must be YYYY-MM-DD");

        // decimal with at most 8 fractional digits, parsed exactly
        size_t dot = rate.find('.');
        std::string int_part = dot == std::string::npos ? rate : rate.substr(0, dot);
        std::string frac_part = dot == std::string::npos ? "" : rate.substr(dot + 1);
        if (int_part.empty() || frac_part.size() > 8) fail("rate needs 1..8 fractional digits at most");
        while (frac_part.size() < 8) frac_part.push_back('0');
        int64_t whole = 0, frac = 0;
        if (!parse_uint(int_part, whole) || (!frac_part.empty() && !parse_uint(frac_part, frac)))
            fail("rate must be a positive decimal");
        int64_t rate_e8 = whole * 100000000LL + frac;
        if (rate_e8 <= 0) fail("rate must be positive");

        int64_t day_key = day_from_civil(year, month, day);
        if (!table.rows.empty() && day_key <= table.rows.back().first)
            fail("dates must be strictly increasing");
        table.rows.emplace_back(day_key, rate_e8);
    }
    return table;
}

std::optional<int64_t> RateTable::rate_e8_for_day(int64_t day_key) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), day_key,
                               [](const auto& row, int64_t key) { return row.first < key; });
    if (it == rows.end() || it->first != day_key) return std::nullopt;
    return it->second;
}

int64_t sats_to_usd_e8(int64_t sats, int64_t rate_e8) {
    unsigned __int128 product = static_cast<unsigned __int128>(sats) * static_cast<unsigned __int128>(rate_e8);
    return static_cast<int64_t>((product + 50000000) / 100000000);
}

std::string format_usd_e8(int64_t usd_e8) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%lld.%08lld", static_cast<long long>(usd_e8 / 100000000),
                  static_cast<long long>(usd_e8 % 100000000));
    return buf;
}

// --- series -----------------------------------------------------------------------------

namespace {

// dense bucket axis across every transaction in the store
std::pair<std::vector<int64_t>, std::map<int64_t, size_t>> bucket_axis(const ChainStore& store,
                                                                       Bucket bucket) {
    if (store.txs.empty()) raise(Errc::EmptyStore, "store holds no transactions");
    int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (const TxRow& tx : store.txs) {
        int64_t key = bucket_start(tx.timestamp, bucket);
        lo = std::min(lo, key);
        hi = std::max(hi, key);
    }
    std::vector<int64_t> keys;
    for (int64_t key = lo; key <= hi; key = next_bucket(key, bucket)) keys.push_back(key);
    std::map<int64_t, size_t> index;
    for (size_t i = 0; i < keys.size(); ++i) index[keys[i]] = i;
    return {std::move(keys), std::move(index)};
}

} // namespace

std::vector<VelocityPoint> velocity_series(const ChainStore& store, Bucket bucket) {
    auto [keys, index] = bucket_axis(store, bucket);
    std::vector<double> turnover(keys.size(), 0.0);
    std::vector<double> minted(keys.size(), 0.0);

    for (const TxRow& tx : store.txs) {
        size_t b = index.at(bucket_start(tx.timestamp, bucket));
        uint64_t out_sum = 0;
        for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o)
            out_sum += store.outputs[o].value;
        if (tx.is_coinbase)
            minted[b] += double(out_sum);
        else
            turnover[b] += double(out_sum);
    }

    std::vector<VelocityPoint> series;
    double supply = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        supply += minted[i]; // coined supply at bucket end
        series.push_back({keys[i], supply > 0 ? turnover[i] / supply : 0.0});
    }
    return series;
}

std::vector<AddressTypePoint> address_type_series(const ChainStore& store, Bucket bucket) {
    auto [keys, index] = bucket_axis(store, bucket);
    std::vector<AddressTypePoint> series(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        series[i].bucket_key = keys[i];
        std::fill(std::begin(series[i].counts), std::end(series[i].counts), 0);
    }
    for (const TxRow& tx : store.txs) {
        size_t b = index.at(bucket_start(tx.timestamp, bucket));
        for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o)
            ++series[b].counts[static_cast<uint8_t>(store.outputs[o].script_class)];
    }
    return series;
}

std::vector<FeePoint> fee_series(const ChainStore& store, Bucket bucket, const RateTable* rates) {
    if (!store.linked) raise(Errc::NotBuilt, "fees require a linked store");
    auto [keys, index] = bucket_axis(store, bucket);

    struct Acc {
        uint64_t count = 0;
        int64_t fee_sum = 0;
        double per_byte_sum = 0;
        int64_t usd_sum = 0;
    };
    std::vector<Acc> acc(keys.size());

    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        if (tx.is_coinbase) continue;
        Acc& a = acc[index.at(bucket_start(tx.timestamp, bucket))];
        ++a.count;
        a.fee_sum += tx.fee;
        a.per_byte_sum += double(tx.fee) / double(tx.size_bytes);
        if (rates) {
            std::optional<int64_t> rate = rates->rate_e8_for_day(floor_div(tx.timestamp, 86400));
            if (!rate)
                raise(Errc::MissingRate,
                      "no rate for " + format_day(floor_div(tx.timestamp, 86400)) + " (tx " +
                          std::to_string(tx_id) + ")");
            a.usd_sum += sats_to_usd_e8(tx.fee, *rate);
        }
    }

    std::vector<FeePoint> series;
    for (size_t i = 0; i < keys.size(); ++i) {
        FeePoint p{};
        p.bucket_key = keys[i];
        p.tx_count = acc[i].count;
        if (acc[i].count > 0) {
            p.mean_fee_sats = double(acc[i].fee_sum) / double(acc[i].count);
            p.mean_fee_per_byte = acc[i].per_byte_sum / double(acc[i].count);
            p.mean_fee_usd_e8 =
                static_cast<int64_t>((acc[i].usd_sum + int64_t(acc[i].count) / 2) / int64_t(acc[i].count));
        }
        series.push_back(p);
    }
    return series;
}

std::vector<HighValueTx> high_value_transactions(const ChainStore& store, const RateTable& rates,
                                                 int64_t threshold_usd_e8) {
    if (!store.linked) raise(Errc::NotBuilt, "fees require a linked store");
    if (store.txs.empty()) raise(Errc::EmptyStore, "store holds no transactions");
    std::vector<HighValueTx> out;
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        if (tx.is_coinbase) continue;
        int64_t day = floor_div(tx.timestamp, 86400);
        std::optional<int64_t> rate = rates.rate_e8_for_day(day);
        if (!rate)
            raise(Errc::MissingRate,
                  "no rate for " + format_day(day) + " (tx " + std::to_string(tx_id) + ")");
        int64_t usd = sats_to_usd_e8(tx.fee, *rate);
        if (usd > threshold_usd_e8) out.push_back({tx_id, tx.fee, usd, day});
    }
    std::sort(out.begin(), out.end(), [](const HighValueTx& a, const HighValueTx& b) {
        if (a.day_key != b.day_key) return a.day_key < b.day_key;
        return a.tx_id < b.tx_id;
    });
    return out;
}

} // namespace chainlens
