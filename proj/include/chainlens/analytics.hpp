#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chainlens/graph.hpp"
#include "chainlens/store.hpp"

namespace chainlens {

// --- centrality ---------------------------------------------------------------

// Per-vertex scores plus solver metadata. Iterative measures record their
// iteration count and final residual; non-convergence is a flagged result,
// not an error.
struct ScoreVector {
    GraphKind graph_kind = GraphKind::TxGraph;
    std::string measure;
    std::string params;
    std::vector<double> scores;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

// Power iteration on the simple projection, dangling mass spread uniformly;
// scores sum to 1.
ScoreVector pagerank(const Graph& graph, double damping = 0.85, double tolerance = 1e-8,
                     int max_iter = 200);

struct HitsScores {
    ScoreVector hubs, authorities;
};
HitsScores hits(const Graph& graph, double tolerance = 1e-8, int max_iter = 200);

// Exact Brandes accumulation, directed unweighted simple projection.
// `workers` splits sources into contiguous chunks reduced in order, so the
// result is deterministic for a fixed worker count.
ScoreVector betweenness(const Graph& graph, unsigned workers = 1);

// Sampled estimator for graphs where exact Brandes is infeasible: Brandes
// from `sample_sources` uniformly drawn sources, scaled by N/K.
ScoreVector betweenness_sampled(const Graph& graph, uint64_t sample_sources, uint64_t seed = 1,
                                unsigned workers = 1);

// Harmonic closeness (sum of 1/d over forward-reachable vertices).
ScoreVector closeness(const Graph& graph, unsigned workers = 1);

// Power iteration on in-edge adjacency, L2-normalized.
ScoreVector eigenvector_centrality(const Graph& graph, double tolerance = 1e-8, int max_iter = 500);

enum class Direction { In, Out };

// Top-k by multigraph degree (parallel edges count), ties to the smaller id.
std::vector<std::pair<uint64_t, uint64_t>> degree_top_k(const Graph& graph, Direction direction,
                                                        uint64_t k);

// --- traversal ----------------------------------------------------------------

struct Path {
    std::vector<uint64_t> vertices;
    std::vector<uint64_t> edges; // one fewer than vertices
};

// Fewest-hop path via BFS; with temporal=true edges along the path must have
// non-decreasing timestamps. Ties break toward the smallest next vertex id.
std::optional<Path> shortest_path(const Graph& graph, uint64_t src, uint64_t dst, bool temporal = false);

// Forward closure from src under the same constraints; max_hops 0 = unbounded.
std::vector<uint64_t> reachable_set(const Graph& graph, uint64_t src, uint64_t max_hops = 0,
                                    bool temporal = false);

// --- components & labels --------------------------------------------------------

// Tarjan SCC; components numbered 0..k-1 ordered by smallest contained vertex.
struct SccResult {
    std::vector<uint64_t> component; // vertex -> component id
    uint64_t component_count = 0;
};
SccResult strongly_connected_components(const Graph& graph);

// Synchronous label propagation from seeded vertices: an unlabeled vertex
// adopts the majority label among its labeled distinct in-neighbors, ties to
// the lexicographically smaller label; seeds never change.
struct LabelAssignment {
    std::vector<std::string> labels;  // label id -> text
    std::vector<int32_t> vertex_label; // -1 = unlabeled
    int iterations = 0;
};
LabelAssignment propagate_labels(const Graph& graph, const std::map<uint64_t, std::string>& seeds,
                                 int max_iters);

// --- statistics -----------------------------------------------------------------

enum class Bucket { Day, Month };

// UTC bucketing helpers (bucket key = first second of the bucket)
int64_t bucket_start(int64_t timestamp, Bucket bucket);
int64_t next_bucket(int64_t bucket_key, Bucket bucket);
std::string format_bucket(int64_t bucket_key, Bucket bucket); // YYYY-MM-DD | YYYY-MM
std::string format_day(int64_t day_key);                      // YYYY-MM-DD

// Fiat leg: date -> USD per BTC with 8 fractional digits, exact decimal.
struct RateTable {
    std::vector<std::pair<int64_t, int64_t>> rows; // (UTC day key, usd_per_btc * 1e8), strictly increasing

    static RateTable from_csv(std::istream& csv); // date(YYYY-MM-DD),usd_per_btc
    std::optional<int64_t> rate_e8_for_day(int64_t day_key) const;
};

// usd*1e8 = sats * rate_e8 / 1e8, rounded half away from zero on the 1e-8
// grid; all fiat figures in the toolkit go through this one function.
int64_t sats_to_usd_e8(int64_t sats, int64_t rate_e8);

struct VelocityPoint {
    int64_t bucket_key;
    double velocity; // non-coinbase output value turned over / coined supply at bucket end
};
std::vector<VelocityPoint> velocity_series(const ChainStore& store, Bucket bucket);

struct AddressTypePoint {
    int64_t bucket_key;
    uint64_t counts[kScriptClassCount]; // outputs per ScriptClass
};
std::vector<AddressTypePoint> address_type_series(const ChainStore& store, Bucket bucket);

// Fee averages are over non-coinbase transactions (coinbase pays no fee).
struct FeePoint {
    int64_t bucket_key;
    uint64_t tx_count; // non-coinbase
    double mean_fee_sats;
    double mean_fee_per_byte;
    int64_t mean_fee_usd_e8; // only meaningful when rates were supplied
};
std::vector<FeePoint> fee_series(const ChainStore& store, Bucket bucket,
                                 const RateTable* rates = nullptr);

struct HighValueTx {
    uint64_t tx_id;
    int64_t fee_sats;
    int64_t fee_usd_e8;
    int64_t day_key;
};
// All transactions whose fee exceeds threshold_usd, sorted by date then id.
std::vector<HighValueTx> high_value_transactions(const ChainStore& store, const RateTable& rates,
                                                 int64_t threshold_usd_e8 = 1000LL * 100000000LL);

std::string format_usd_e8(int64_t usd_e8); // "12.34567890"

} // namespace chainlens
