#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chainlens/store.hpp"

namespace chainlens {

enum class HeuristicTag : uint8_t { MultiInput = 0, Change = 1 };

const char* heuristic_tag_name(HeuristicTag tag);

// Disjoint-set partition over address ids, with provenance of which
// heuristic merged each pair. Finalization canonicalizes every set to its
// smallest member, which then serves as the cluster id.
struct Clustering {
    std::vector<uint64_t> parent;
    std::vector<uint64_t> set_size; // cleared on finalize
    struct Merge {
        uint64_t addr_a, addr_b;
        HeuristicTag tag;
        uint64_t tx_id;
    };
    std::vector<Merge> merge_log;
    bool finalized = false;

    static Clustering identity(uint64_t address_count);

    uint64_t find(uint64_t a) const; // path-halving on mutable parent copy? finalized: O(1)
    bool unite(uint64_t a, uint64_t b, HeuristicTag tag, uint64_t tx_id); // true if it merged two sets
    void finalize(); // representative := min address id of each set
    uint64_t cluster_count() const;
};

// Multi-input heuristic: all distinct resolved input addresses of one
// transaction belong to one entity. max_input_addresses > 0 skips
// transactions with more distinct input addresses than the limit (a crude
// guard against mixing transactions); 0 means no limit.
Clustering multi_input_cluster(const ChainStore& store, uint64_t max_input_addresses = 0);

// Change-address refinement on top of a base clustering. An output is the
// change of its transaction iff
//   (1) its address occurs exactly once as an output in the whole store,
//   (2) the address is not among the transaction's input addresses,
//   (3) no other output of the transaction carries the same address,
//   (4) it is the only output of the transaction satisfying (1)-(3).
// The change address is then merged into the spender's cluster. Never splits:
// the result coarsens `base`.
Clustering change_address_refine(const ChainStore& store, Clustering base);

// Canonical cluster id of an address. UnknownAddress if absent from the store.
uint64_t cluster_of(const Clustering& clustering, const ChainStore& store, const AddressKey& address);

// --- tags -------------------------------------------------------------------

struct SeedTag {
    uint64_t address_id;
    std::string label, source;
};

struct TagSet {
    std::vector<SeedTag> seeds;
    std::map<uint64_t, std::set<std::string>> cluster_labels; // cluster id -> labels
    std::vector<std::string> unknown_addresses;               // seeds with no store address (warnings)
};

// Seed file: CSV `address_payload_hex,kind,label,source`, '#' comments.
TagSet apply_seed_tags(const Clustering& clustering, const ChainStore& store, std::istream& seed_csv);

// --- statistics --------------------------------------------------------------

// size -> number of clusters of that size; sum(size*count) == address count
std::map<uint64_t, uint64_t> cluster_size_distribution(const Clustering& clustering);

struct DegreeStats {
    double avg_in_degree = 0;  // mean over members of distinct txs where the address is an output
    double avg_out_degree = 0; // ... where it funds an input
};

DegreeStats cluster_degree_stats(const ChainStore& store, const Clustering& clustering, uint64_t cluster_id);

// --- persistence --------------------------------------------------------------

void save_clustering(const Clustering& clustering, const std::filesystem::path& dir,
                     const std::string& store_hash, const std::string& heuristics);
Clustering load_clustering(const std::filesystem::path& dir);
void save_tags(const TagSet& tags, const ChainStore& store, const std::filesystem::path& file);
TagSet load_tags(const std::filesystem::path& file);

} // namespace chainlens
