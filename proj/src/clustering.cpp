// Address-linking heuristics over a disjoint-set forest, seed tagging and
// cluster statistics.

#include "chainlens/clustering.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace chainlens {

namespace fs = std::filesystem;
using nlohmann::json;

const char* heuristic_tag_name(HeuristicTag tag) {
    switch (tag) {
    case HeuristicTag::MultiInput: return "multi-input";
    case HeuristicTag::Change: return "change";
    }
    return "multi-input";
}

Clustering Clustering::identity(uint64_t address_count) {
    Clustering c;
    c.parent.resize(address_count);
    for (uint64_t a = 0; a < address_count; ++a) c.parent[a] = a;
    c.set_size.assign(address_count, 1);
    return c;
}

uint64_t Clustering::find(uint64_t a) const {
    while (parent[a] != a) a = parent[a];
    return a;
}

bool Clustering::unite(uint64_t a, uint64_t b, HeuristicTag tag, uint64_t tx_id) {
    uint64_t ra = find(a), rb = find(b);
    if (ra == rb) return false;
    merge_log.push_back({a < b ? a : b, a < b ? b : a, tag, tx_id});
    // union by size, ties to the smaller id; compress both walks onto the winner
    if (set_size[ra] < set_size[rb] || (set_size[ra] == set_size[rb] && rb < ra)) std::swap(ra, rb);
    set_size[ra] += set_size[rb];
    for (uint64_t cur : {a, b}) {
        while (parent[cur] != ra) {
            uint64_t next = parent[cur];
            parent[cur] = ra;
            cur = next;
        }
    }
    return true;
}

void Clustering::finalize() {
    std::vector<uint64_t> root(parent.size());
    std::vector<uint64_t> min_rep(parent.size(), UINT64_MAX);
    for (uint64_t a = 0; a < parent.size(); ++a) {
        root[a] = find(a);
        if (min_rep[root[a]] == UINT64_MAX) min_rep[root[a]] = a; // ascending scan: first hit is the min
    }
    for (uint64_t a = 0; a < parent.size(); ++a) parent[a] = min_rep[root[a]];
    set_size.clear();
    finalized = true;
}

uint64_t Clustering::cluster_count() const {
    uint64_t n = 0;
    for (uint64_t a = 0; a < parent.size(); ++a) n += find(a) == a;
    return n;
}

namespace {

// distinct resolved input addresses of one tx, ascending
std::vector<uint64_t> distinct_input_addresses(const ChainStore& store, const TxRow& tx) {
    std::vector<uint64_t> addrs;
    for (uint64_t i = tx.first_input; i < tx.first_input + tx.input_count; ++i)
        if (store.inputs[i].resolved_address_id != kNoId)
            addrs.push_back(static_cast<uint64_t>(store.inputs[i].resolved_address_id));
    std::sort(addrs.begin(), addrs.end());
    addrs.erase(std::unique(addrs.begin(), addrs.end()), addrs.end());
    return addrs;
}

void ensure_set_sizes(Clustering& c) {
    if (!c.set_size.empty()) return;
    c.set_size.assign(c.parent.size(), 0);
    for (uint64_t a = 0; a < c.parent.size(); ++a) ++c.set_size[c.find(a)];
    c.finalized = false;
}

} // namespace

Clustering multi_input_cluster(const ChainStore& store, uint64_t max_input_addresses) {
    if (!store.linked) raise(Errc::NotBuilt, "spend links missing (run ingest to completion)");
    Clustering c = Clustering::identity(store.addresses.size());
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        if (tx.is_coinbase) continue;
        std::vector<uint64_t> addrs = distinct_input_addresses(store, tx);
        if (addrs.size() < 2) continue;
        if (max_input_addresses > 0 && addrs.size() > max_input_addresses) continue;
        for (size_t i = 1; i < addrs.size(); ++i)
            c.unite(addrs[0], addrs[i], HeuristicTag::MultiInput, tx_id);
    }
    c.finalize();
    return c;
}

Clustering change_address_refine(const ChainStore& store, Clustering base) {
    if (base.parent.size() != store.addresses.size())
        raise(Errc::UnknownCluster, "base clustering does not cover the store");
    ensure_set_sizes(base);

    std::vector<uint32_t> out_occurrences(store.addresses.size(), 0);
    for (const OutputRow& out : store.outputs)
        if (out.address_id != kNoId) ++out_occurrences[out.address_id];

    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        if (tx.is_coinbase) continue;
        std::vector<uint64_t> in_addrs = distinct_input_addresses(store, tx);
        if (in_addrs.empty()) continue;

        // conditions (1)-(3); (1) "occurs once in the whole store" already
        // rules out a second occurrence inside this tx, so (3) needs no
        // separate scan
        std::optional<uint64_t> candidate;
        bool ambiguous = false;
        for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o) {
            const OutputRow& out = store.outputs[o];
            if (out.address_id == kNoId) continue;
            uint64_t addr = static_cast<uint64_t>(out.address_id);
            if (out_occurrences[addr] != 1) continue;
            if (std::binary_search(in_addrs.begin(), in_addrs.end(), addr)) continue;
            if (candidate) {
                ambiguous = true; // condition (4)
                break;
            }
            candidate = addr;
        }
        if (candidate && !ambiguous)
            base.unite(*candidate, in_addrs[0], HeuristicTag::Change, tx_id);
    }
    base.finalize();
    return base;
}

uint64_t cluster_of(const Clustering& clustering, const ChainStore& store, const AddressKey& address) {
    std::optional<uint64_t> id = store.find_address(address);
    if (!id) raise(Errc::UnknownAddress, "address " + address.payload_hex() + " not in store");
    return clustering.find(*id);
}

TagSet apply_seed_tags(const Clustering& clustering, const ChainStore& store, std::istream& seed_csv) {
    TagSet tags;
    std::string line;
    size_t line_no = 0;
    while (std::getline(seed_csv, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4)
            raise(Errc::SchemaError, "seed line " + std::to_string(line_no) +
                                         ": expected address_payload_hex,kind,label,source");
        std::optional<ScriptClass> kind = script_class_from_name(fields[1]);
        if (!kind)
            raise(Errc::SchemaError, "seed line " + std::to_string(line_no) + ": unknown kind " + fields[1]);

        AddressKey key;
        // pay-to-pubkey identities live in the pubkey-hash space
        key.kind = (*kind == ScriptClass::PayToPubkey) ? ScriptClass::PayToPubkeyHash : *kind;
        Bytes payload = hex_decode(fields[0]);
        if (payload.size() != 20)
            raise(Errc::SchemaError, "seed line " + std::to_string(line_no) + ": payload must be 20 bytes");
        std::copy_n(payload.begin(), 20, key.payload.begin());

        std::optional<uint64_t> addr = store.find_address(key);
        if (!addr) {
            tags.unknown_addresses.push_back(fields[0]);
            continue;
        }
        tags.seeds.push_back({*addr, fields[2], fields[3]});
        tags.cluster_labels[clustering.find(*addr)].insert(fields[2]);
    }
    return tags;
}

std::map<uint64_t, uint64_t> cluster_size_distribution(const Clustering& clustering) {
    std::vector<uint64_t> sizes(clustering.parent.size(), 0);
    for (uint64_t a = 0; a < clustering.parent.size(); ++a) ++sizes[clustering.find(a)];
    std::map<uint64_t, uint64_t> hist;
    for (uint64_t s : sizes)
        if (s > 0) ++hist[s];
    return hist;
}

DegreeStats cluster_degree_stats(const ChainStore& store, const Clustering& clustering, uint64_t cluster_id) {
    if (cluster_id >= clustering.parent.size() || clustering.find(cluster_id) != cluster_id)
        raise(Errc::UnknownCluster, "no cluster with representative " + std::to_string(cluster_id));

    // per-address counts, de-duplicated per transaction
    std::vector<uint32_t> in_txs(store.addresses.size(), 0), out_txs(store.addresses.size(), 0);
    std::vector<uint64_t> scratch;
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id) {
        const TxRow& tx = store.txs[tx_id];
        scratch.clear();
        for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o)
            if (store.outputs[o].address_id != kNoId)
                scratch.push_back(static_cast<uint64_t>(store.outputs[o].address_id));
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        for (uint64_t a : scratch) ++in_txs[a];

        for (uint64_t a : distinct_input_addresses(store, tx)) ++out_txs[a];
    }

    uint64_t members = 0, in_sum = 0, out_sum = 0;
    for (uint64_t a = 0; a < clustering.parent.size(); ++a) {
        if (clustering.find(a) != cluster_id) continue;
        ++members;
        in_sum += in_txs[a];
        out_sum += out_txs[a];
    }
    DegreeStats stats;
    stats.avg_in_degree = members ? static_cast<double>(in_sum) / members : 0.0;
    stats.avg_out_degree = members ? static_cast<double>(out_sum) / members : 0.0;
    return stats;
}

// --- persistence --------------------------------------------------------------

void save_clustering(const Clustering& clustering, const fs::path& dir, const std::string& store_hash,
                     const std::string& heuristics) {
    fs::create_directories(dir);
    ByteWriter parents;
    for (uint64_t p : clustering.parent) parents.u64(p);
    write_file_atomic(dir / "parents.tbl", parents.data());

    ByteWriter merges;
    for (const Clustering::Merge& m : clustering.merge_log) {
        merges.u64(m.addr_a);
        merges.u64(m.addr_b);
        merges.u8(static_cast<uint8_t>(m.tag));
        merges.u64(m.tx_id);
    }
    write_file_atomic(dir / "merges.tbl", merges.data());

    json manifest;
    manifest["address_count"] = clustering.parent.size();
    manifest["cluster_count"] = clustering.cluster_count();
    manifest["merge_count"] = clustering.merge_log.size();
    manifest["heuristics"] = heuristics;
    manifest["store_manifest_hash"] = store_hash;
    std::string text = manifest.dump(2);
    text.push_back('\n');
    write_file_atomic(dir / "clustering.json",
                      ByteSpan(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

Clustering load_clustering(const fs::path& dir) {
    if (!fs::exists(dir / "clustering.json"))
        raise(Errc::NotBuilt, "no clustering at " + dir.string() + " (run 'cluster' first)");
    Bytes m = read_file(dir / "clustering.json");
    json manifest = json::parse(m.begin(), m.end(), nullptr, false);
    if (manifest.is_discarded()) raise(Errc::StoreCorrupt, "clustering.json is not valid JSON");
    uint64_t n = manifest.at("address_count").get<uint64_t>();
    uint64_t merges = manifest.at("merge_count").get<uint64_t>();

    Clustering c;
    {
        Bytes data = read_file(dir / "parents.tbl");
        ByteReader r(data, Errc::StoreCorrupt);
        c.parent.resize(n);
        for (uint64_t& p : c.parent) p = r.u64();
        if (!r.empty()) raise(Errc::StoreCorrupt, "parents table has trailing bytes");
    }
    {
        Bytes data = read_file(dir / "merges.tbl");
        ByteReader r(data, Errc::StoreCorrupt);
        c.merge_log.resize(merges);
        for (Clustering::Merge& mg : c.merge_log) {
            mg.addr_a = r.u64();
            mg.addr_b = r.u64();
            mg.tag = static_cast<HeuristicTag>(r.u8());
            mg.tx_id = r.u64();
        }
        if (!r.empty()) raise(Errc::StoreCorrupt, "merges table has trailing bytes");
    }
    c.finalized = true;
    return c;
}

void save_tags(const TagSet& tags, const ChainStore& store, const fs::path& file) {
    json j;
    j["seeds"] = json::array();
    for (const SeedTag& s : tags.seeds)
        j["seeds"].push_back({{"address_id", s.address_id},
                              {"payload_hex", store.addresses[s.address_id].payload_hex()},
                              {"kind", script_class_name(store.addresses[s.address_id].kind)},
                              {"label", s.label},
                              {"source", s.source}});
    j["cluster_labels"] = json::object();
    for (const auto& [cluster, labels] : tags.cluster_labels)
        j["cluster_labels"][std::to_string(cluster)] = labels;
    j["unknown_addresses"] = tags.unknown_addresses;
    std::string text = j.dump(2);
    text.push_back('\n');
    write_file_atomic(file, ByteSpan(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

TagSet load_tags(const fs::path& file) {
    if (!fs::exists(file)) raise(Errc::NotBuilt, "no tags at " + file.string() + " (run 'tag' first)");
    Bytes data = read_file(file);
    json j = json::parse(data.begin(), data.end(), nullptr, false);
    if (j.is_discarded()) raise(Errc::StoreCorrupt, "tag file is not valid JSON");
    TagSet tags;
    for (const json& s : j.at("seeds"))
        tags.seeds.push_back({s.at("address_id").get<uint64_t>(), s.at("label").get<std::string>(),
                              s.at("source").get<std::string>()});
    for (auto& [key, labels] : j.at("cluster_labels").items()) {
        std::set<std::string>& dst = tags.cluster_labels[std::stoull(key)];
        for (const json& l : labels) dst.insert(l.get<std::string>());
    }
    for (const json& u : j.at("unknown_addresses")) tags.unknown_addresses.push_back(u.get<std::string>());
    return tags;
}

} // namespace chainlens
