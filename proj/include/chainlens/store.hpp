#pragma once

#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "chainlens/chain.hpp"
#include "chainlens/script.hpp"

namespace chainlens {

constexpr uint32_t kStoreFormatVersion = 1;
constexpr int64_t kNoId = -1;

// Columnar chain representation: dense IDs in chain order, hash pointers
// replaced by integer links. Everything downstream reads this and only this.

struct BlockRow {
    uint64_t height = 0;
    Hash32 hash;
    int32_t version = 0;
    Hash32 prev_block_hash;
    Hash32 merkle_root;
    uint32_t time = 0;
    uint32_t bits = 0;
    uint32_t nonce = 0;
    uint64_t first_tx = 0;
    uint64_t tx_count = 0;
};

struct TxRow {
    Hash32 hash;
    uint64_t block_id = 0;
    uint32_t index_in_block = 0;
    uint32_t size_bytes = 0; // witness-stripped serialized size
    int64_t timestamp = 0;   // inherited from the containing block header
    uint8_t is_coinbase = 0;
    int64_t fee = 0; // satoshis, filled in by link_spends
    uint64_t first_input = 0, input_count = 0;
    uint64_t first_output = 0, output_count = 0;
};

struct OutputRow {
    uint64_t tx_id = 0;
    uint64_t value = 0;
    ScriptClass script_class = ScriptClass::NonStandard;
    int64_t address_id = kNoId;
    int64_t spent_by_input = kNoId; // the spend-link column; kNoId while unspent
};

struct InputRow {
    uint64_t tx_id = 0;
    Hash32 prev_tx_hash; // zero for coinbase
    uint32_t prev_vout = 0;
    int64_t spent_output_id = kNoId; // resolved by link_spends; kNoId for coinbase
    uint64_t resolved_value = 0;
    int64_t resolved_address_id = kNoId;
};

struct ChainStore {
    std::string network_magic_hex = "f9beb4d9";
    std::string input_signature; // identity of the ingested inputs, for idempotence

    std::vector<BlockRow> blocks;
    std::vector<TxRow> txs;
    std::vector<InputRow> inputs;
    std::vector<OutputRow> outputs;

    Bytes script_blob;
    std::vector<uint64_t> script_offsets; // outputs.size() + 1 entries

    std::vector<AddressKey> addresses; // dense by address_id

    std::unordered_map<Hash32, uint64_t, Hash32Hasher> tx_index;
    std::unordered_map<AddressKey, uint64_t, AddressKeyHasher> address_index;

    bool indexed = false;
    bool linked = false;

    ByteSpan output_script(uint64_t output_id) const {
        return ByteSpan(script_blob.data() + script_offsets[output_id],
                        script_offsets[output_id + 1] - script_offsets[output_id]);
    }
    std::optional<uint64_t> find_tx(const Hash32& hash) const {
        auto it = tx_index.find(hash);
        if (it == tx_index.end()) return std::nullopt;
        return it->second;
    }
    std::optional<uint64_t> find_address(const AddressKey& key) const {
        auto it = address_index.find(key);
        if (it == address_index.end()) return std::nullopt;
        return it->second;
    }
    uint64_t spend_link_count() const {
        uint64_t n = 0;
        for (const OutputRow& o : outputs) n += o.spent_by_input != kNoId;
        return n;
    }
};

// Populates tx_index and address_index; assigns address_ids to outputs in
// chain order (first appearance wins the id).
void build_indexes(ChainStore& store);

// Resolves every non-coinbase input to its creating output, fills spend
// links and fees. DanglingInput for unknown references, DoubleSpend when an
// output is claimed twice, NegativeFee when value conservation breaks.
void link_spends(ChainStore& store);

// Fee of one transaction from its resolved inputs (coinbase fee is 0).
int64_t compute_fee(const ChainStore& store, uint64_t tx_id);

// --- persistence -----------------------------------------------------------

void save_store(const ChainStore& store, const std::filesystem::path& dir);
ChainStore load_store(const std::filesystem::path& dir);
bool store_exists(const std::filesystem::path& dir);

// SHA256 of the manifest file, the identity downstream artifacts record.
std::string store_manifest_hash(const std::filesystem::path& dir);

// file helpers shared by the graph/clustering persistence code
Bytes read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, ByteSpan data);

} // namespace chainlens
