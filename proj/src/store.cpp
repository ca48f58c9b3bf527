// ChainStore linking, indexing and the on-disk table format: one file per
// table, fixed-width little-endian columns, scripts in a blob + offsets pair,
// a JSON manifest with row counts and format version.

#include "chainlens/store.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace chainlens {

namespace fs = std::filesystem;
using nlohmann::json;

void build_indexes(ChainStore& store) {
    store.tx_index.clear();
    store.tx_index.reserve(store.txs.size() * 2);
    for (uint64_t id = 0; id < store.txs.size(); ++id) {
        auto [it, inserted] = store.tx_index.emplace(store.txs[id].hash, id);
        if (!inserted) raise(Errc::StoreCorrupt, "duplicate txid " + store.txs[id].hash.to_hex());
    }

    store.address_index.clear();
    store.addresses.clear();
    for (uint64_t out_id = 0; out_id < store.outputs.size(); ++out_id) {
        OutputRow& out = store.outputs[out_id];
        std::optional<AddressKey> key = script_to_address(store.output_script(out_id), out.script_class);
        if (!key) {
            out.address_id = kNoId;
            continue;
        }
        auto [it, inserted] = store.address_index.emplace(*key, store.addresses.size());
        if (inserted) store.addresses.push_back(*key);
        out.address_id = static_cast<int64_t>(it->second);
    }
    store.indexed = true;
}

void link_spends(ChainStore& store) {
    if (!store.indexed) build_indexes(store);

    for (uint64_t in_id = 0; in_id < store.inputs.size(); ++in_id) {
        InputRow& in = store.inputs[in_id];
        const TxRow& spender = store.txs[in.tx_id];
        if (spender.is_coinbase) {
            in.spent_output_id = kNoId;
            in.resolved_value = 0;
            in.resolved_address_id = kNoId;
            continue;
        }
        std::optional<uint64_t> prev_tx = store.find_tx(in.prev_tx_hash);
        if (!prev_tx)
            raise(Errc::DanglingInput, "input of tx " + spender.hash.to_hex() +
                                           " references unknown tx " + in.prev_tx_hash.to_hex());
        const TxRow& creator = store.txs[*prev_tx];
        if (in.prev_vout >= creator.output_count)
            raise(Errc::DanglingInput, "input of tx " + spender.hash.to_hex() + " references vout " +
                                           std::to_string(in.prev_vout) + " past the end of tx " +
                                           in.prev_tx_hash.to_hex());
        if (*prev_tx >= in.tx_id)
            raise(Errc::DanglingInput, "input of tx " + spender.hash.to_hex() +
                                           " references an output that is not earlier in chain order");
        uint64_t out_id = creator.first_output + in.prev_vout;
        OutputRow& out = store.outputs[out_id];
        if (out.spent_by_input != kNoId)
            raise(Errc::DoubleSpend, "output " + in.prev_tx_hash.to_hex() + ":" +
                                         std::to_string(in.prev_vout) + " spent twice");
        out.spent_by_input = static_cast<int64_t>(in_id);
        in.spent_output_id = static_cast<int64_t>(out_id);
        in.resolved_value = out.value;
        in.resolved_address_id = out.address_id;
    }

    store.linked = true;
    for (uint64_t tx_id = 0; tx_id < store.txs.size(); ++tx_id)
        store.txs[tx_id].fee = compute_fee(store, tx_id);
}

int64_t compute_fee(const ChainStore& store, uint64_t tx_id) {
    const TxRow& tx = store.txs[tx_id];
    if (tx.is_coinbase) return 0;
    if (!store.linked) raise(Errc::NotBuilt, "fees need resolved inputs (run link_spends)");
    uint64_t in_sum = 0, out_sum = 0;
    for (uint64_t i = tx.first_input; i < tx.first_input + tx.input_count; ++i)
        in_sum += store.inputs[i].resolved_value;
    for (uint64_t o = tx.first_output; o < tx.first_output + tx.output_count; ++o)
        out_sum += store.outputs[o].value;
    if (in_sum < out_sum)
        raise(Errc::NegativeFee, "tx " + tx.hash.to_hex() + " creates value: inputs " +
                                     std::to_string(in_sum) + " < outputs " + std::to_string(out_sum));
    return static_cast<int64_t>(in_sum - out_sum);
}

// --- persistence -----------------------------------------------------------

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::IoError, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void write_file_atomic(const fs::path& path, ByteSpan data) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::IoError, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out) raise(Errc::IoError, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

void put_hash(ByteWriter& w, const Hash32& h) { w.bytes(h.bytes); }
Hash32 get_hash(ByteReader& r) {
    Hash32 h;
    std::copy_n(r.take(32).begin(), 32, h.bytes.begin());
    return h;
}

Bytes encode_blocks(const std::vector<BlockRow>& rows) {
    ByteWriter w;
    for (const BlockRow& b : rows) {
        w.u64(b.height);
        put_hash(w, b.hash);
        w.i32(b.version);
        put_hash(w, b.prev_block_hash);
        put_hash(w, b.merkle_root);
        w.u32(b.time);
        w.u32(b.bits);
        w.u32(b.nonce);
        w.u64(b.first_tx);
        w.u64(b.tx_count);
    }
    return w.take();
}

std::vector<BlockRow> decode_blocks(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<BlockRow> rows(count);
    for (BlockRow& b : rows) {
        b.height = r.u64();
        b.hash = get_hash(r);
        b.version = r.i32();
        b.prev_block_hash = get_hash(r);
        b.merkle_root = get_hash(r);
        b.time = r.u32();
        b.bits = r.u32();
        b.nonce = r.u32();
        b.first_tx = r.u64();
        b.tx_count = r.u64();
    }
    if (!r.empty()) raise(Errc::StoreCorrupt, "blocks table has trailing bytes");
    return rows;
}

Bytes encode_txs(const std::vector<TxRow>& rows) {
    ByteWriter w;
    for (const TxRow& t : rows) {
        put_hash(w, t.hash);
        w.u64(t.block_id);
        w.u32(t.index_in_block);
        w.u32(t.size_bytes);
        w.i64(t.timestamp);
        w.u8(t.is_coinbase);
        w.i64(t.fee);
        w.u64(t.first_input);
        w.u64(t.input_count);
        w.u64(t.first_output);
        w.u64(t.output_count);
    }
    return w.take();
}

std::vector<TxRow> decode_txs(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<TxRow> rows(count);
    for (TxRow& t : rows) {
        t.hash = get_hash(r);
        t.block_id = r.u64();
        t.index_in_block = r.u32();
        t.size_bytes = r.u32();
        t.timestamp = r.i64();
        t.is_coinbase = r.u8();
        t.fee = r.i64();
        t.first_input = r.u64();
        t.input_count = r.u64();
        t.first_output = r.u64();
        t.output_count = r.u64();
    }
    if (!r.empty()) raise(Errc::StoreCorrupt, "transactions table has trailing bytes");
    return rows;
}

Bytes encode_outputs(const std::vector<OutputRow>& rows) {
    ByteWriter w;
    for (const OutputRow& o : rows) {
        w.u64(o.tx_id);
        w.u64(o.value);
        w.u8(static_cast<uint8_t>(o.script_class));
        w.i64(o.address_id);
        w.i64(o.spent_by_input);
    }
    return w.take();
}

std::vector<OutputRow> decode_outputs(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<OutputRow> rows(count);
    for (OutputRow& o : rows) {
        o.tx_id = r.u64();
        o.value = r.u64();
        o.script_class = static_cast<ScriptClass>(r.u8());
        o.address_id = r.i64();
        o.spent_by_input = r.i64();
    }
    if (!r.empty()) raise(Errc::StoreCorrupt, "outputs table has trailing bytes");
    return rows;
}

Bytes encode_inputs(const std::vector<InputRow>& rows) {
    ByteWriter w;
    for (const InputRow& i : rows) {
        w.u64(i.tx_id);
        put_hash(w, i.prev_tx_hash);
        w.u32(i.prev_vout);
        w.i64(i.spent_output_id);
        w.u64(i.resolved_value);
        w.i64(i.resolved_address_id);
    }
    return w.take();
}

std::vector<InputRow> decode_inputs(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<InputRow> rows(count);
    for (InputRow& i : rows) {
        i.tx_id = r.u64();
        i.prev_tx_hash = get_hash(r);
        i.prev_vout = r.u32();
        i.spent_output_id = r.i64();
        i.resolved_value = r.u64();
        i.resolved_address_id = r.i64();
    }
    if (!r.empty()) raise(Errc::StoreCorrupt, "inputs table has trailing bytes");
    return rows;
}

Bytes encode_addresses(const std::vector<AddressKey>& rows) {
    ByteWriter w;
    for (const AddressKey& a : rows) {
        w.u8(static_cast<uint8_t>(a.kind));
        w.bytes(a.payload);
    }
    return w.take();
}

std::vector<AddressKey> decode_addresses(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<AddressKey> rows(count);
    for (AddressKey& a : rows) {
        a.kind = static_cast<ScriptClass>(r.u8());
        std::copy_n(r.take(20).begin(), 20, a.payload.begin());
    }
    if (!r.empty()) raise(Errc::StoreCorrupt, "addresses table has trailing bytes");
    return rows;
}

Bytes encode_u64s(const std::vector<uint64_t>& v) {
    ByteWriter w;
    for (uint64_t x : v) w.u64(x);
    return w.take();
}

std::vector<uint64_t> decode_u64s(ByteSpan data, uint64_t count) {
    ByteReader r(data, Errc::StoreCorrupt);
    std::vector<uint64_t> v(count);
    for (uint64_t& x : v) x = r.u64();
    if (!r.empty()) raise(Errc::StoreCorrupt, "offsets file has trailing bytes");
    return v;
}

} // namespace

void save_store(const ChainStore& store, const fs::path& dir) {
    fs::create_directories(dir);

    write_file_atomic(dir / "blocks.tbl", encode_blocks(store.blocks));
    write_file_atomic(dir / "txs.tbl", encode_txs(store.txs));
    write_file_atomic(dir / "outputs.tbl", encode_outputs(store.outputs));
    write_file_atomic(dir / "inputs.tbl", encode_inputs(store.inputs));
    write_file_atomic(dir / "addresses.tbl", encode_addresses(store.addresses));
    write_file_atomic(dir / "scripts.blob", store.script_blob);
    write_file_atomic(dir / "scripts.off", encode_u64s(store.script_offsets));

    // sorted hash -> id index, binary-searchable without the hash map
    {
        std::vector<std::pair<Hash32, uint64_t>> idx;
        idx.reserve(store.txs.size());
        for (uint64_t id = 0; id < store.txs.size(); ++id) idx.emplace_back(store.txs[id].hash, id);
        std::sort(idx.begin(), idx.end());
        ByteWriter w;
        for (auto& [h, id] : idx) {
            put_hash(w, h);
            w.u64(id);
        }
        write_file_atomic(dir / "tx_index.tbl", w.data());
    }
    {
        std::vector<std::pair<AddressKey, uint64_t>> idx;
        idx.reserve(store.addresses.size());
        for (uint64_t id = 0; id < store.addresses.size(); ++id) idx.emplace_back(store.addresses[id], id);
        std::sort(idx.begin(), idx.end());
        ByteWriter w;
        for (auto& [a, id] : idx) {
            w.u8(static_cast<uint8_t>(a.kind));
            w.bytes(a.payload);
            w.u64(id);
        }
        write_file_atomic(dir / "addr_index.tbl", w.data());
    }

    json manifest;
    manifest["format_version"] = kStoreFormatVersion;
    manifest["network_magic"] = store.network_magic_hex;
    manifest["input_signature"] = store.input_signature;
    manifest["linked"] = store.linked;
    manifest["counts"] = {{"blocks", store.blocks.size()},
                          {"transactions", store.txs.size()},
                          {"inputs", store.inputs.size()},
                          {"outputs", store.outputs.size()},
                          {"addresses", store.addresses.size()},
                          {"spend_links", store.spend_link_count()}};
    std::string text = manifest.dump(2);
    text.push_back('\n');
    write_file_atomic(dir / "manifest.json", ByteSpan(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

bool store_exists(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }

ChainStore load_store(const fs::path& dir) {
    if (!store_exists(dir)) raise(Errc::NotBuilt, "no store at " + dir.string() + " (run ingest first)");

    Bytes mbytes = read_file(dir / "manifest.json");
    json manifest = json::parse(mbytes.begin(), mbytes.end(), nullptr, false);
    if (manifest.is_discarded()) raise(Errc::StoreCorrupt, "manifest.json is not valid JSON");
    if (manifest.value("format_version", 0u) != kStoreFormatVersion)
        raise(Errc::StoreCorrupt, "unsupported store format version");

    ChainStore store;
    store.network_magic_hex = manifest.value("network_magic", "f9beb4d9");
    store.input_signature = manifest.value("input_signature", "");
    const json& counts = manifest.at("counts");

    store.blocks = decode_blocks(read_file(dir / "blocks.tbl"), counts.at("blocks").get<uint64_t>());
    store.txs = decode_txs(read_file(dir / "txs.tbl"), counts.at("transactions").get<uint64_t>());
    store.outputs = decode_outputs(read_file(dir / "outputs.tbl"), counts.at("outputs").get<uint64_t>());
    store.inputs = decode_inputs(read_file(dir / "inputs.tbl"), counts.at("inputs").get<uint64_t>());
    store.addresses =
        decode_addresses(read_file(dir / "addresses.tbl"), counts.at("addresses").get<uint64_t>());
    store.script_blob = read_file(dir / "scripts.blob");
    store.script_offsets =
        decode_u64s(read_file(dir / "scripts.off"), counts.at("outputs").get<uint64_t>() + 1);
    for (size_t i = 1; i < store.script_offsets.size(); ++i)
        if (store.script_offsets[i] < store.script_offsets[i - 1])
            raise(Errc::StoreCorrupt, "script offsets not monotone");
    if (store.script_offsets.empty() || store.script_offsets.front() != 0 ||
        store.script_offsets.back() != store.script_blob.size())
        raise(Errc::StoreCorrupt, "script offsets do not cover the blob");

    store.tx_index.reserve(store.txs.size() * 2);
    for (uint64_t id = 0; id < store.txs.size(); ++id) store.tx_index.emplace(store.txs[id].hash, id);
    store.address_index.reserve(store.addresses.size() * 2);
    for (uint64_t id = 0; id < store.addresses.size(); ++id)
        store.address_index.emplace(store.addresses[id], id);

    store.indexed = true;
    store.linked = manifest.value("linked", false);
    return store;
}

std::string store_manifest_hash(const fs::path& dir) {
    Bytes m = read_file(dir / "manifest.json");
    return hex_encode(sha256(m));
}

} // namespace chainlens
