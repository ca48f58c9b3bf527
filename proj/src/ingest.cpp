// Parser and Database stages: blk*.dat scanning, main-chain selection, the
// JSONL fixture path, and the staged ingest driver.

#include "chainlens/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <unistd.h>

#include <nlohmann/json.hpp>

namespace chainlens {

namespace fs = std::filesystem;
using nlohmann::json;

NetworkMagic magic_from_hex(std::string_view hex) {
    Bytes raw = hex_decode(hex);
    if (raw.size() != 4) raise(Errc::SchemaError, "network magic must be 8 hex digits");
    NetworkMagic m;
    std::copy_n(raw.begin(), 4, m.begin());
    return m;
}

std::string magic_to_hex(const NetworkMagic& magic) { return hex_encode(magic); }

std::vector<RawBlockEnvelope> parse_block_file(ByteSpan stream, const NetworkMagic& magic) {
    std::vector<RawBlockEnvelope> out;
    size_t pos = 0;
    while (pos < stream.size()) {
        // blk files are zero-padded at the tail
        if (stream[pos] == 0) {
            size_t z = pos;
            while (z < stream.size() && stream[z] == 0) ++z;
            if (z == stream.size()) break;
            raise(Errc::BadMagic, "zero gap followed by data at offset " + std::to_string(z));
        }
        if (stream.size() - pos < 8) raise(Errc::TruncatedBlock, "envelope prefix past end of stream");
        if (!std::equal(magic.begin(), magic.end(), stream.begin() + pos))
            raise(Errc::BadMagic, "stream desynchronized at offset " + std::to_string(pos));
        pos += 4;
        uint32_t payload_size;
        std::memcpy(&payload_size, stream.data() + pos, 4);
        pos += 4;
        if (payload_size > stream.size() - pos)
            raise(Errc::TruncatedBlock, "payload of " + std::to_string(payload_size) +
                                            " bytes exceeds remaining " + std::to_string(stream.size() - pos));

        ByteReader r(stream.subspan(pos, payload_size), Errc::TruncatedBlock);
        RawBlockEnvelope env;
        env.payload_size = payload_size;
        env.header = BlockHeader::parse(r);
        uint64_t tx_count = read_varint(r);
        // a transaction takes at least 60 bytes on the wire
        if (tx_count > r.remaining() / 60 + 1)
            raise(Errc::MalformedTransaction, "implausible transaction count " + std::to_string(tx_count));
        env.txs.reserve(tx_count);
        for (uint64_t i = 0; i < tx_count; ++i) env.txs.push_back(WireTx::parse(r));
        if (!r.empty())
            raise(Errc::MalformedTransaction,
                  "block payload not fully consumed (" + std::to_string(r.remaining()) + " bytes left)");
        pos += payload_size;
        out.push_back(std::move(env));
    }
    return out;
}

Bytes serialize_envelopes(const std::vector<RawBlockEnvelope>& envelopes, const NetworkMagic& magic) {
    ByteWriter w;
    for (const RawBlockEnvelope& env : envelopes) {
        ByteWriter payload;
        env.header.serialize(payload);
        write_varint(payload, env.txs.size());
        for (const WireTx& tx : env.txs) tx.serialize_stripped(payload);
        w.bytes(magic);
        w.u32(static_cast<uint32_t>(payload.size()));
        w.bytes(payload.data());
    }
    return w.take();
}

ChainStore assemble_chain(const std::vector<RawBlockEnvelope>& envelopes, const NetworkMagic& magic,
                          std::optional<uint64_t> height_limit) {
    // first-seen dedup by block hash
    std::vector<const RawBlockEnvelope*> blocks;
    std::vector<Hash32> hashes;
    std::unordered_map<Hash32, size_t, Hash32Hasher> by_hash;
    for (const RawBlockEnvelope& env : envelopes) {
        Hash32 h = env.block_hash();
        if (by_hash.emplace(h, blocks.size()).second) {
            blocks.push_back(&env);
            hashes.push_back(h);
        }
    }

    // height of each block via prev-hash chaining; headers that do not chain
    // back to a zero-prev genesis stay orphans (height -1)
    constexpr int64_t kUnknown = -2, kOrphan = -1;
    std::vector<int64_t> height(blocks.size(), kUnknown);
    auto resolve_height = [&](size_t start) {
        std::vector<size_t> trail;
        size_t cur = start;
        int64_t parent_height = -1; // height beneath the deepest trail node
        bool orphaned = false;
        while (true) {
            if (height[cur] != kUnknown) {
                if (height[cur] >= 0)
                    parent_height = height[cur];
                else
                    orphaned = true; // chained onto an already-orphaned block
                break;
            }
            trail.push_back(cur);
            if (blocks[cur]->header.prev_block_hash.is_zero()) break; // genesis: heights from 0
            auto it = by_hash.find(blocks[cur]->header.prev_block_hash);
            if (it == by_hash.end()) {
                orphaned = true; // dangling parent severs the whole trail
                break;
            }
            cur = it->second;
        }
        for (auto rit = trail.rbegin(); rit != trail.rend(); ++rit)
            height[*rit] = orphaned ? kOrphan : ++parent_height;
    };
    for (size_t i = 0; i < blocks.size(); ++i) resolve_height(i);

    // best tip: max height, first-seen wins ties; walk back to genesis
    std::optional<size_t> tip;
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (height[i] < 0) continue;
        if (!tip || height[i] > height[*tip]) tip = i;
    }

    std::vector<size_t> main_chain;
    if (tip) {
        size_t cur = *tip;
        while (true) {
            main_chain.push_back(cur);
            if (blocks[cur]->header.prev_block_hash.is_zero()) break;
            cur = by_hash.at(blocks[cur]->header.prev_block_hash);
        }
        std::reverse(main_chain.begin(), main_chain.end());
    }
    if (height_limit) {
        uint64_t keep = std::min<uint64_t>(main_chain.size(), *height_limit + 1);
        main_chain.resize(keep);
    }

    ChainStore store;
    store.network_magic_hex = magic_to_hex(magic);
    store.script_offsets.push_back(0);

    for (size_t idx = 0; idx < main_chain.size(); ++idx) {
        const RawBlockEnvelope& env = *blocks[main_chain[idx]];
        BlockRow b;
        b.height = idx;
        b.hash = hashes[main_chain[idx]];
        b.version = env.header.version;
        b.prev_block_hash = env.header.prev_block_hash;
        b.merkle_root = env.header.merkle_root;
        b.time = env.header.time;
        b.bits = env.header.bits;
        b.nonce = env.header.nonce;
        b.first_tx = store.txs.size();
        b.tx_count = env.txs.size();

        for (uint32_t t = 0; t < env.txs.size(); ++t) {
            const WireTx& wtx = env.txs[t];
            TxRow tx;
            tx.hash = wtx.txid;
            tx.block_id = store.blocks.size();
            tx.index_in_block = t;
            tx.size_bytes = wtx.stripped_size;
            tx.timestamp = static_cast<int64_t>(env.header.time);
            tx.is_coinbase = wtx.is_coinbase() ? 1 : 0;
            tx.first_input = store.inputs.size();
            tx.input_count = wtx.inputs.size();
            tx.first_output = store.outputs.size();
            tx.output_count = wtx.outputs.size();

            for (const WireInput& win : wtx.inputs) {
                InputRow in;
                in.tx_id = store.txs.size();
                in.prev_tx_hash = win.prev_tx_hash;
                in.prev_vout = win.prev_vout;
                store.inputs.push_back(in);
            }
            for (const WireOutput& wout : wtx.outputs) {
                OutputRow out;
                out.tx_id = store.txs.size();
                out.value = wout.value;
                out.script_class = classify_script(wout.script);
                store.script_blob.insert(store.script_blob.end(), wout.script.begin(), wout.script.end());
                store.script_offsets.push_back(store.script_blob.size());
                store.outputs.push_back(out);
            }
            store.txs.push_back(tx);
        }
        store.blocks.push_back(b);
    }
    return store;
}

// --- fixture format ---------------------------------------------------------

std::vector<FixtureBlock> parse_fixture(std::istream& lines) {
    std::vector<FixtureBlock> blocks;
    std::string line;
    size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        raise(Errc::SchemaError, "fixture line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail("not a JSON object");

        FixtureBlock block;
        if (!j.contains("height") || !j["height"].is_number_unsigned()) fail("missing numeric 'height'");
        if (!j.contains("time") || !j["time"].is_number_unsigned()) fail("missing numeric 'time'");
        block.height = j["height"].get<uint64_t>();
        uint64_t time = j["time"].get<uint64_t>();
        if (time > 0xffffffffull) fail("'time' does not fit a 32-bit header field");
        block.time = static_cast<uint32_t>(time);
        if (!j.contains("txs") || !j["txs"].is_array()) fail("missing 'txs' array");

        for (size_t t = 0; t < j["txs"].size(); ++t) {
            const json& jt = j["txs"][t];
            if (!jt.is_object() || !jt.contains("ins") || !jt.contains("outs")) fail("tx needs 'ins' and 'outs'");
            FixtureTx tx;
            for (const json& ji : jt["ins"]) {
                if (!ji.is_array() || ji.size() != 2 || !ji[0].is_string() || !ji[1].is_number_unsigned())
                    fail("input must be [\"txid-hex\", vout]");
                Hash32 prev;
                try {
                    prev = Hash32::from_hex(ji[0].get<std::string>());
                } catch (const Error&) {
                    fail("input txid is not 64 hex digits");
                }
                tx.ins.emplace_back(prev, ji[1].get<uint32_t>());
            }
            for (const json& jo : jt["outs"]) {
                if (!jo.is_array() || jo.size() != 2 || !jo[0].is_number_unsigned() || !jo[1].is_string())
                    fail("output must be [value-satoshis, \"script-hex\"]");
                Bytes script;
                try {
                    script = hex_decode(jo[1].get<std::string>());
                } catch (const Error&) {
                    fail("output script is not valid hex");
                }
                tx.outs.emplace_back(jo[0].get<uint64_t>(), std::move(script));
            }
            if (tx.ins.empty() && t != 0) fail("coinbase (empty 'ins') only allowed as first tx");
            if (t == 0 && !tx.ins.empty()) fail("first tx of a block must be the coinbase (empty 'ins')");
            block.txs.push_back(std::move(tx));
        }
        if (block.txs.empty()) fail("block without transactions");
        if (blocks.empty()) {
            if (block.height != 0) fail("fixture must start at height 0");
        } else if (block.height != blocks.back().height + 1) {
            fail("heights must be contiguous ascending");
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

namespace {

// minimal CScriptNum encoding of a block height, used as the coinbase script
Bytes height_push(uint64_t height) {
    Bytes num;
    uint64_t v = height;
    while (v > 0) {
        num.push_back(static_cast<uint8_t>(v & 0xff));
        v >>= 8;
    }
    if (!num.empty() && (num.back() & 0x80)) num.push_back(0x00);
    Bytes script;
    script.push_back(static_cast<uint8_t>(num.size()));
    script.insert(script.end(), num.begin(), num.end());
    return script;
}

} // namespace

WireTx lower_fixture_tx(const FixtureTx& ft, uint64_t block_height) {
    WireTx tx;
    tx.version = 1;
    tx.lock_time = 0;
    if (ft.ins.empty()) {
        WireInput in;
        in.prev_tx_hash = Hash32{};
        in.prev_vout = 0xffffffff;
        in.script_sig = height_push(block_height);
        in.sequence = 0xffffffff;
        tx.inputs.push_back(std::move(in));
    } else {
        for (const auto& [prev, vout] : ft.ins) {
            WireInput in;
            in.prev_tx_hash = prev;
            in.prev_vout = vout;
            in.sequence = 0xffffffff;
            tx.inputs.push_back(std::move(in));
        }
    }
    for (const auto& [value, script] : ft.outs) {
        WireOutput out;
        out.value = value;
        out.script = script;
        tx.outputs.push_back(std::move(out));
    }
    ByteWriter stripped;
    tx.serialize_stripped(stripped);
    tx.stripped_size = static_cast<uint32_t>(stripped.size());
    tx.txid = double_sha256(stripped.data());
    return tx;
}

std::vector<RawBlockEnvelope> lower_fixture(const std::vector<FixtureBlock>& blocks) {
    std::vector<RawBlockEnvelope> envelopes;
    Hash32 prev_hash; // zero for the first block
    for (const FixtureBlock& fb : blocks) {
        RawBlockEnvelope env;
        std::vector<Hash32> txids;
        for (const FixtureTx& ft : fb.txs) {
            WireTx tx = lower_fixture_tx(ft, fb.height);
            txids.push_back(tx.txid);
            env.txs.push_back(std::move(tx));
        }
        env.header.version = 1;
        env.header.prev_block_hash = prev_hash;
        env.header.merkle_root = merkle_root(txids);
        env.header.time = fb.time;
        env.header.bits = 0x207fffff;
        env.header.nonce = 0;
        prev_hash = env.header.hash();
        envelopes.push_back(std::move(env));
    }
    return envelopes;
}

Bytes fixture_to_raw(const std::vector<FixtureBlock>& blocks, const NetworkMagic& magic) {
    return serialize_envelopes(lower_fixture(blocks), magic);
}

ChainStore ingest_fixture(std::istream& lines, const NetworkMagic& magic,
                          std::optional<uint64_t> height_limit) {
    std::vector<FixtureBlock> fixture = parse_fixture(lines);
    ChainStore store = assemble_chain(lower_fixture(fixture), magic, height_limit);
    build_indexes(store);
    link_spends(store);
    return store;
}

// --- driver -----------------------------------------------------------------

namespace {

std::string file_sha256(const fs::path& path) {
    Bytes data = read_file(path);
    return hex_encode(sha256(data));
}

std::string signature_of(const std::vector<std::string>& content_hashes, const IngestOptions& opts,
                         const char* mode) {
    std::string acc = std::string(mode) + "|" + magic_to_hex(opts.magic) + "|" +
                      (opts.height_limit ? std::to_string(*opts.height_limit) : "none");
    for (const std::string& h : content_hashes) acc += "|" + h;
    return hex_encode(sha256(ByteSpan(reinterpret_cast<const uint8_t*>(acc.data()), acc.size())));
}

bool store_up_to_date(const fs::path& data_dir, const std::string& signature) {
    if (!store_exists(data_dir)) return false;
    Bytes m = read_file(data_dir / "manifest.json");
    json manifest = json::parse(m.begin(), m.end(), nullptr, false);
    if (manifest.is_discarded()) return false;
    return manifest.value("input_signature", "") == signature &&
           manifest.value("format_version", 0u) == kStoreFormatVersion;
}

IngestResult finish_ingest(ChainStore&& store, const std::string& signature, const fs::path& data_dir) {
    store.input_signature = signature;
    build_indexes(store);
    link_spends(store);
    save_store(store, data_dir);
    IngestResult res;
    res.blocks = store.blocks.size();
    res.txs = store.txs.size();
    res.outputs = store.outputs.size();
    res.inputs = store.inputs.size();
    res.addresses = store.addresses.size();
    res.spend_links = store.spend_link_count();
    return res;
}

} // namespace

IngestResult ingest_block_files(const std::vector<fs::path>& files, const IngestOptions& opts) {
    std::vector<std::string> content_hashes;
    content_hashes.reserve(files.size());
    for (const fs::path& f : files) content_hashes.push_back(file_sha256(f));
    std::string signature = signature_of(content_hashes, opts, "raw");
    if (store_up_to_date(opts.data_dir, signature)) return IngestResult{.up_to_date = true};

    fs::path staging = opts.data_dir / "staging";
    fs::create_directories(staging);

    // parse phase: one worker per file, finished segments are reused
    std::vector<std::vector<RawBlockEnvelope>> per_file(files.size());
    std::vector<std::exception_ptr> errors(files.size());
    std::atomic<size_t> next{0};
    auto parse_worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= files.size()) return;
            try {
                fs::path seg = staging / (content_hashes[i] + ".seg");
                if (fs::exists(seg)) {
                    per_file[i] = parse_block_file(read_file(seg), opts.magic);
                } else {
                    per_file[i] = parse_block_file(read_file(files[i]), opts.magic);
                    write_file_atomic(seg, serialize_envelopes(per_file[i], opts.magic));
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned workers = std::max(1u, std::min<unsigned>(opts.workers, files.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(parse_worker);
    for (std::thread& t : pool) t.join();
    for (std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<RawBlockEnvelope> all;
    for (std::vector<RawBlockEnvelope>& part : per_file) {
        std::move(part.begin(), part.end(), std::back_inserter(all));
        part.clear();
    }
    ChainStore store = assemble_chain(all, opts.magic, opts.height_limit);
    return finish_ingest(std::move(store), signature, opts.data_dir);
}

IngestResult ingest_fixture_file(const fs::path& jsonl, const IngestOptions& opts) {
    std::string signature = signature_of({file_sha256(jsonl)}, opts, "fixture");
    if (store_up_to_date(opts.data_dir, signature)) return IngestResult{.up_to_date = true};

    std::ifstream in(jsonl);
    if (!in) raise(Errc::IoError, "cannot open " + jsonl.string());
    std::vector<FixtureBlock> fixture = parse_fixture(in);
    ChainStore store = assemble_chain(lower_fixture(fixture), opts.magic, opts.height_limit);
    fs::create_directories(opts.data_dir);
    return finish_ingest(std::move(store), signature, opts.data_dir);
}

StoreLock::StoreLock(const fs::path& data_dir) : path_(data_dir / ".lock") {
    fs::create_directories(data_dir);
    // O_EXCL-style create; a surviving lock from a crashed run must be removed by hand
    std::error_code ec;
    if (fs::exists(path_))
        raise(Errc::LockHeld, "write lock held on " + data_dir.string() + " (stale? remove " +
                                  path_.string() + ")");
    std::ofstream out(path_);
    if (!out) raise(Errc::IoError, "cannot create lock file " + path_.string());
    out << "pid " << ::getpid() << "\n";
}

StoreLock::~StoreLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

} // namespace chainlens
