#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <optional>

#include "chainlens/store.hpp"

namespace chainlens {

using NetworkMagic = std::array<uint8_t, 4>;
constexpr NetworkMagic kMainnetMagic = {0xf9, 0xbe, 0xb4, 0xd9};

NetworkMagic magic_from_hex(std::string_view hex); // SchemaError unless 8 hex digits
std::string magic_to_hex(const NetworkMagic& magic);

// One magic-prefixed block as it sits in a blk*.dat file.
struct RawBlockEnvelope {
    BlockHeader header;
    uint32_t payload_size = 0;
    std::vector<WireTx> txs;

    Hash32 block_hash() const { return header.hash(); }
};

// Scans a concatenation of envelopes, tolerating trailing zero padding.
// BadMagic on a desynchronized stream, TruncatedBlock when a payload runs
// past the end. Stale-block handling happens later, in assemble_chain.
std::vector<RawBlockEnvelope> parse_block_file(ByteSpan stream, const NetworkMagic& magic);

// Canonical re-serialization (witness-stripped) of envelopes, valid as input
// to parse_block_file.
Bytes serialize_envelopes(const std::vector<RawBlockEnvelope>& envelopes, const NetworkMagic& magic);

// Envelopes in first-seen order -> ChainStore holding only the main chain:
// longest chain from a zero-prev genesis, ties broken by first-seen; orphan
// and stale blocks are dropped. Indexing/linking are separate phases.
ChainStore assemble_chain(const std::vector<RawBlockEnvelope>& envelopes, const NetworkMagic& magic,
                          std::optional<uint64_t> height_limit);

// --- fixture format ---------------------------------------------------------

// One JSON object per line; schema frozen in docs/fixture-format.md:
//   {"height":0,"time":1231006505,"txs":[{"ins":[["<txid-hex>",0]],"outs":[[5000000000,"<script-hex>"]]}]}
struct FixtureTx {
    std::vector<std::pair<Hash32, uint32_t>> ins; // empty = coinbase
    std::vector<std::pair<uint64_t, Bytes>> outs;
};

struct FixtureBlock {
    uint64_t height = 0;
    uint32_t time = 0;
    std::vector<FixtureTx> txs;
};

std::vector<FixtureBlock> parse_fixture(std::istream& lines);

// Deterministic lowering of fixture blocks to wire envelopes: v1 txs with
// empty input scripts, coinbase script = height push, headers chained with
// computed merkle roots. Raw and fixture ingestion meet here, which is what
// makes the two paths produce identical stores.
std::vector<RawBlockEnvelope> lower_fixture(const std::vector<FixtureBlock>& blocks);

// Lowering of one fixture transaction (txid filled in); the block height
// feeds the coinbase script.
WireTx lower_fixture_tx(const FixtureTx& tx, uint64_t block_height);

Bytes fixture_to_raw(const std::vector<FixtureBlock>& blocks, const NetworkMagic& magic);

// Parse + lower + assemble + index + link, all in memory.
ChainStore ingest_fixture(std::istream& lines, const NetworkMagic& magic = kMainnetMagic,
                          std::optional<uint64_t> height_limit = std::nullopt);

// --- driver -----------------------------------------------------------------

struct IngestOptions {
    std::filesystem::path data_dir;
    NetworkMagic magic = kMainnetMagic;
    std::optional<uint64_t> height_limit;
    unsigned workers = 1;
};

struct IngestResult {
    bool up_to_date = false; // input signature matched an existing store; nothing done
    uint64_t blocks = 0, txs = 0, outputs = 0, inputs = 0, addresses = 0, spend_links = 0;
};

// Full pipeline against a data directory. Parsing is staged per input file
// (data_dir/staging/<sha256>.seg); a rerun reuses finished segments, so a
// crash costs only the unfinished file. Re-ingesting unchanged inputs into a
// finished store is a no-op.
IngestResult ingest_block_files(const std::vector<std::filesystem::path>& files, const IngestOptions& opts);
IngestResult ingest_fixture_file(const std::filesystem::path& jsonl, const IngestOptions& opts);

// Exclusive write lock on a data directory (lock file, RAII release).
class StoreLock {
public:
    explicit StoreLock(const std::filesystem::path& data_dir);
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    std::filesystem::path path_;
};

} // namespace chainlens
