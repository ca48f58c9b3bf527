#pragma once

#include <cstdint>
#include <vector>

#include "chainlens/bytes.hpp"
#include "chainlens/crypto.hpp"

namespace chainlens {

// Consensus wire encoding: little-endian integers, 0xFD/0xFE/0xFF-escaped
// variable-length counts, 80-byte headers, double-SHA256 hashing.

uint64_t read_varint(ByteReader& r);
void write_varint(ByteWriter& w, uint64_t value);

struct BlockHeader {
    int32_t version = 0;
    Hash32 prev_block_hash;
    Hash32 merkle_root;
    uint32_t time = 0;
    uint32_t bits = 0;
    uint32_t nonce = 0;

    static constexpr size_t kSerializedSize = 80;

    static BlockHeader parse(ByteReader& r);
    void serialize(ByteWriter& w) const;
    Hash32 hash() const; // double-SHA256 of the 80-byte serialization
};

// A transaction as read off the wire, before ID remapping.
struct WireInput {
    Hash32 prev_tx_hash;
    uint32_t prev_vout = 0; // 0xffffffff for coinbase
    Bytes script_sig;
    uint32_t sequence = 0;

    bool is_coinbase_slot() const { return prev_tx_hash.is_zero() && prev_vout == 0xffffffff; }
};

struct WireOutput {
    uint64_t value = 0;
    Bytes script;
};

struct WireTx {
    int32_t version = 0;
    std::vector<WireInput> inputs;
    std::vector<WireOutput> outputs;
    uint32_t lock_time = 0;
    bool has_witness = false;
    uint32_t stripped_size = 0; // witness-stripped serialized size in bytes
    Hash32 txid;

    bool is_coinbase() const { return inputs.size() == 1 && inputs[0].is_coinbase_slot(); }

    // Parses one transaction, including the segwit marker/flag form; witness
    // data is consumed and skipped, txid covers the stripped serialization.
    static WireTx parse(ByteReader& r);
    // Serializes the stripped (txid-defining) form.
    void serialize_stripped(ByteWriter& w) const;
};

// Double-SHA256 of the witness-stripped serialization. The byte string must
// parse as exactly one transaction; anything else is MalformedTransaction.
Hash32 compute_txid(ByteSpan raw_tx);

// Root of the pairwise double-SHA256 tree, odd levels duplicating their tail.
Hash32 merkle_root(const std::vector<Hash32>& txids);

} // namespace chainlens
