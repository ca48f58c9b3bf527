#include "chainlens/chain.hpp"

namespace chainlens {

uint64_t read_varint(ByteReader& r) {
    uint8_t tag = r.u8();
    if (tag < 0xfd) return tag;
    if (tag == 0xfd) return r.u16();
    if (tag == 0xfe) return r.u32();
    return r.u64();
}

void write_varint(ByteWriter& w, uint64_t value) {
    if (value < 0xfd) {
        w.u8(static_cast<uint8_t>(value));
    } else if (value <= 0xffff) {
        w.u8(0xfd);
        w.u16(static_cast<uint16_t>(value));
    } else if (value <= 0xffffffff) {
        w.u8(0xfe);
        w.u32(static_cast<uint32_t>(value));
    } else {
        w.u8(0xff);
        w.u64(value);
    }
}

BlockHeader BlockHeader::parse(ByteReader& r) {
    BlockHeader h;
    h.version = r.i32();
    std::copy_n(r.take(32).begin(), 32, h.prev_block_hash.bytes.begin());
    std::copy_n(r.take(32).begin(), 32, h.merkle_root.bytes.begin());
    h.time = r.u32();
    h.bits = r.u32();
    h.nonce = r.u32();
    return h;
}

void BlockHeader::serialize(ByteWriter& w) const {
    w.i32(version);
    w.bytes(prev_block_hash.bytes);
    w.bytes(merkle_root.bytes);
    w.u32(time);
    w.u32(bits);
    w.u32(nonce);
}

Hash32 BlockHeader::hash() const {
    ByteWriter w;
    serialize(w);
    return double_sha256(w.data());
}

WireTx WireTx::parse(ByteReader& r) {
    WireTx tx;
    size_t start = r.pos();
    tx.version = r.i32();

    uint64_t in_count = read_varint(r);
    if (in_count == 0 && r.remaining() > 0) {
        // segwit marker 0x00 followed by flag 0x01
        uint8_t flag = r.u8();
        if (flag != 0x01) raise(Errc::MalformedTransaction, "bad segwit flag");
        tx.has_witness = true;
        in_count = read_varint(r);
    }
    if (in_count == 0) raise(Errc::MalformedTransaction, "transaction with zero inputs");
    // an input takes at least 41 bytes; reject counts the buffer cannot hold
    if (in_count > r.remaining() / 41 + 1)
        raise(Errc::MalformedTransaction, "implausible input count " + std::to_string(in_count));

    tx.inputs.reserve(in_count);
    for (uint64_t i = 0; i < in_count; ++i) {
        WireInput in;
        std::copy_n(r.take(32).begin(), 32, in.prev_tx_hash.bytes.begin());
        in.prev_vout = r.u32();
        uint64_t script_len = read_varint(r);
        ByteSpan s = r.take(script_len);
        in.script_sig.assign(s.begin(), s.end());
        in.sequence = r.u32();
        tx.inputs.push_back(std::move(in));
    }

    uint64_t out_count = read_varint(r);
    if (out_count > r.remaining() / 9 + 1)
        raise(Errc::MalformedTransaction, "implausible output count " + std::to_string(out_count));
    tx.outputs.reserve(out_count);
    for (uint64_t i = 0; i < out_count; ++i) {
        WireOutput out;
        out.value = r.u64();
        uint64_t script_len = read_varint(r);
        ByteSpan s = r.take(script_len);
        out.script.assign(s.begin(), s.end());
        tx.outputs.push_back(std::move(out));
    }

    if (tx.has_witness) {
        for (uint64_t i = 0; i < in_count; ++i) {
            uint64_t items = read_varint(r);
            for (uint64_t j = 0; j < items; ++j) r.skip(read_varint(r));
        }
    }

    tx.lock_time = r.u32();

    ByteWriter stripped;
    tx.serialize_stripped(stripped);
    tx.stripped_size = static_cast<uint32_t>(stripped.size());
    tx.txid = double_sha256(stripped.data());
    (void)start;
    return tx;
}

void WireTx::serialize_stripped(ByteWriter& w) const {
    w.i32(version);
    write_varint(w, inputs.size());
    for (const WireInput& in : inputs) {
        w.bytes(in.prev_tx_hash.bytes);
        w.u32(in.prev_vout);
        write_varint(w, in.script_sig.size());
        w.bytes(in.script_sig);
        w.u32(in.sequence);
    }
    write_varint(w, outputs.size());
    for (const WireOutput& out : outputs) {
        w.u64(out.value);
        write_varint(w, out.script.size());
        w.bytes(out.script);
    }
    w.u32(lock_time);
}

Hash32 compute_txid(ByteSpan raw_tx) {
    ByteReader r(raw_tx, Errc::MalformedTransaction);
    WireTx tx = WireTx::parse(r);
    if (!r.empty()) raise(Errc::MalformedTransaction, "trailing bytes after transaction");
    return tx.txid;
}

Hash32 merkle_root(const std::vector<Hash32>& txids) {
    if (txids.empty()) return Hash32{};
    std::vector<Hash32> level = txids;
    while (level.size() > 1) {
        std::vector<Hash32> next;
        next.reserve((level.size() + 1) / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            const Hash32& a = level[i];
            const Hash32& b = (i + 1 < level.size()) ? level[i + 1] : level[i];
            uint8_t buf[64];
            std::memcpy(buf, a.bytes.data(), 32);
            std::memcpy(buf + 32, b.bytes.data(), 32);
            next.push_back(double_sha256(ByteSpan(buf, 64)));
        }
        level = std::move(next);
    }
    return level[0];
}

} // namespace chainlens
