#!/usr/bin/env python3
"""Regenerates the committed golden files under tests/data/.

Everything here is computed with Python's hashlib (plus a self-checked
pure-python RIPEMD-160), independently of the C++ code, so the outputs are
usable as an external reference: block hashes, txids and table counts come
from this script, never from the library being tested.

Run from the repository root:  python3 scripts/make_golden.py
"""

import hashlib
import json
import struct
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

MAGIC = bytes.fromhex("f9beb4d9")
COIN = 100_000_000


def dsha(b: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(b).digest()).digest()


# --- pure-python RIPEMD-160 (verified against the published vectors below) ---

def _rol(x, n):
    return ((x << n) | (x >> (32 - n))) & 0xFFFFFFFF


_RL = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
       7, 4, 13, 1, 10, 6, 15, 3, 12, 0, 9, 5, 2, 14, 11, 8,
       3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12,
       1, 9, 11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2,
       4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3, 8, 11, 6, 15, 13]
_RR = [5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12,
       6, 11, 3, 7, 0, 13, 5, 10, 14, 15, 8, 12, 4, 9, 1, 2,
       15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13,
       8, 6, 4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14,
       12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13, 14, 0, 3, 9, 11]
_SL = [11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8,
       7, 6, 8, 13, 11, 9, 7, 15, 7, 12, 15, 9, 11, 7, 13, 12,
       11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5,
       11, 12, 14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12,
       9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13, 14, 11, 8, 5, 6]
_SR = [8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6,
       9, 13, 15, 7, 12, 8, 9, 11, 7, 7, 12, 7, 6, 15, 13, 11,
       9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5,
       15, 5, 8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8,
       8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6, 5, 15, 13, 11, 11]
_KL = [0x00000000, 0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xA953FD4E]
_KR = [0x50A28BE6, 0x5C4DD124, 0x6D703EF3, 0x7A6D76E9, 0x00000000]


def _f(j, x, y, z):
    if j < 16:
        return x ^ y ^ z
    if j < 32:
        return (x & y) | (~x & z)
    if j < 48:
        return (x | ~y) ^ z
    if j < 64:
        return (x & z) | (y & ~z)
    return x ^ (y | ~z)


def ripemd160(data: bytes) -> bytes:
    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    msg = bytearray(data)
    bitlen = len(data) * 8
    msg.append(0x80)
    while len(msg) % 64 != 56:
        msg.append(0)
    msg += struct.pack("<Q", bitlen)
    for off in range(0, len(msg), 64):
        x = list(struct.unpack("<16I", msg[off:off + 64]))
        al, bl, cl, dl, el = h
        ar, br, cr, dr, er = h
        for j in range(80):
            t = (_rol((al + _f(j, bl, cl, dl) + x[_RL[j]] + _KL[j // 16]) & 0xFFFFFFFF, _SL[j]) + el) & 0xFFFFFFFF
            al, el, dl, cl, bl = el, dl, _rol(cl, 10), bl, t
            t = (_rol((ar + _f(79 - j, br, cr, dr) + x[_RR[j]] + _KR[j // 16]) & 0xFFFFFFFF, _SR[j]) + er) & 0xFFFFFFFF
            ar, er, dr, cr, br = er, dr, _rol(cr, 10), br, t
        h = [(h[1] + cl + dr) & 0xFFFFFFFF,
             (h[2] + dl + er) & 0xFFFFFFFF,
             (h[3] + el + ar) & 0xFFFFFFFF,
             (h[4] + al + br) & 0xFFFFFFFF,
             (h[0] + bl + cr) & 0xFFFFFFFF]
    return struct.pack("<5I", *h)


assert ripemd160(b"").hex() == "9c1185a5c5e9fc54612808977ee8f548b2258d31"
assert ripemd160(b"abc").hex() == "8eb208f7e05d987a9b044a8e98c6b087f15a0bfc"


def hash160(b: bytes) -> bytes:
    return ripemd160(hashlib.sha256(b).digest())


# --- wire encoding ------------------------------------------------------------

def varint(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + struct.pack("<H", n)
    if n <= 0xFFFFFFFF:
        return b"\xfe" + struct.pack("<I", n)
    return b"\xff" + struct.pack("<Q", n)


def height_push(height: int) -> bytes:
    num = b""
    v = height
    while v > 0:
        num += bytes([v & 0xFF])
        v >>= 8
    if num and num[-1] & 0x80:
        num += b"\x00"
    return bytes([len(num)]) + num


class Tx:
    def __init__(self, ins, outs, coinbase_height=None):
        # ins: list of (txid_bytes_internal, vout); outs: list of (value, script)
        self.ins = ins
        self.outs = outs
        self.coinbase_height = coinbase_height

    def serialize(self) -> bytes:
        b = struct.pack("<i", 1)
        if self.coinbase_height is not None:
            script = height_push(self.coinbase_height)
            b += varint(1)
            b += b"\x00" * 32 + struct.pack("<I", 0xFFFFFFFF)
            b += varint(len(script)) + script
            b += struct.pack("<I", 0xFFFFFFFF)
        else:
            b += varint(len(self.ins))
            for txid, vout in self.ins:
                b += txid + struct.pack("<I", vout)
                b += varint(0)
                b += struct.pack("<I", 0xFFFFFFFF)
        b += varint(len(self.outs))
        for value, script in self.outs:
            b += struct.pack("<Q", value) + varint(len(script)) + script
        b += struct.pack("<I", 0)
        return b

    def txid(self) -> bytes:
        return dsha(self.serialize())


def merkle(txids):
    level = list(txids)
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level), 2):
            a = level[i]
            b = level[i + 1] if i + 1 < len(level) else level[i]
            nxt.append(dsha(a + b))
        level = nxt
    return level[0]


class Block:
    def __init__(self, height, time, prev_hash, txs):
        self.height, self.time, self.prev_hash, self.txs = height, time, prev_hash, txs

    def header(self) -> bytes:
        return (struct.pack("<i", 1) + self.prev_hash + merkle([t.txid() for t in self.txs]) +
                struct.pack("<III", self.time, 0x207FFFFF, 0))

    def hash(self) -> bytes:
        return dsha(self.header())

    def serialize(self) -> bytes:
        body = self.header() + varint(len(self.txs)) + b"".join(t.serialize() for t in self.txs)
        return MAGIC + struct.pack("<I", len(body)) + body


# --- script helpers --------------------------------------------------------------

def payload(n: int) -> bytes:
    return bytes((n >> ((i % 8) * 8)) & 0xFF ^ (0x11 * i) & 0xFF for i in range(20))


def p2pkh(n: int) -> bytes:
    return b"\x76\xa9\x14" + payload(n) + b"\x88\xac"


def p2sh(n: int) -> bytes:
    return b"\xa9\x14" + payload(n) + b"\x87"


def fake_pubkey(n: int) -> bytes:
    return b"\x02" + bytes((n * 7 + i) & 0xFF for i in range(32))


def p2pk(n: int) -> bytes:
    key = fake_pubkey(n)
    return bytes([len(key)]) + key + b"\xac"


def multisig_1of2(n: int) -> bytes:
    k1, k2 = fake_pubkey(n), fake_pubkey(n + 1)
    return b"\x51" + bytes([len(k1)]) + k1 + bytes([len(k2)]) + k2 + b"\x52\xae"


def op_return(data: bytes) -> bytes:
    return b"\x6a" + bytes([len(data)]) + data


# --- genesis envelope -------------------------------------------------------------

GENESIS_HEX = (
    "0100000000000000000000000000000000000000000000000000000000000000"
    "000000003ba3edfd7a7b12b27ac72c3e67768f617fc81bc3888a51323a9fb8aa"
    "4b1e5e4a29ab5f49ffff001d1dac2b7c01010000000100000000000000000000"
    "00000000000000000000000000000000000000000000ffffffff4d04ffff001d"
    "0104455468652054696d65732030332f4a616e2f32303039204368616e63656c"
    "6c6f72206f6e206272696e6b206f66207365636f6e64206261696c6f75742066"
    "6f722062616e6b73ffffffff0100f2052a01000000434104678afdb0fe554827"
    "1967f1a67130b7105cd6a828e03909a67962e0ea1f61deb649f6bc3f4cef38c4"
    "f35504e51ec112de5c384df7ba0b8d578a4c702b6bf11d5fac00000000")


def write_genesis():
    body = bytes.fromhex(GENESIS_HEX)
    assert dsha(body[:80])[::-1].hex() == "000000000019d6689c085ae165831e934ff763ae46a2a6c172b3f1b60a8ce26f"
    (OUT / "genesis.dat").write_bytes(MAGIC + struct.pack("<I", len(body)) + body)


# --- the 10-block golden chain -----------------------------------------------------

def build_golden_chain():
    t0 = 1_390_000_000  # 2014-01-17 UTC
    blocks = []
    prev = b"\x00" * 32

    def add_block(height, extra_txs):
        nonlocal prev
        cb = Tx([], [(50 * COIN, p2pkh(1000 + height))], coinbase_height=height)
        blk = Block(height, t0 + 600 * height, prev, [cb] + extra_txs)
        blocks.append(blk)
        prev = blk.hash()
        return blk

    b0 = add_block(0, [])
    b1 = add_block(1, [])

    t2 = Tx([(b0.txs[0].txid(), 0)], [(20 * COIN, p2pkh(1)), (2_999_990_000, p2pkh(1000))])
    b2 = add_block(2, [t2])

    t3 = Tx([(b1.txs[0].txid(), 0)], [(10 * COIN, p2sh(2)), (3_999_900_000, p2pkh(3))])
    b3 = add_block(3, [t3])

    t4 = Tx([(t2.txid(), 0)], [(5 * COIN, p2pk(4)), (1_499_990_000, p2pkh(5))])
    b4 = add_block(4, [t4])

    t5 = Tx([(t3.txid(), 1), (t4.txid(), 1)], [(30 * COIN, multisig_1of2(6)), (2_490_000_000, p2pkh(7))])
    b5 = add_block(5, [t5])

    t6 = Tx([(t5.txid(), 1)], [(0, op_return(b"chainlens")), (2_480_000_000, p2pkh(8))])
    b6 = add_block(6, [t6])

    add_block(7, [])

    t8 = Tx([(t6.txid(), 1)], [(12 * COIN, p2pkh(9)), (1_270_000_000, p2pkh(10))])
    b8 = add_block(8, [t8])

    t9 = Tx([(t8.txid(), 0), (t8.txid(), 1)], [(2_450_000_000, p2pkh(11))])
    add_block(9, [t9])

    return blocks


def fixture_json(blocks):
    lines = []
    for blk in blocks:
        txs = []
        for tx in blk.txs:
            ins = [] if tx.coinbase_height is not None else [
                [txid[::-1].hex(), vout] for txid, vout in tx.ins]
            outs = [[value, script.hex()] for value, script in tx.outs]
            txs.append({"ins": ins, "outs": outs})
        lines.append(json.dumps({"height": blk.height, "time": blk.time, "txs": txs},
                                separators=(",", ":")))
    return "\n".join(lines) + "\n"


def expected_json(blocks):
    # independent model of what the store should contain
    addresses = {}

    def note_address(script: bytes):
        if script[:3] == b"\x76\xa9\x14" and script[23:] == b"\x88\xac" and len(script) == 25:
            key = ("pubkeyhash", script[3:23].hex())
        elif script[:2] == b"\xa9\x14" and script[22:] == b"\x87" and len(script) == 23:
            key = ("scripthash", script[2:22].hex())
        elif len(script) in (35, 67) and script[-1] == 0xAC and script[0] in (33, 65):
            key = ("pubkeyhash", hash160(script[1:1 + script[0]]).hex())
        elif script[-1] == 0xAE and 0x51 <= script[0] <= 0x60:
            key = ("multisig", hash160(script).hex())
        else:
            return
        addresses.setdefault(key, len(addresses))

    n_txs = n_ins = n_outs = n_links = 0
    per_block = []
    for blk in blocks:
        txids = []
        for tx in blk.txs:
            txids.append(tx.txid()[::-1].hex())
            n_txs += 1
            n_ins += max(len(tx.ins), 1)
            n_outs += len(tx.outs)
            n_links += len(tx.ins)
            for _, script in tx.outs:
                note_address(script)
        per_block.append({"height": blk.height, "hash": blk.hash()[::-1].hex(), "txids": txids})
    return {
        "blocks": per_block,
        "counts": {"blocks": len(blocks), "transactions": n_txs, "inputs": n_ins,
                   "outputs": n_outs, "spend_links": n_links, "addresses": len(addresses)},
    }


# --- Fig. 3 scenario fixture ---------------------------------------------------------

def build_fig3():
    t0 = 1_389_000_000
    blocks = []
    prev = b"\x00" * 32

    def add_block(height, extra):
        nonlocal prev
        cb = Tx([], [(50 * COIN, p2pkh(9000 + height))], coinbase_height=height)
        blk = Block(height, t0 + 600 * height, prev, [cb] + extra)
        blocks.append(blk)
        prev = blk.hash()
        return blk

    # payload indexes: faucet=100, A=101, B=102, C=103, service=104
    b0 = add_block(0, [])
    f1 = Tx([(b0.txs[0].txid(), 0)], [(10 * COIN, p2pkh(101)), (3_999_900_000, p2pkh(100))])
    add_block(1, [f1])
    f2 = Tx([(f1.txid(), 1)], [(10 * COIN, p2pkh(102)), (2_999_800_000, p2pkh(100))])
    add_block(2, [f2])
    f3 = Tx([(f2.txid(), 1)], [(10 * COIN, p2pkh(103)), (1_999_700_000, p2pkh(100))])
    add_block(3, [f3])
    merged = Tx([(f1.txid(), 0), (f2.txid(), 0), (f3.txid(), 0)],
                [(2_990_000_000, p2pkh(104)), (9_900_000, p2pkh(103))])
    add_block(4, [merged])
    return blocks


def write_rates():
    # daily closes covering both committed fixtures (January 2014)
    lines = ["# date,usd_per_btc"]
    for day, rate in [("2014-01-06", "951.39"), ("2014-01-07", "810.00"),
                      ("2014-01-08", "825.75"), ("2014-01-17", "818.50"),
                      ("2014-01-18", "821.12345678"), ("2014-01-19", "830.00"),
                      ("2014-01-20", "842.25")]:
        lines.append(f"{day},{rate}")
    (OUT / "rates_sample.csv").write_text("\n".join(lines) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_genesis()

    blocks = build_golden_chain()
    (OUT / "golden_chain.dat").write_bytes(b"".join(b.serialize() for b in blocks))
    (OUT / "golden_chain.jsonl").write_text(fixture_json(blocks))
    (OUT / "golden_chain.expected.json").write_text(json.dumps(expected_json(blocks), indent=1) + "\n")

    fig3 = build_fig3()
    (OUT / "fig3.jsonl").write_text(fixture_json(fig3))

    write_rates()
    print("wrote", sorted(p.name for p in OUT.iterdir()))


if __name__ == "__main__":
    main()
