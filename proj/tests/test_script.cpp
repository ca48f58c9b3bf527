#include <doctest.h>

#include <random>

#include "chainlens/script.hpp"

using namespace chainlens;

namespace {

Bytes p2pkh(const Bytes& h) {
    Bytes s{0x76, 0xa9, 0x14};
    s.insert(s.end(), h.begin(), h.end());
    s.push_back(0x88);
    s.push_back(0xac);
    return s;
}

Bytes p2sh(const Bytes& h) {
    Bytes s{0xa9, 0x14};
    s.insert(s.end(), h.begin(), h.end());
    s.push_back(0x87);
    return s;
}

Bytes p2pk(const Bytes& key) {
    Bytes s{static_cast<uint8_t>(key.size())};
    s.insert(s.end(), key.begin(), key.end());
    s.push_back(0xac);
    return s;
}

Bytes multisig(int m, const std::vector<Bytes>& keys) {
    Bytes s{static_cast<uint8_t>(0x50 + m)};
    for (const Bytes& k : keys) {
        s.push_back(static_cast<uint8_t>(k.size()));
        s.insert(s.end(), k.begin(), k.end());
    }
    s.push_back(static_cast<uint8_t>(0x50 + keys.size()));
    s.push_back(0xae);
    return s;
}

Bytes random_key(std::mt19937_64& rng, size_t len) {
    Bytes k(len);
    for (uint8_t& b : k) b = static_cast<uint8_t>(rng());
    return k;
}

} // namespace

TEST_CASE("standard templates classify") {
    Bytes h(20, 0xab);
    CHECK(classify_script(p2pkh(h)) == ScriptClass::PayToPubkeyHash);
    CHECK(classify_script(p2sh(h)) == ScriptClass::PayToScriptHash);
    CHECK(classify_script(Bytes{0x6a, 0x01, 0x02}) == ScriptClass::NonStandard); // OP_RETURN
    CHECK(classify_script(Bytes{}) == ScriptClass::NonStandard);

    std::mt19937_64 rng(7);
    CHECK(classify_script(p2pk(random_key(rng, 33))) == ScriptClass::PayToPubkey);
    CHECK(classify_script(p2pk(random_key(rng, 65))) == ScriptClass::PayToPubkey);
    CHECK(classify_script(p2pk(random_key(rng, 34))) == ScriptClass::NonStandard);

    CHECK(classify_script(multisig(1, {random_key(rng, 33)})) == ScriptClass::Multisig);
    CHECK(classify_script(multisig(2, {random_key(rng, 33), random_key(rng, 65), random_key(rng, 33)})) ==
          ScriptClass::Multisig);
    // m > n is invalid
    CHECK(classify_script(multisig(3, {random_key(rng, 33), random_key(rng, 33)})) ==
          ScriptClass::NonStandard);

    // truncated / padded templates fall through
    Bytes trunc = p2pkh(h);
    trunc.pop_back();
    CHECK(classify_script(trunc) == ScriptClass::NonStandard);
    Bytes padded = p2sh(h);
    padded.push_back(0x00);
    CHECK(classify_script(padded) == ScriptClass::NonStandard);
}

TEST_CASE("malformed multisig variants stay nonstandard") {
    std::mt19937_64 rng(8);
    Bytes k = random_key(rng, 33);
    // declared n=2 but only one key present
    Bytes s{0x51};
    s.push_back(33);
    s.insert(s.end(), k.begin(), k.end());
    s.push_back(0x52);
    s.push_back(0xae);
    CHECK(classify_script(s) == ScriptClass::NonStandard);
    // key push of the wrong width
    Bytes bad = multisig(1, {random_key(rng, 20)});
    CHECK(classify_script(bad) == ScriptClass::NonStandard);
}

TEST_CASE("classification is total and stable on random bytes") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 2000; ++trial) {
        Bytes script(rng() % 80);
        for (uint8_t& b : script) b = static_cast<uint8_t>(rng());
        ScriptClass first = classify_script(script);
        CHECK(classify_script(script) == first);
        std::optional<AddressKey> key = script_to_address(script, first);
        if (first == ScriptClass::NonStandard)
            CHECK(!key.has_value());
        else
            CHECK(key.has_value());
    }
}

TEST_CASE("P2PK and P2PKH by the same key share one identity") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        Bytes key = random_key(rng, trial % 2 ? 33 : 65);
        std::array<uint8_t, 20> h160 = hash160(key);
        Bytes hash(h160.begin(), h160.end());
        std::optional<AddressKey> a = script_to_address(p2pk(key));
        std::optional<AddressKey> b = script_to_address(p2pkh(hash));
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(*a == *b);
        CHECK(a->kind == ScriptClass::PayToPubkeyHash);
    }
}

TEST_CASE("P2SH and multisig identities") {
    Bytes h(20, 0x21);
    std::optional<AddressKey> a = script_to_address(p2sh(h));
    REQUIRE(a.has_value());
    CHECK(a->kind == ScriptClass::PayToScriptHash);
    CHECK(Bytes(a->payload.begin(), a->payload.end()) == h);

    std::mt19937_64 rng(5);
    Bytes script = multisig(2, {random_key(rng, 33), random_key(rng, 33)});
    std::optional<AddressKey> m = script_to_address(script);
    REQUIRE(m.has_value());
    CHECK(m->kind == ScriptClass::Multisig);
    CHECK(m->payload == hash160(script)); // whole-script identity
}
