// Output-script classification against the standard templates and the
// canonical address identity rules.

#include "chainlens/script.hpp"

namespace chainlens {

namespace {

constexpr uint8_t OP_DUP = 0x76;
constexpr uint8_t OP_HASH160 = 0xa9;
constexpr uint8_t OP_EQUAL = 0x87;
constexpr uint8_t OP_EQUALVERIFY = 0x88;
constexpr uint8_t OP_CHECKSIG = 0xac;
constexpr uint8_t OP_CHECKMULTISIG = 0xae;
constexpr uint8_t OP_1 = 0x51;
constexpr uint8_t OP_16 = 0x60;

bool is_small_int(uint8_t op, int& value) {
    if (op >= OP_1 && op <= OP_16) {
        value = op - OP_1 + 1;
        return true;
    }
    return false;
}

bool is_p2pkh(ByteSpan s) {
    return s.size() == 25 && s[0] == OP_DUP && s[1] == OP_HASH160 && s[2] == 20 &&
           s[23] == OP_EQUALVERIFY && s[24] == OP_CHECKSIG;
}

bool is_p2sh(ByteSpan s) {
    return s.size() == 23 && s[0] == OP_HASH160 && s[1] == 20 && s[22] == OP_EQUAL;
}

bool is_p2pk(ByteSpan s) {
    return (s.size() == 35 && s[0] == 33 && s[34] == OP_CHECKSIG) ||
           (s.size() == 67 && s[0] == 65 && s[66] == OP_CHECKSIG);
}

// OP_m <n pubkey pushes> OP_n OP_CHECKMULTISIG, 1 <= m <= n <= 16,
// every key a direct push of 33 or 65 bytes.
bool is_multisig(ByteSpan s) {
    if (s.size() < 3) return false;
    int m = 0, n = 0;
    if (!is_small_int(s[0], m)) return false;
    if (s[s.size() - 1] != OP_CHECKMULTISIG) return false;
    if (!is_small_int(s[s.size() - 2], n)) return false;
    if (m < 1 || n < m || n > 16) return false;

    size_t pos = 1;
    int keys = 0;
    while (pos < s.size() - 2) {
        uint8_t push = s[pos];
        if (push != 33 && push != 65) return false;
        pos += 1 + push;
        if (pos > s.size() - 2) return false;
        ++keys;
    }
    return pos == s.size() - 2 && keys == n;
}

} // namespace

const char* script_class_name(ScriptClass cls) {
    switch (cls) {
    case ScriptClass::PayToPubkey: return "pubkey";
    case ScriptClass::PayToPubkeyHash: return "pubkeyhash";
    case ScriptClass::PayToScriptHash: return "scripthash";
    case ScriptClass::Multisig: return "multisig";
    case ScriptClass::NonStandard: return "nonstandard";
    }
    return "nonstandard";
}

std::optional<ScriptClass> script_class_from_name(std::string_view name) {
    if (name == "pubkey") return ScriptClass::PayToPubkey;
    if (name == "pubkeyhash") return ScriptClass::PayToPubkeyHash;
    if (name == "scripthash") return ScriptClass::PayToScriptHash;
    if (name == "multisig") return ScriptClass::Multisig;
    if (name == "nonstandard") return ScriptClass::NonStandard;
    return std::nullopt;
}

ScriptClass classify_script(ByteSpan script) {
    if (is_p2pk(script)) return ScriptClass::PayToPubkey;
    if (is_p2pkh(script)) return ScriptClass::PayToPubkeyHash;
    if (is_p2sh(script)) return ScriptClass::PayToScriptHash;
    if (is_multisig(script)) return ScriptClass::Multisig;
    return ScriptClass::NonStandard;
}

std::optional<AddressKey> script_to_address(ByteSpan script, ScriptClass cls) {
    AddressKey key;
    switch (cls) {
    case ScriptClass::PayToPubkey:
        // same controller as the matching pubkey-hash output: one key, one vertex
        key.kind = ScriptClass::PayToPubkeyHash;
        key.payload = hash160(script.subspan(1, script[0]));
        return key;
    case ScriptClass::PayToPubkeyHash:
        key.kind = ScriptClass::PayToPubkeyHash;
        std::copy_n(script.begin() + 3, 20, key.payload.begin());
        return key;
    case ScriptClass::PayToScriptHash:
        key.kind = ScriptClass::PayToScriptHash;
        std::copy_n(script.begin() + 2, 20, key.payload.begin());
        return key;
    case ScriptClass::Multisig:
        // whole-script identity; per-key linkage is a clustering heuristic, not identity
        key.kind = ScriptClass::Multisig;
        key.payload = hash160(script);
        return key;
    case ScriptClass::NonStandard:
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace chainlens
