#pragma once

#include <array>
#include <optional>
#include <string>

#include "chainlens/bytes.hpp"
#include "chainlens/crypto.hpp"

namespace chainlens {

// The five output classes tracked by the address-type statistics.
enum class ScriptClass : uint8_t {
    PayToPubkey = 0,
    PayToPubkeyHash = 1,
    PayToScriptHash = 2,
    Multisig = 3,
    NonStandard = 4,
};

constexpr int kScriptClassCount = 5;

const char* script_class_name(ScriptClass cls); // pubkey|pubkeyhash|scripthash|multisig|nonstandard
std::optional<ScriptClass> script_class_from_name(std::string_view name);

// Canonical address identity. One real-world controller of a key appears as
// one AddressKey: pay-to-pubkey outputs are folded into the pubkey-hash space
// (payload = HASH160 of the key), multisig identity is the HASH160 of the
// whole script, P2SH keeps its embedded script hash.
struct AddressKey {
    ScriptClass kind = ScriptClass::NonStandard;
    std::array<uint8_t, 20> payload{};

    auto operator<=>(const AddressKey&) const = default;
    std::string payload_hex() const { return hex_encode(payload); }
};

struct AddressKeyHasher {
    size_t operator()(const AddressKey& k) const {
        uint64_t v;
        std::memcpy(&v, k.payload.data(), 8);
        return static_cast<size_t>(v * 0x9e3779b97f4a7c15ull ^ static_cast<uint64_t>(k.kind));
    }
};

// Total classification: any byte string maps to exactly one class, malformed
// scripts fall through to NonStandard.
ScriptClass classify_script(ByteSpan script);

// Canonical identity for an already-classified script; nullopt for
// NonStandard scripts (no extractable key material).
std::optional<AddressKey> script_to_address(ByteSpan script, ScriptClass cls);

inline std::optional<AddressKey> script_to_address(ByteSpan script) {
    return script_to_address(script, classify_script(script));
}

} // namespace chainlens
