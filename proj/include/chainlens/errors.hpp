#pragma once

#include <stdexcept>
#include <string>

namespace chainlens {

// Every failure surfaced by the toolkit carries one of these codes. The CLI
// prints the code name and maps data errors to exit status 1.
enum class Errc {
    BadMagic,
    TruncatedBlock,
    MalformedTransaction,
    SchemaError,
    DanglingInput,
    DoubleSpend,
    NegativeFee,
    UnknownAddress,
    UnknownVertex,
    UnknownCluster,
    EmptyGraph,
    EmptyStore,
    MissingRate,
    PatternInvalid,
    NotBuilt,
    StoreCorrupt,
    LockHeld,
    IoError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code),
          detail_(std::move(message)) {}

    Errc code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
    throw Error(code, std::move(message));
}

} // namespace chainlens
