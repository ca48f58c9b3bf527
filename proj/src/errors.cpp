#include "chainlens/errors.hpp"

namespace chainlens {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedBlock: return "TruncatedBlock";
    case Errc::MalformedTransaction: return "MalformedTransaction";
    case Errc::SchemaError: return "SchemaError";
    case Errc::DanglingInput: return "DanglingInput";
    case Errc::DoubleSpend: return "DoubleSpend";
    case Errc::NegativeFee: return "NegativeFee";
    case Errc::UnknownAddress: return "UnknownAddress";
    case Errc::UnknownVertex: return "UnknownVertex";
    case Errc::UnknownCluster: return "UnknownCluster";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::EmptyStore: return "EmptyStore";
    case Errc::MissingRate: return "MissingRate";
    case Errc::PatternInvalid: return "PatternInvalid";
    case Errc::NotBuilt: return "NotBuilt";
    case Errc::StoreCorrupt: return "StoreCorrupt";
    case Errc::LockHeld: return "LockHeld";
    case Errc::IoError: return "IoError";
    }
    return "Error";
}

} // namespace chainlens
