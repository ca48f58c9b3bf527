#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "chainlens/graph.hpp"
#include "chainlens/ingest.hpp"
#include "support/chain_sim.hpp"

using namespace chainlens;
using namespace chainlens::testsupport;
namespace fs = std::filesystem;

namespace {

Bytes read_data_file(const std::string& name) {
    return read_file(fs::path(CHAINLENS_TEST_DATA) / name);
}

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("chainlens_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("genesis envelope parses to the pinned hash") {
    Bytes file = read_data_file("genesis.dat");
    std::vector<RawBlockEnvelope> envs = parse_block_file(file, kMainnetMagic);
    REQUIRE(envs.size() == 1);
    CHECK(envs[0].block_hash().to_hex() ==
          "000000000019d6689c085ae165831e934ff763ae46a2a6c172b3f1b60a8ce26f");
    REQUIRE(envs[0].txs.size() == 1);
    CHECK(envs[0].txs[0].txid.to_hex() ==
          "4a5e1e4baab89f3a32518a88c31bc87f618f76673e2cc77ab2127b7afdeda33b");
    CHECK(envs[0].txs[0].is_coinbase());
}

TEST_CASE("empty stream yields an empty sequence") {
    CHECK(parse_block_file(ByteSpan{}, kMainnetMagic).empty());
}

TEST_CASE("trailing zero padding is not an error") {
    Bytes file = read_data_file("golden_chain.dat");
    size_t envelopes_before = parse_block_file(file, kMainnetMagic).size();
    file.insert(file.end(), 1 << 20, 0x00);
    std::vector<RawBlockEnvelope> envs = parse_block_file(file, kMainnetMagic);
    CHECK(envs.size() == envelopes_before);

    // independent count: scan for the magic pattern
    size_t magic_count = 0;
    for (size_t i = 0; i + 4 <= file.size(); ++i)
        if (std::equal(kMainnetMagic.begin(), kMainnetMagic.end(), file.begin() + i)) ++magic_count;
    CHECK(envs.size() == magic_count);
}

TEST_CASE("desynchronized stream raises BadMagic") {
    Bytes file = read_data_file("genesis.dat");
    file[0] ^= 0xff;
    try {
        parse_block_file(file, kMainnetMagic);
        FAIL("expected BadMagic");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadMagic);
    }
    // zero gap followed by data also desynchronizes
    Bytes gap(16, 0x00);
    gap.insert(gap.end(), file.begin(), file.end());
    CHECK_THROWS_AS(parse_block_file(gap, kMainnetMagic), Error);
}

TEST_CASE("payload running past the stream raises TruncatedBlock") {
    Bytes file = read_data_file("genesis.dat");
    file.resize(file.size() - 10);
    try {
        parse_block_file(file, kMainnetMagic);
        FAIL("expected TruncatedBlock");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TruncatedBlock);
    }
}

TEST_CASE("golden chain parses to the pinned hashes and counts") {
    Bytes file = read_data_file("golden_chain.dat");
    ChainStore store = assemble_chain(parse_block_file(file, kMainnetMagic), kMainnetMagic, std::nullopt);
    build_indexes(store);
    link_spends(store);

    Bytes expected_raw = read_data_file("golden_chain.expected.json");
    nlohmann::json expected = nlohmann::json::parse(expected_raw.begin(), expected_raw.end());

    const auto& counts = expected["counts"];
    REQUIRE(store.blocks.size() == counts["blocks"].get<uint64_t>());
    CHECK(store.txs.size() == counts["transactions"].get<uint64_t>());
    CHECK(store.inputs.size() == counts["inputs"].get<uint64_t>());
    CHECK(store.outputs.size() == counts["outputs"].get<uint64_t>());
    CHECK(store.addresses.size() == counts["addresses"].get<uint64_t>());
    CHECK(store.spend_link_count() == counts["spend_links"].get<uint64_t>());

    for (const auto& blk : expected["blocks"]) {
        uint64_t h = blk["height"].get<uint64_t>();
        CHECK(store.blocks[h].hash.to_hex() == blk["hash"].get<std::string>());
        const auto& txids = blk["txids"];
        REQUIRE(store.blocks[h].tx_count == txids.size());
        for (size_t t = 0; t < txids.size(); ++t)
            CHECK(store.txs[store.blocks[h].first_tx + t].hash.to_hex() == txids[t].get<std::string>());
    }
}

TEST_CASE("raw and fixture ingestion produce identical stores") {
    Bytes raw = read_data_file("golden_chain.dat");
    ChainStore from_raw = assemble_chain(parse_block_file(raw, kMainnetMagic), kMainnetMagic, std::nullopt);
    build_indexes(from_raw);
    link_spends(from_raw);

    Bytes jsonl = read_data_file("golden_chain.jsonl");
    std::istringstream lines(std::string(jsonl.begin(), jsonl.end()));
    ChainStore from_fixture = ingest_fixture(lines);

    REQUIRE(from_raw.blocks.size() == from_fixture.blocks.size());
    for (size_t i = 0; i < from_raw.blocks.size(); ++i) {
        CHECK(from_raw.blocks[i].hash == from_fixture.blocks[i].hash);
        CHECK(from_raw.blocks[i].merkle_root == from_fixture.blocks[i].merkle_root);
        CHECK(from_raw.blocks[i].time == from_fixture.blocks[i].time);
    }
    REQUIRE(from_raw.txs.size() == from_fixture.txs.size());
    for (size_t i = 0; i < from_raw.txs.size(); ++i) {
        CHECK(from_raw.txs[i].hash == from_fixture.txs[i].hash);
        CHECK(from_raw.txs[i].fee == from_fixture.txs[i].fee);
    }
    REQUIRE(from_raw.outputs.size() == from_fixture.outputs.size());
    for (size_t i = 0; i < from_raw.outputs.size(); ++i) {
        CHECK(from_raw.outputs[i].value == from_fixture.outputs[i].value);
        CHECK(from_raw.outputs[i].address_id == from_fixture.outputs[i].address_id);
        CHECK(from_raw.outputs[i].spent_by_input == from_fixture.outputs[i].spent_by_input);
    }
    CHECK(from_raw.script_blob == from_fixture.script_blob);
    CHECK(from_raw.addresses.size() == from_fixture.addresses.size());
}

TEST_CASE("fixture examples from the minimal chains") {
    SUBCASE("one coinbase block") {
        std::istringstream in(
            R"({"height":0,"time":1000000000,"txs":[{"ins":[],"outs":[[5000000000,"76a914000000000000000000000000000000000000000088ac"]]}]})");
        ChainStore store = ingest_fixture(in);
        CHECK(store.blocks.size() == 1);
        CHECK(store.txs.size() == 1);
        CHECK(store.outputs.size() == 1);
        CHECK(store.spend_link_count() == 0);
        CHECK(store.txs[0].is_coinbase);
        CHECK(store.txs[0].fee == 0);
    }
    SUBCASE("block 2 spends block 1's coinbase") {
        ChainSim sim;
        sim.begin_block(1000, 1);
        sim.begin_block(1600, 2);
        sim.add_tx({{{0, 0}, 0}}, {{3, 4000000000ull}}); // 10^9 sats fee
        ChainStore store = sim.ingest();
        CHECK(store.spend_link_count() == 1);
        CHECK(store.txs[2].fee == 1000000000);
        CHECK(store.outputs[0].spent_by_input != kNoId);
    }
    SUBCASE("unknown txid reference raises DanglingInput") {
        std::istringstream in(
            "{\"height\":0,\"time\":1,\"txs\":[{\"ins\":[],\"outs\":[[50,\"6a\"]]}]}\n"
            "{\"height\":1,\"time\":2,\"txs\":[{\"ins\":[],\"outs\":[[50,\"6a\"]]},"
            "{\"ins\":[[\"1111111111111111111111111111111111111111111111111111111111111111\",0]],"
            "\"outs\":[[10,\"6a\"]]}]}\n");
        try {
            ingest_fixture(in);
            FAIL("expected DanglingInput");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DanglingInput);
        }
    }
    SUBCASE("schema errors carry the line number") {
        std::istringstream in("{\"height\":0,\"time\":1,\"txs\":[{\"ins\":[],\"outs\":[[50,\"6a\"]]}]}\n"
                              "{\"height\":2,\"time\":2,\"txs\":[]}\n");
        try {
            ingest_fixture(in);
            FAIL("expected SchemaError");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::SchemaError);
            CHECK(e.detail().find("line 2") != std::string::npos);
        }
    }
}

TEST_CASE("double spends are rejected") {
    ChainSim sim;
    sim.begin_block(1000, 1);
    sim.begin_block(1600, 2);
    sim.add_tx({{{0, 0}, 0}}, {{3, 1000000ull}});
    sim.add_tx({{{0, 0}, 0}}, {{4, 1000000ull}});
    try {
        sim.ingest();
        FAIL("expected DoubleSpend");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DoubleSpend);
    }
}

TEST_CASE("value creation is rejected as NegativeFee") {
    ChainSim sim;
    sim.begin_block(1000, 1, 50000);
    sim.begin_block(1600, 2);
    sim.add_tx({{{0, 0}, 0}}, {{3, 70000ull}});
    try {
        sim.ingest();
        FAIL("expected NegativeFee");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NegativeFee);
    }
}

TEST_CASE("stale branch is excluded, longest chain wins") {
    // two branches off the same parent; the longer one appears later in file order
    ChainSim main_branch;
    main_branch.begin_block(1000, 1);
    main_branch.begin_block(1600, 2);
    main_branch.begin_block(2200, 3);
    std::vector<RawBlockEnvelope> main_envs = lower_fixture(main_branch.blocks());

    ChainSim stale;
    stale.begin_block(1000, 1); // same genesis
    stale.begin_block(1601, 9); // diverges at height 1
    std::vector<RawBlockEnvelope> stale_envs = lower_fixture(stale.blocks());

    std::vector<RawBlockEnvelope> all{main_envs[0], stale_envs[1], main_envs[1], main_envs[2]};
    ChainStore store = assemble_chain(all, kMainnetMagic, std::nullopt);
    REQUIRE(store.blocks.size() == 3);
    CHECK(store.blocks[0].hash == main_envs[0].block_hash());
    CHECK(store.blocks[1].hash == main_envs[1].block_hash());
    CHECK(store.blocks[2].hash == main_envs[2].block_hash());

    // equal length: first-seen branch wins
    std::vector<RawBlockEnvelope> tie{main_envs[0], stale_envs[1], main_envs[1]};
    ChainStore tie_store = assemble_chain(tie, kMainnetMagic, std::nullopt);
    REQUIRE(tie_store.blocks.size() == 2);
    CHECK(tie_store.blocks[1].hash == stale_envs[1].block_hash());

    // orphan with no stored parent is dropped
    std::vector<RawBlockEnvelope> with_orphan{main_envs[0], main_envs[2]};
    ChainStore orphan_store = assemble_chain(with_orphan, kMainnetMagic, std::nullopt);
    CHECK(orphan_store.blocks.size() == 1);
}

TEST_CASE("a branch hanging off an orphan never outranks the real chain") {
    // a 4-block branch whose root is missing, against a 2-block genuine chain
    ChainSim severed;
    for (int i = 0; i < 5; ++i) severed.begin_block(1000 + 600 * i, 50 + i);
    std::vector<RawBlockEnvelope> severed_envs = lower_fixture(severed.blocks());

    ChainSim genuine;
    genuine.begin_block(2000, 1);
    genuine.begin_block(2600, 2);
    std::vector<RawBlockEnvelope> genuine_envs = lower_fixture(genuine.blocks());

    // file order interleaves the orphan descendants with the real chain;
    // severed_envs[0] (the branch's root) is never present
    std::vector<RawBlockEnvelope> all{severed_envs[1], genuine_envs[0], severed_envs[2],
                                      severed_envs[3], genuine_envs[1], severed_envs[4]};
    ChainStore store = assemble_chain(all, kMainnetMagic, std::nullopt);
    REQUIRE(store.blocks.size() == 2);
    CHECK(store.blocks[0].hash == genuine_envs[0].block_hash());
    CHECK(store.blocks[1].hash == genuine_envs[1].block_hash());
}

TEST_CASE("height limit trims the stored chain") {
    ChainSim sim;
    for (int i = 0; i < 6; ++i) sim.begin_block(1000 + i * 600, i);
    std::istringstream in(sim.to_jsonl());
    ChainStore store = ingest_fixture(in, kMainnetMagic, 2);
    CHECK(store.blocks.size() == 3); // heights 0..2
}

TEST_CASE("round trip: generator model vs ingested store") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        RandomChain chain(rng, 6, 8, 40);
        ChainStore store = chain.sim.ingest();
        CHECK(store.txs.size() == chain.sim.total_txs);
        CHECK(store.outputs.size() == chain.sim.total_outputs);
        CHECK(store.inputs.size() == chain.sim.total_inputs);
        CHECK(store.spend_link_count() == chain.sim.noncoinbase_inputs);

        // density: tx ranges tile [0, N) in chain order
        for (uint64_t b = 1; b < store.blocks.size(); ++b)
            CHECK(store.blocks[b].first_tx == store.blocks[b - 1].first_tx + store.blocks[b - 1].tx_count);
        // chain-order acyclicity of spend links
        for (const InputRow& in : store.inputs) {
            if (in.spent_output_id == kNoId) continue;
            CHECK(store.outputs[in.spent_output_id].tx_id < in.tx_id);
        }
        // index round trip
        for (uint64_t t = 0; t < store.txs.size(); ++t)
            CHECK(store.find_tx(store.txs[t].hash) == t);
        CHECK(!store.find_tx(Hash32::from_hex(std::string(64, 'e'))).has_value());
        for (uint64_t a = 0; a < store.addresses.size(); ++a)
            CHECK(store.find_address(store.addresses[a]) == a);
    }
}

TEST_CASE("one address appearing in several outputs gets one id") {
    ChainSim sim;
    sim.begin_block(1000, 7);
    sim.begin_block(1600, 7);
    sim.begin_block(2200, 7);
    ChainStore store = sim.ingest();
    CHECK(store.addresses.size() == 1);
    for (const OutputRow& out : store.outputs) CHECK(out.address_id == 0);
}

TEST_CASE("ingest driver: staging reuse and idempotence") {
    fs::path dir = temp_dir("driver");
    fs::path blocks_file = dir / "blk00000.dat";
    {
        Bytes raw = read_data_file("golden_chain.dat");
        std::ofstream out(blocks_file, std::ios::binary);
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    }
    IngestOptions opts;
    opts.data_dir = dir / "store";
    opts.workers = 2;

    IngestResult first = ingest_block_files({blocks_file}, opts);
    CHECK(!first.up_to_date);
    CHECK(first.blocks == 10);
    CHECK(fs::exists(opts.data_dir / "manifest.json"));

    size_t segments = 0;
    for (const auto& entry : fs::directory_iterator(opts.data_dir / "staging")) {
        (void)entry;
        ++segments;
    }
    CHECK(segments == 1);

    IngestResult second = ingest_block_files({blocks_file}, opts);
    CHECK(second.up_to_date);

    ChainStore loaded = load_store(opts.data_dir);
    CHECK(loaded.blocks.size() == 10);
    CHECK(loaded.linked);
    fs::remove_all(dir);
}

TEST_CASE("envelope scanner survives arbitrary corruption") {
    Bytes original = read_data_file("golden_chain.dat");
    std::mt19937_64 rng(0xb10c);
    for (int trial = 0; trial < 1500; ++trial) {
        Bytes mutated = original;
        size_t flips = 1 + rng() % 12;
        for (size_t i = 0; i < flips; ++i) mutated[rng() % mutated.size()] ^= uint8_t(1 + rng() % 255);
        if (rng() % 4 == 0) mutated.resize(rng() % mutated.size());
        try {
            parse_block_file(mutated, kMainnetMagic);
        } catch (const Error& e) {
            bool typed = e.code() == Errc::BadMagic || e.code() == Errc::TruncatedBlock ||
                         e.code() == Errc::MalformedTransaction;
            CHECK(typed);
        }
    }
}

TEST_CASE("network magic is configurable") {
    NetworkMagic custom = magic_from_hex("AABBCCDD");
    CHECK(magic_to_hex(custom) == "aabbccdd");
    CHECK_THROWS_AS(magic_from_hex("f9be"), Error);

    ChainSim sim;
    sim.begin_block(1000, 1);
    Bytes raw = fixture_to_raw(sim.blocks(), custom);
    CHECK(parse_block_file(raw, custom).size() == 1);
    try {
        parse_block_file(raw, kMainnetMagic);
        FAIL("expected BadMagic");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadMagic);
    }
}

TEST_CASE("write lock is exclusive and released on scope exit") {
    fs::path dir = temp_dir("lock");
    {
        StoreLock lock(dir);
        try {
            StoreLock second(dir);
            FAIL("expected LockHeld");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::LockHeld);
        }
    }
    StoreLock reacquired(dir); // previous holder released on destruction
    fs::remove_all(dir);
}

TEST_CASE("fixture writer emits a stream the raw parser accepts") {
    std::mt19937_64 rng(77);
    RandomChain chain(rng, 4, 5, 20);
    Bytes raw = fixture_to_raw(chain.sim.blocks(), kMainnetMagic);
    std::vector<RawBlockEnvelope> envs = parse_block_file(raw, kMainnetMagic);
    CHECK(envs.size() == 4);
    ChainStore store = assemble_chain(envs, kMainnetMagic, std::nullopt);
    build_indexes(store);
    link_spends(store);
    CHECK(store.txs.size() == chain.sim.total_txs);
}
