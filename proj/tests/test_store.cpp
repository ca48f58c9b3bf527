#include <doctest.h>

#include <filesystem>
#include <random>

#include <unistd.h>

#include "chainlens/store.hpp"
#include "support/chain_sim.hpp"

using namespace chainlens;
using namespace chainlens::testsupport;
namespace fs = std::filesystem;

TEST_CASE("store persists and reloads field by field") {
    std::mt19937_64 rng(11);
    RandomChain chain(rng, 5, 6, 30);
    ChainStore store = chain.sim.ingest();
    store.input_signature = "test-signature";

    fs::path dir = fs::temp_directory_path() / ("chainlens_store_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    save_store(store, dir);
    ChainStore loaded = load_store(dir);

    REQUIRE(loaded.blocks.size() == store.blocks.size());
    for (size_t i = 0; i < store.blocks.size(); ++i) {
        CHECK(loaded.blocks[i].height == store.blocks[i].height);
        CHECK(loaded.blocks[i].hash == store.blocks[i].hash);
        CHECK(loaded.blocks[i].prev_block_hash == store.blocks[i].prev_block_hash);
        CHECK(loaded.blocks[i].merkle_root == store.blocks[i].merkle_root);
        CHECK(loaded.blocks[i].time == store.blocks[i].time);
        CHECK(loaded.blocks[i].bits == store.blocks[i].bits);
        CHECK(loaded.blocks[i].nonce == store.blocks[i].nonce);
        CHECK(loaded.blocks[i].first_tx == store.blocks[i].first_tx);
        CHECK(loaded.blocks[i].tx_count == store.blocks[i].tx_count);
    }
    REQUIRE(loaded.txs.size() == store.txs.size());
    for (size_t i = 0; i < store.txs.size(); ++i) {
        CHECK(loaded.txs[i].hash == store.txs[i].hash);
        CHECK(loaded.txs[i].block_id == store.txs[i].block_id);
        CHECK(loaded.txs[i].index_in_block == store.txs[i].index_in_block);
        CHECK(loaded.txs[i].size_bytes == store.txs[i].size_bytes);
        CHECK(loaded.txs[i].timestamp == store.txs[i].timestamp);
        CHECK(loaded.txs[i].is_coinbase == store.txs[i].is_coinbase);
        CHECK(loaded.txs[i].fee == store.txs[i].fee);
        CHECK(loaded.txs[i].first_input == store.txs[i].first_input);
        CHECK(loaded.txs[i].input_count == store.txs[i].input_count);
        CHECK(loaded.txs[i].first_output == store.txs[i].first_output);
        CHECK(loaded.txs[i].output_count == store.txs[i].output_count);
    }
    REQUIRE(loaded.outputs.size() == store.outputs.size());
    for (size_t i = 0; i < store.outputs.size(); ++i) {
        CHECK(loaded.outputs[i].tx_id == store.outputs[i].tx_id);
        CHECK(loaded.outputs[i].value == store.outputs[i].value);
        CHECK(loaded.outputs[i].script_class == store.outputs[i].script_class);
        CHECK(loaded.outputs[i].address_id == store.outputs[i].address_id);
        CHECK(loaded.outputs[i].spent_by_input == store.outputs[i].spent_by_input);
    }
    REQUIRE(loaded.inputs.size() == store.inputs.size());
    for (size_t i = 0; i < store.inputs.size(); ++i) {
        CHECK(loaded.inputs[i].tx_id == store.inputs[i].tx_id);
        CHECK(loaded.inputs[i].prev_tx_hash == store.inputs[i].prev_tx_hash);
        CHECK(loaded.inputs[i].prev_vout == store.inputs[i].prev_vout);
        CHECK(loaded.inputs[i].spent_output_id == store.inputs[i].spent_output_id);
        CHECK(loaded.inputs[i].resolved_value == store.inputs[i].resolved_value);
        CHECK(loaded.inputs[i].resolved_address_id == store.inputs[i].resolved_address_id);
    }
    CHECK(loaded.addresses == store.addresses);
    CHECK(loaded.script_blob == store.script_blob);
    CHECK(loaded.script_offsets == store.script_offsets);
    CHECK(loaded.input_signature == "test-signature");
    CHECK(loaded.linked);
    CHECK(loaded.indexed);

    // re-saving an identical store leaves the manifest hash unchanged
    std::string hash_before = store_manifest_hash(dir);
    save_store(loaded, dir);
    CHECK(store_manifest_hash(dir) == hash_before);

    fs::remove_all(dir);
}

TEST_CASE("loading a missing store is NotBuilt") {
    try {
        load_store(fs::temp_directory_path() / "chainlens_does_not_exist");
        FAIL("expected NotBuilt");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotBuilt);
    }
}

TEST_CASE("truncated tables surface as StoreCorrupt") {
    ChainSim sim;
    sim.begin_block(1000, 1);
    sim.begin_block(1600, 2);
    ChainStore store = sim.ingest();
    fs::path dir = fs::temp_directory_path() / ("chainlens_corrupt_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    save_store(store, dir);

    Bytes txs = read_file(dir / "txs.tbl");
    txs.resize(txs.size() - 7);
    write_file_atomic(dir / "txs.tbl", txs);
    try {
        load_store(dir);
        FAIL("expected StoreCorrupt");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::StoreCorrupt);
    }
    fs::remove_all(dir);
}

TEST_CASE("script blob offsets slice correctly") {
    ChainSim sim;
    sim.begin_block(1000, 1);
    ChainStore store = sim.ingest();
    REQUIRE(store.outputs.size() == 1);
    ByteSpan script = store.output_script(0);
    CHECK(script.size() == 25);
    CHECK(script[0] == 0x76);
    CHECK(classify_script(script) == ScriptClass::PayToPubkeyHash);
}
