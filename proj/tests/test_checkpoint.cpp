#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>

#include "wahmvc/checkpoint.hpp"
#include "wahmvc/error.hpp"

using namespace wahmvc;
using namespace wahmvc::checkpoint;

TEST_CASE("encode layout") {
    const std::vector<Tensor> one{{"w", {2}, {1.0, -2.5}}};
    const auto bytes = encode(one);
    REQUIRE(bytes.size() == 5 + 4 + 1 + 4 + 8 + 16);
    CHECK(std::memcmp(bytes.data(), "WAHM1", 5) == 0);
    CHECK(bytes[5] == 1);   // name length, little-endian
    CHECK(bytes[9] == 'w');
    CHECK(bytes[10] == 1);  // rank
    CHECK(bytes[14] == 2);  // dims[0]
    double first;
    std::memcpy(&first, bytes.data() + 22, 8);
    CHECK(first == 1.0);
}

TEST_CASE("bit-exact round trip") {
    std::vector<Tensor> t{
        {"scalar", {}, {std::numeric_limits<double>::denorm_min()}},
        {"matrix", {2, 3}, {-0.0, 1e308, -1e-308, 0.1, std::numeric_limits<double>::infinity(), 3.0}},
        {"empty", {0}, {}},
        {"cube", {1, 2, 2}, {1, 2, 3, 4}},
    };
    const auto back = decode(encode(t));
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back[i].name == t[i].name);
        CHECK(back[i].dims == t[i].dims);
        REQUIRE(back[i].values.size() == t[i].values.size());
        for (std::size_t j = 0; j < t[i].values.size(); ++j)
            CHECK(std::bit_cast<std::uint64_t>(back[i].values[j]) == std::bit_cast<std::uint64_t>(t[i].values[j]));
    }

    const auto path = std::filesystem::temp_directory_path() / "wahmvc_ckpt_test.wahm";
    save(path, t);
    CHECK(load(path).size() == t.size());
    std::filesystem::remove(path);
}

TEST_CASE("corrupt input is rejected") {
    const std::vector<Tensor> one{{"w", {2}, {1.0, -2.5}}};
    auto bytes = encode(one);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode(bad_magic), IoError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode(truncated), IoError);
    CHECK_THROWS_AS(load("/nonexistent/dir/model.wahm"), IoError);

    const std::vector<Tensor> mismatch{{"w", {3}, {1.0}}};
    CHECK_THROWS(encode(mismatch));
}
