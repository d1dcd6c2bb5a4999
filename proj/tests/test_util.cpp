#include <doctest.h>

#include "aigckit/util.hpp"
#include "support.hpp"

using namespace aigckit;

TEST_CASE("timestamp parses and formats whole-second Zulu form") {
    const auto ts = util::Timestamp::parse("2025-12-10T01:17:04Z");
    CHECK(ts.to_rfc3339() == "2025-12-10T01:17:04Z");
}

TEST_CASE("timestamp truncates fractional seconds") {
    const auto ts = util::Timestamp::parse("2025-12-10T01:17:04.987654Z");
    CHECK(ts.to_rfc3339() == "2025-12-10T01:17:04Z");
}

TEST_CASE("timestamp rejects malformed input") {
    CHECK_THROWS_AS(util::Timestamp::parse("2025-12-10 01:17:04Z"), InvalidField);
    CHECK_THROWS_AS(util::Timestamp::parse("2025-12-10T01:17:04+09:00"), InvalidField);
    CHECK_THROWS_AS(util::Timestamp::parse("2025-13-01T00:00:00Z"), InvalidField);
    CHECK_THROWS_AS(util::Timestamp::parse("2025-02-30T00:00:00Z"), InvalidField);
    CHECK_THROWS_AS(util::Timestamp::parse(""), InvalidField);
}

TEST_CASE("timestamp round-trips across leap years and epoch edges") {
    for (const auto* text : {"1970-01-01T00:00:00Z", "2000-02-29T23:59:59Z",
                             "2024-02-29T12:00:00Z", "1969-07-20T20:17:40Z",
                             "9999-12-31T23:59:59Z"}) {
        CHECK(util::Timestamp::parse(text).to_rfc3339() == text);
    }
}

TEST_CASE("uuid v4 shape, casing, and determinism under a seeded source") {
    const auto a = util::new_uuid_v4(testsupport::seeded_random(7));
    const auto b = util::new_uuid_v4(testsupport::seeded_random(7));
    CHECK(a == b);
    CHECK(util::is_uuid(a));
    CHECK(a[14] == '4');  // version nibble
    const auto variant = a[19];
    const bool ok = variant == '8' || variant == '9' || variant == 'a' || variant == 'b';
    CHECK(ok);
    CHECK(util::new_uuid_v4() != util::new_uuid_v4());
}

TEST_CASE("hex round trip") {
    const auto bytes = util::from_hex("00ff10ab");
    CHECK(util::to_hex(bytes) == "00ff10ab");
    CHECK_THROWS_AS(util::from_hex("0g"), InvalidArgument);
    CHECK_THROWS_AS(util::from_hex("abc"), InvalidArgument);
}

TEST_CASE("sha256 matches the published digest of 'abc'") {
    CHECK(util::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("format_double emits shortest round-trip forms") {
    CHECK(util::format_double(1.0) == "1");
    CHECK(util::format_double(0.5) == "0.5");
    CHECK(util::format_double(-0.4548458994601176) == "-0.4548458994601176");
    CHECK(util::format_double(2000.0) == "2000");
}

TEST_CASE("count_words splits on whitespace runs") {
    CHECK(util::count_words("") == 0);
    CHECK(util::count_words("   ") == 0);
    CHECK(util::count_words("one") == 1);
    CHECK(util::count_words("one  two\nthree\tfour ") == 4);
}

TEST_CASE("utf8 validation") {
    CHECK(util::utf8_valid("plain ascii"));
    CHECK(util::utf8_valid("caf\xc3\xa9"));
    CHECK(util::utf8_valid("\xe2\x89\xa4 200 words"));
    CHECK_FALSE(util::utf8_valid("\xc3"));           // truncated
    CHECK_FALSE(util::utf8_valid("\xed\xa0\x80"));   // surrogate
    CHECK_FALSE(util::utf8_valid("\xc0\xaf"));       // overlong
}

TEST_CASE("absolute IRI validation") {
    CHECK(util::absolute_iri_valid("https://example.org/a"));
    CHECK(util::absolute_iri_valid("did:web:example.org"));
    CHECK(util::absolute_iri_valid("urn:uuid:f5c4c481-7915-441e-9c21-672ad62e12f3"));
    CHECK_FALSE(util::absolute_iri_valid("no-scheme"));
    CHECK_FALSE(util::absolute_iri_valid("https://bad space.example"));
    CHECK_FALSE(util::absolute_iri_valid("_:b0"));
    CHECK_FALSE(util::absolute_iri_valid("https://exa<mple.org"));
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<int> hits(500, 0);
    util::parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
    for (const auto h : hits) CHECK(h == 1);
}
