#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "aigckit/envelope.hpp"
#include "aigckit/util.hpp"
#include "support.hpp"

using namespace aigckit;
using nlohmann::json;

namespace {

vc::AigcEnvelope listing_style_envelope() {
    auto prompt = testsupport::sample_prompt();
    auto content = vc::GeneratedContent::make(
        "analysisWe need to write a news article summarizing the financing round. "
        "It must stay under the word limit and name the lead investor.",
        std::move(prompt),
        vc::ModelRef::make("https://huggingface.co/openai/gpt-oss-20b", "openai/gpt-oss-20b"),
        vc::HyperParameters::make(1.0, 2000),
        vc::ConfidenceStats::make(-0.4548458994601176, -5.2, -0.001, 412));
    return vc::build_envelope(std::move(content),
                              vc::IssuerRef::make("did:web:issuer.example", "Test Issuer"),
                              util::Timestamp::parse("2025-12-10T01:17:04Z"),
                              "f5c4c481-7915-441e-9c21-672ad62e12f3");
}

}  // namespace

TEST_CASE("to_jsonld carries the exact literal values of the fixture") {
    const auto doc = vc::to_jsonld(listing_style_envelope());
    CHECK(doc.find("\"temperature\":1.0") != std::string::npos);
    CHECK(doc.find("\"max_tokens\":2000") != std::string::npos);
    CHECK(doc.find("\"mean\":-0.4548458994601176") != std::string::npos);
    CHECK(doc.find("\"label\":\"openai/gpt-oss-20b\"") != std::string::npos);
    CHECK(doc.find("\"id\":\"urn:uuid:f5c4c481-7915-441e-9c21-672ad62e12f3\"") !=
          std::string::npos);
    CHECK(doc.find("\"validFrom\":\"2025-12-10T01:17:04Z\"") != std::string::npos);
}

TEST_CASE("build_envelope normalizes fractional-second timestamps") {
    auto envelope = listing_style_envelope();
    envelope = vc::build_envelope(envelope.subject, envelope.issuer,
                                  util::Timestamp::parse("2025-12-10T01:17:04.25Z"),
                                  envelope.uuid());
    CHECK(vc::to_jsonld(envelope).find("\"validFrom\":\"2025-12-10T01:17:04Z\"") !=
          std::string::npos);
}

TEST_CASE("issuer ids must be DIDs") {
    CHECK_THROWS_AS(vc::IssuerRef::make("https://example.org", "Someone"), InvalidField);
}

TEST_CASE("hyperparameter extras must not collide with fixed names") {
    CHECK_THROWS_AS(vc::HyperParameters::make(1.0, 100, {{"temperature", 0.5}}), InvalidField);
    CHECK_THROWS_AS(vc::HyperParameters::make(1.0, 100, {{"bad name", 0.5}}), InvalidField);
    CHECK_NOTHROW(vc::HyperParameters::make(1.0, 100, {{"top_p", 0.9}}));
    CHECK_THROWS_AS(vc::HyperParameters::make(-0.1, 100), InvalidField);
    CHECK_THROWS_AS(vc::HyperParameters::make(1.0, 0), InvalidField);
}

TEST_CASE("confidence invariants") {
    CHECK_THROWS_AS(vc::ConfidenceStats::make(-0.5, -0.4, -0.3, 3), InvalidField);  // min > mean
    CHECK_THROWS_AS(vc::ConfidenceStats::with_perplexity(-0.5, -0.7, -0.3, 3, 2.0),
                    InvalidField);  // perplexity != exp(-mean)
    const auto c = vc::ConfidenceStats::make(-0.5, -0.7, -0.3, 3);
    CHECK(c.perplexity == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
    CHECK_THROWS_AS(vc::ConfidenceStats::make(-0.5, -0.7, -0.3, 0), InvalidField);
}

TEST_CASE("label derivation: short values verbatim, long values ellipsis-truncated") {
    CHECK(vc::derive_label("short") == "short");
    const std::string long_value(200, 'x');
    const auto label = vc::derive_label(long_value);
    CHECK(label.size() == 80);
    CHECK(label.ends_with("..."));
    CHECK(long_value.starts_with(label.substr(0, label.size() - 3)));
    // multi-byte boundary: label never splits a code point
    std::string accented;
    for (int i = 0; i < 60; i++) accented += "\xc3\xa9";  // 120 bytes of 'é'
    CHECK(util::utf8_valid(vc::derive_label(accented)));
}

TEST_CASE("signed envelopes serialize the fixed proof fields") {
    auto envelope = listing_style_envelope();
    vc::Proof proof;
    proof.created = envelope.valid_from;
    proof.verification_method = "did:web:issuer.example#key-1";
    proof.proof_value = "z3abc";
    envelope.proof = proof;
    const auto doc = vc::to_jsonld(envelope);
    CHECK(doc.find("\"proofPurpose\":\"assertionMethod\"") != std::string::npos);
    CHECK(doc.find("\"cryptosuite\":\"eddsa-rdfc-2022\"") != std::string::npos);
    CHECK(doc.find("\"type\":\"DataIntegrityProof\"") != std::string::npos);
}

TEST_CASE("unsigned envelopes have no proof key") {
    const auto doc = vc::to_jsonld(listing_style_envelope());
    CHECK(doc.find("\"proof\"") == std::string::npos);
}

TEST_CASE("to_jsonld is stable across calls") {
    const auto envelope = testsupport::make_envelope({.seed = 9, .with_thought = true});
    CHECK(vc::to_jsonld(envelope) == vc::to_jsonld(envelope));
}

TEST_CASE("emitted documents are canonical JSON: sorted keys, no whitespace") {
    const auto doc = vc::to_jsonld(listing_style_envelope());
    const auto parsed = json::parse(doc);
    CHECK(parsed.dump() == doc);  // nlohmann re-dump sorts keys and strips space
    CHECK(doc.find(": ") == std::string::npos);
}

TEST_CASE("round trip: from_jsonld(to_jsonld(E)) == E across shapes") {
    for (const auto& spec : {
             testsupport::EnvelopeSpec{.seed = 1},
             testsupport::EnvelopeSpec{.seed = 2, .with_confidence = false},
             testsupport::EnvelopeSpec{.seed = 3, .with_thought = true},
             testsupport::EnvelopeSpec{.seed = 4,
                                       .kinds = {poml::ModuleKind::Role,
                                                 poml::ModuleKind::Background,
                                                 poml::ModuleKind::Requirements,
                                                 poml::ModuleKind::Example,
                                                 poml::ModuleKind::OutputFormat}},
             testsupport::EnvelopeSpec{.seed = 5, .kinds = {poml::ModuleKind::Requirements}},
         }) {
        const auto envelope = testsupport::make_envelope(spec);
        const auto parsed = vc::from_jsonld(vc::to_jsonld(envelope));
        CHECK(parsed == envelope);
    }
}

TEST_CASE("round trip: to_jsonld(from_jsonld(D)) == D byte-for-byte on emitted docs") {
    for (std::uint64_t seed : {11, 12, 13}) {
        const auto doc = vc::to_jsonld(
            testsupport::make_envelope({.seed = seed, .with_thought = seed % 2 == 0}));
        CHECK(vc::to_jsonld(vc::from_jsonld(doc)) == doc);
    }
}

TEST_CASE("signed round trip preserves the proof verbatim") {
    const auto key = testsupport::test_key(3);
    const auto envelope = testsupport::make_signed_envelope({.seed = 21}, key);
    const auto doc = vc::to_jsonld(envelope);
    const auto parsed = vc::from_jsonld(doc);
    REQUIRE(parsed.proof.has_value());
    CHECK(parsed == envelope);
    CHECK(vc::to_jsonld(parsed) == doc);
}

TEST_CASE("hyperparameter extras of every scalar type round trip") {
    auto envelope = testsupport::make_envelope({.seed = 6});
    envelope.subject.hyper = vc::HyperParameters::make(
        0.7, 512,
        {{"top_p", 0.9}, {"seed", std::int64_t{42}}, {"stream", false},
         {"stop", std::string("\n\n")}});
    const auto doc = vc::to_jsonld(envelope);
    const auto parsed = vc::from_jsonld(doc);
    CHECK(parsed == envelope);
    CHECK(parsed.subject.hyper.extra.at("top_p") == vc::ParamValue{0.9});
    CHECK(parsed.subject.hyper.extra.at("seed") == vc::ParamValue{std::int64_t{42}});
    CHECK(parsed.subject.hyper.extra.at("stream") == vc::ParamValue{false});
    CHECK(vc::to_jsonld(parsed) == doc);
}

TEST_CASE("from_jsonld parses the reference document fixture") {
    const auto text = util::read_file(testsupport::fixtures_dir() / "reference_envelope.jsonld");
    const auto envelope = vc::from_jsonld(text);
    CHECK(envelope.subject.model.iri == "https://huggingface.co/openai/gpt-oss-20b");
    CHECK(envelope.subject.model.label == "openai/gpt-oss-20b");
    CHECK(envelope.subject.label == "analysis...");
    CHECK(envelope.subject.hyper.max_tokens == 2000);
    CHECK(envelope.subject.hyper.temperature == 1.0);
    REQUIRE(envelope.subject.confidence.has_value());
    CHECK(envelope.subject.confidence->mean == -0.4548458994601176);
    CHECK(envelope.issuer.id == "did:web:ease112.github.io");
    REQUIRE(envelope.proof.has_value());
    CHECK(envelope.proof->cryptosuite == "eddsa-rdfc-2022");
    REQUIRE(envelope.subject.prompt.modules.size() == 2);
    CHECK(envelope.subject.prompt.modules[0].kind == poml::ModuleKind::Role);
}

TEST_CASE("from_jsonld reports missing keys by path") {
    auto doc = json::parse(vc::to_jsonld(listing_style_envelope()));
    doc.erase("credentialSubject");
    try {
        vc::from_jsonld(doc.dump());
        FAIL("expected MissingKey");
    } catch (const vc::MissingKey& e) {
        CHECK(e.path == "credentialSubject");
    }
}

TEST_CASE("from_jsonld rejects unknown contexts") {
    auto doc = json::parse(vc::to_jsonld(listing_style_envelope()));
    doc["@context"][2] = "https://example.org/other/context";
    CHECK_THROWS_AS(vc::from_jsonld(doc.dump()), vc::UnknownContext);
}

TEST_CASE("from_jsonld detects dangling graph references") {
    auto doc = json::parse(vc::to_jsonld(listing_style_envelope()));
    // point the first contains entry at a node that is not in the graph
    doc["@graph"][0]["contains"][0]["@id"] = "_:missing";
    CHECK_THROWS_AS(vc::from_jsonld(doc.dump()), vc::DanglingReference);
}

TEST_CASE("from_jsonld validates the type array") {
    auto doc = json::parse(vc::to_jsonld(listing_style_envelope()));
    doc["type"] = {"VerifiableCredential"};
    CHECK_THROWS_AS(vc::from_jsonld(doc.dump()), InvalidField);
}

TEST_CASE("from_jsonld normalizes uppercase UUIDs") {
    auto doc = json::parse(vc::to_jsonld(listing_style_envelope()));
    doc["id"] = "urn:uuid:F5C4C481-7915-441E-9C21-672AD62E12F3";
    const auto envelope = vc::from_jsonld(doc.dump());
    CHECK(envelope.id == "urn:uuid:f5c4c481-7915-441e-9c21-672ad62e12f3");
}
