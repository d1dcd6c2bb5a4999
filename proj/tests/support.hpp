#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "aigckit/canonicalize.hpp"
#include "aigckit/envelope.hpp"
#include "aigckit/generation.hpp"
#include "aigckit/poml.hpp"
#include "aigckit/proof.hpp"
#include "aigckit/rdf.hpp"
#include "aigckit/util.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return fs::path(AIGCKIT_FIXTURES_DIR); }

// Fresh temp directory under the system temp root; removed by the caller or
// left for inspection (names are unique per call).
inline fs::path make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = fs::temp_directory_path() /
                     ("aigckit-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(make_temp_dir(tag)) {}
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

inline aigckit::util::RandomBytesFn seeded_random(std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](unsigned char* buf, std::size_t len) {
        for (std::size_t i = 0; i < len; i++) buf[i] = static_cast<unsigned char>((*rng)() & 0xFF);
    };
}

inline aigckit::proof::KeyPair test_key(std::uint64_t seed = 1) {
    std::array<unsigned char, 32> bytes{};
    std::mt19937_64 rng(seed);
    for (auto& b : bytes) b = static_cast<unsigned char>(rng() & 0xFF);
    return aigckit::proof::keygen(std::span<const unsigned char>(bytes.data(), bytes.size()));
}

inline aigckit::poml::StructuredPrompt sample_prompt() {
    using namespace aigckit::poml;
    return StructuredPrompt::make({
        PromptModule::make(ModuleKind::Role, "You are an assistant for Practical Writing tasks."),
        PromptModule::make(ModuleKind::Requirements,
                           "1. Summarize the financing round in under 200 words.\n"
                           "2. Mention the lead investor by name."),
    });
}

struct EnvelopeSpec {
    std::uint64_t seed = 1;
    bool with_confidence = true;
    bool with_thought = false;
    std::vector<aigckit::poml::ModuleKind> kinds = {aigckit::poml::ModuleKind::Role,
                                                    aigckit::poml::ModuleKind::Requirements};
};

// Deterministic envelope with varied module subsets; the workhorse fixture
// generator for round-trip, proof, and acceptance tests.
inline aigckit::vc::AigcEnvelope make_envelope(const EnvelopeSpec& spec = {}) {
    using namespace aigckit;
    std::mt19937_64 rng(spec.seed);
    auto pick_words = [&rng](std::size_t n) {
        static const char* words[] = {"river", "signal", "ledger", "granite", "meadow", "quill",
                                      "harbor", "lantern", "copper", "violet", "ember", "sonnet"};
        std::string out;
        for (std::size_t i = 0; i < n; i++) {
            if (i) out += " ";
            out += words[rng() % std::size(words)];
        }
        return out;
    };

    std::vector<poml::PromptModule> modules;
    for (const auto kind : spec.kinds)
        modules.push_back(poml::PromptModule::make(kind, pick_words(4 + rng() % 6) + "."));
    auto prompt = poml::StructuredPrompt::make(std::move(modules));

    auto model = vc::ModelRef::make("https://huggingface.co/openai/gpt-oss-20b",
                                    "openai/gpt-oss-20b");
    auto hyper = vc::HyperParameters::make(1.0, 2000);

    std::optional<vc::ConfidenceStats> confidence;
    if (spec.with_confidence) {
        std::vector<gen::TokenLogProb> tokens;
        const auto count = 3 + rng() % 40;
        for (std::size_t i = 0; i < count; i++) {
            const double lp = -static_cast<double>(rng() % 5000) / 1000.0 - 0.001;
            tokens.push_back(gen::TokenLogProb::make("t" + std::to_string(i), lp));
        }
        confidence = gen::compute_confidence(tokens);
    }

    std::optional<vc::ThoughtTrace> thought;
    std::string value = pick_words(20 + rng() % 30) + ".";
    if (spec.with_thought) {
        const auto inner = pick_words(6);
        thought = vc::ThoughtTrace::make(inner, "think");
        value = "<think>" + inner + "</think>" + value;
    }

    auto content = vc::GeneratedContent::make(value, std::move(prompt), std::move(model),
                                              std::move(hyper), confidence, std::move(thought));
    auto issuer = vc::IssuerRef::make("did:web:issuer.example", "Test Issuer");
    return vc::build_envelope(std::move(content), std::move(issuer),
                              util::Timestamp::parse("2025-12-10T01:17:04Z"), std::nullopt,
                              seeded_random(spec.seed));
}

inline aigckit::vc::AigcEnvelope make_signed_envelope(const EnvelopeSpec& spec,
                                                      const aigckit::proof::KeyPair& key) {
    return aigckit::proof::sign_envelope(make_envelope(spec), key,
                                         "did:web:issuer.example#key-1",
                                         aigckit::util::Timestamp::parse("2025-12-10T01:17:04Z"));
}

// ---------------------------------------------------------------------------
// Independent canonicalization oracle: minimum serialization over all
// blank-label permutations. Exponential; only for small datasets. Two
// datasets are isomorphic iff their minimal serializations match, which
// cross-checks the hash-based canonicalizer without sharing any code path.
inline std::string brute_force_canonical(const aigckit::rdf::Dataset& dataset) {
    using namespace aigckit::rdf;
    auto labels = dataset.blank_labels();
    std::vector<std::string> slots(labels.size());
    for (std::size_t i = 0; i < slots.size(); i++) slots[i] = "m" + std::to_string(i);
    std::sort(labels.begin(), labels.end());
    std::string best;
    do {
        LabelMap map;
        for (std::size_t i = 0; i < labels.size(); i++) map[labels[i]] = slots[i];
        auto text = serialize_nquads(dataset, map);
        if (best.empty() || text < best) best = std::move(text);
    } while (std::next_permutation(labels.begin(), labels.end()));
    return best;
}

// Consistent random relabeling of all blank nodes in a dataset.
inline aigckit::rdf::Dataset relabel_blanks(const aigckit::rdf::Dataset& dataset,
                                            std::uint64_t seed) {
    using namespace aigckit::rdf;
    std::mt19937_64 rng(seed);
    LabelMap map;
    for (const auto& label : dataset.blank_labels())
        map[label] = "r" + std::to_string(rng() % 1000000) + "x" + std::to_string(map.size());
    Dataset out;
    auto rename = [&map](const Term& t) {
        if (!t.is_blank()) return t;
        return Term::blank(map.at(t.value));
    };
    for (const auto& q : dataset.quads()) {
        std::optional<Term> graph;
        if (q.graph) graph = rename(*q.graph);
        out.insert(Quad::make(rename(q.subject), q.predicate, rename(q.object), std::move(graph)));
    }
    return out;
}

}  // namespace testsupport
