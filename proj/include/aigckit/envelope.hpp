#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "aigckit/errors.hpp"
#include "aigckit/poml.hpp"
#include "aigckit/util.hpp"

namespace aigckit::vc {

// Fixed document profile.
inline constexpr std::string_view kContextCredentialsV2 = "https://www.w3.org/ns/credentials/v2";
inline constexpr std::string_view kContextDataIntegrityV1 =
    "https://w3id.org/security/data-integrity/v1";
inline constexpr std::string_view kContextAigckitV1 = "https://w3id.org/aigckit/v1";
inline constexpr std::string_view kTypeVerifiableCredential = "VerifiableCredential";
inline constexpr std::string_view kTypeAigcCredential = "AIGCContentCredential";
inline constexpr std::string_view kProofType = "DataIntegrityProof";
inline constexpr std::string_view kProofPurpose = "assertionMethod";
inline constexpr std::string_view kCryptosuite = "eddsa-rdfc-2022";

struct UnknownContext : Error {
    explicit UnknownContext(const std::string& msg) : Error("unknown context: " + msg) {}
};
struct MissingKey : Error {
    explicit MissingKey(const std::string& path_) : Error("missing key: " + path_), path(path_) {}
    std::string path;
};
struct DanglingReference : Error {
    explicit DanglingReference(const std::string& id)
        : Error("graph node referenced but absent: " + id) {}
};

struct ModelRef {
    std::string iri;    // absolute IRI
    std::string label;

    static ModelRef make(std::string iri, std::string label);
    bool operator==(const ModelRef&) const = default;
};

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;

struct HyperParameters {
    double temperature = 1.0;     // >= 0
    std::int64_t max_tokens = 0;  // > 0
    std::map<std::string, ParamValue> extra;

    static HyperParameters make(double temperature, std::int64_t max_tokens,
                                std::map<std::string, ParamValue> extra = {});
    bool operator==(const HyperParameters&) const = default;
};

/// Statistics over the per-token natural-log probabilities of one output.
struct ConfidenceStats {
    double mean = 0;
    double min = 0;
    double max = 0;
    std::int64_t count = 0;
    double perplexity = 1;  // exp(-mean)

    static ConfidenceStats make(double mean, double min, double max, std::int64_t count);
    /// Validates a pre-computed perplexity to 1e-12 relative.
    static ConfidenceStats with_perplexity(double mean, double min, double max,
                                           std::int64_t count, double perplexity);
    bool operator==(const ConfidenceStats&) const = default;
};

struct ThoughtTrace {
    std::string value;       // non-empty
    std::string source_tag;  // tag that delimited it, e.g. "think"

    static ThoughtTrace make(std::string value, std::string source_tag);
    bool operator==(const ThoughtTrace&) const = default;
};

struct IssuerRef {
    std::string id;  // DID
    std::string name;

    static IssuerRef make(std::string id, std::string name);
    bool operator==(const IssuerRef&) const = default;
};

/// Derives the display excerpt for a content value: the value itself when
/// <= 80 chars, else the first 77 chars (backed off to a UTF-8 boundary)
/// plus "...".
std::string derive_label(std::string_view value);

struct GeneratedContent {
    std::string value;  // full raw model output
    std::string label;  // prefix excerpt of value
    poml::StructuredPrompt prompt;
    ModelRef model;
    HyperParameters hyper;
    std::optional<ConfidenceStats> confidence;
    std::optional<ThoughtTrace> thought;

    static GeneratedContent make(std::string value, poml::StructuredPrompt prompt, ModelRef model,
                                 HyperParameters hyper,
                                 std::optional<ConfidenceStats> confidence = {},
                                 std::optional<ThoughtTrace> thought = {});
    bool operator==(const GeneratedContent&) const = default;
};

struct Proof {
    std::string type{kProofType};
    util::Timestamp created;
    std::string proof_purpose{kProofPurpose};
    std::string verification_method;  // DID URL (did#fragment)
    std::string cryptosuite{kCryptosuite};
    std::string proof_value;  // "z" + base58btc(64-byte signature)

    bool operator==(const Proof&) const = default;
};

/// The verifiable AIGC container. Immutable after construction.
struct AigcEnvelope {
    std::string id;  // "urn:uuid:" + UUIDv4
    IssuerRef issuer;
    util::Timestamp valid_from;
    GeneratedContent subject;
    std::optional<Proof> proof;

    /// The bare UUID portion of id.
    std::string uuid() const;

    bool operator==(const AigcEnvelope&) const = default;
};

AigcEnvelope build_envelope(GeneratedContent content, IssuerRef issuer,
                            util::Timestamp valid_from, std::optional<std::string> id = {},
                            const util::RandomBytesFn& random = util::system_random());

/// Canonical JSON serialization of the fixed JSON-LD document shape:
/// sorted keys, UTF-8, no insignificant whitespace, shortest round-trip
/// numbers, deterministic "_:b0..." blank labels.
std::string to_jsonld(const AigcEnvelope& envelope);

AigcEnvelope from_jsonld(std::string_view text);

}  // namespace aigckit::vc
