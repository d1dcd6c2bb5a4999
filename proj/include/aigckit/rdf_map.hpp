#pragma once

#include "aigckit/envelope.hpp"
#include "aigckit/rdf.hpp"

namespace aigckit::rdf {

// Term-mapping vocabulary (docs/term-mapping.md is the normative table).
namespace vocab {
inline constexpr std::string_view kBase = "https://w3id.org/aigckit#";
inline constexpr std::string_view kCred = "https://www.w3.org/2018/credentials#";
inline constexpr std::string_view kSec = "https://w3id.org/security#";
inline constexpr std::string_view kDctCreated = "http://purl.org/dc/terms/created";
inline constexpr std::string_view kSchemaName = "https://schema.org/name";

std::string aigckit(std::string_view term);  // kBase + term
std::string cred(std::string_view term);
std::string sec(std::string_view term);
}  // namespace vocab

/// Deterministic quad set for an envelope; blank labels "b0", "b1", ...
/// follow the JSON-LD traversal order. Proof quads (default graph,
/// blank subject "pf0") included iff `include_proof`.
Dataset envelope_to_dataset(const vc::AigcEnvelope& envelope, bool include_proof);

/// The proof configuration as its own dataset: every proof field except
/// proofValue, on blank subject "pf0". This is the first canonicalization
/// input of the eddsa-rdfc-2022 two-hash signing scheme.
Dataset proof_options_dataset(const vc::Proof& proof);

Term double_literal(double value);
Term integer_literal(std::int64_t value);
Term datetime_literal(util::Timestamp ts);
Term param_literal(const vc::ParamValue& value);

}  // namespace aigckit::rdf
