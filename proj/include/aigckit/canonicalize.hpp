#pragma once

#include <cstdint>

#include "aigckit/rdf.hpp"

namespace aigckit::rdf {

struct CanonicalizationResult {
    LabelMap labels;     // input blank label -> "c14n0", "c14n1", ...
    std::string nquads;  // serialize_nquads(dataset, labels)
};

struct CanonicalizeOptions {
    int max_depth = 50;                  // n-degree recursion bound
    std::uint64_t max_permutations = 40320;  // 8! branches per node
};

struct ComplexityLimitExceeded : Error {
    explicit ComplexityLimitExceeded(const std::string& what_part)
        : Error("canonicalization budget exhausted: " + what_part) {}
};

/// Hash-based deterministic blank-node labeling: first-degree SHA-256
/// hashes over placeholder-serialized quads, unique hashes labeled in hash
/// order, remaining nodes resolved by the recursive n-degree procedure that
/// explores label permutations and keeps the lexicographically least path.
CanonicalizationResult canonicalize(const Dataset& dataset,
                                    const CanonicalizeOptions& options = {});

}  // namespace aigckit::rdf
