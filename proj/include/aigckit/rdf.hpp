#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aigckit/errors.hpp"

namespace aigckit::rdf {

namespace xsd {
inline constexpr std::string_view kString = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view kInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view kDouble = "http://www.w3.org/2001/XMLSchema#double";
inline constexpr std::string_view kBoolean = "http://www.w3.org/2001/XMLSchema#boolean";
inline constexpr std::string_view kDateTime = "http://www.w3.org/2001/XMLSchema#dateTime";
}  // namespace xsd

inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfLangString =
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

struct Term {
    enum class Kind { Iri, BlankNode, Literal };

    Kind kind = Kind::Iri;
    std::string value;     // IRI text, blank label (without "_:"), or literal lexical form
    std::string datatype;  // literals only
    std::string language;  // rdf:langString literals only

    static Term iri(std::string value);
    static Term blank(std::string label);  // label matches [A-Za-z0-9]+
    static Term literal(std::string lexical, std::string_view datatype = xsd::kString,
                        std::string language = "");

    bool is_blank() const { return kind == Kind::BlankNode; }
    auto operator<=>(const Term&) const = default;
};

struct Quad {
    Term subject;               // Iri | BlankNode
    Term predicate;             // Iri
    Term object;                // any term
    std::optional<Term> graph;  // Iri | BlankNode; nullopt = default graph

    static Quad make(Term subject, Term predicate, Term object, std::optional<Term> graph = {});
    auto operator<=>(const Quad&) const = default;
};

/// Set of quads; inserting an existing quad is a no-op.
class Dataset {
   public:
    void insert(Quad quad) { quads_.insert(std::move(quad)); }
    const std::set<Quad>& quads() const { return quads_; }
    std::size_t size() const { return quads_.size(); }
    bool empty() const { return quads_.empty(); }

    /// Sorted unique blank-node labels across all positions.
    std::vector<std::string> blank_labels() const;

    bool operator==(const Dataset&) const = default;

   private:
    std::set<Quad> quads_;
};

struct MissingLabel : Error {
    explicit MissingLabel(const std::string& label)
        : Error("no label mapping for blank node: " + label) {}
};
struct NQuadsParseError : Error {
    explicit NQuadsParseError(const std::string& msg) : Error("N-Quads parse: " + msg) {}
};

using LabelMap = std::map<std::string, std::string>;

/// One N-Quads line per quad, lines sorted by code point, LF endings,
/// trailing LF. `labels` must cover every blank node.
std::string serialize_nquads(const Dataset& dataset, const LabelMap& labels);
/// Identity labels.
std::string serialize_nquads(const Dataset& dataset);

std::string serialize_quad(const Quad& quad, const LabelMap* labels);

/// Minimal parser for the serializer's output (tests, idempotence checks).
Dataset parse_nquads(std::string_view text);

}  // namespace aigckit::rdf
