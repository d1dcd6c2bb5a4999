#include "aigckit/rdf.hpp"

#include <algorithm>
#include <cctype>

#include "aigckit/util.hpp"

namespace aigckit::rdf {

namespace {

bool valid_blank_label(std::string_view label) {
    if (label.empty()) return false;
    return std::all_of(label.begin(), label.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; });
}

void append_escaped_literal(std::string& out, std::string_view lexical) {
    for (const char c : lexical) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: {
                const auto u = static_cast<unsigned char>(c);
                if (u < 0x20 || u == 0x7F) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04X", u);
                    out += buf;
                } else {
                    out.push_back(c);
                }
            }
        }
    }
}

void append_term(std::string& out, const Term& term, const LabelMap* labels) {
    switch (term.kind) {
        case Term::Kind::Iri:
            out.push_back('<');
            out += term.value;
            out.push_back('>');
            break;
        case Term::Kind::BlankNode: {
            out += "_:";
            if (labels) {
                const auto it = labels->find(term.value);
                if (it == labels->end()) throw MissingLabel(term.value);
                out += it->second;
            } else {
                out += term.value;
            }
            break;
        }
        case Term::Kind::Literal:
            out.push_back('"');
            append_escaped_literal(out, term.value);
            out.push_back('"');
            if (!term.language.empty()) {
                out.push_back('@');
                out += term.language;
            } else if (term.datatype != xsd::kString) {
                out += "^^<";
                out += term.datatype;
                out.push_back('>');
            }
            break;
    }
}

}  // namespace

Term Term::iri(std::string value) {
    if (!util::absolute_iri_valid(value)) throw InvalidField("term.iri", "not an absolute IRI: " + value);
    Term t;
    t.kind = Kind::Iri;
    t.value = std::move(value);
    return t;
}

Term Term::blank(std::string label) {
    if (!valid_blank_label(label))
        throw InvalidField("term.blank", "label must match [A-Za-z0-9]+: " + label);
    Term t;
    t.kind = Kind::BlankNode;
    t.value = std::move(label);
    return t;
}

Term Term::literal(std::string lexical, std::string_view datatype, std::string language) {
    if (!util::utf8_valid(lexical)) throw InvalidField("term.literal", "not valid UTF-8");
    if (!language.empty() && datatype != kRdfLangString)
        throw InvalidField("term.literal", "language tag requires rdf:langString datatype");
    if (language.empty() && datatype == kRdfLangString)
        throw InvalidField("term.literal", "rdf:langString requires a language tag");
    Term t;
    t.kind = Kind::Literal;
    t.value = std::move(lexical);
    t.datatype = std::string(datatype);
    t.language = std::move(language);
    return t;
}

Quad Quad::make(Term subject, Term predicate, Term object, std::optional<Term> graph) {
    if (subject.kind == Term::Kind::Literal)
        throw InvalidField("quad.subject", "literal cannot be a subject");
    if (predicate.kind != Term::Kind::Iri)
        throw InvalidField("quad.predicate", "must be an IRI");
    if (graph && graph->kind == Term::Kind::Literal)
        throw InvalidField("quad.graph", "literal cannot be a graph name");
    Quad q;
    q.subject = std::move(subject);
    q.predicate = std::move(predicate);
    q.object = std::move(object);
    q.graph = std::move(graph);
    return q;
}

std::vector<std::string> Dataset::blank_labels() const {
    std::set<std::string> labels;
    for (const auto& q : quads_) {
        if (q.subject.is_blank()) labels.insert(q.subject.value);
        if (q.object.is_blank()) labels.insert(q.object.value);
        if (q.graph && q.graph->is_blank()) labels.insert(q.graph->value);
    }
    return {labels.begin(), labels.end()};
}

std::string serialize_quad(const Quad& quad, const LabelMap* labels) {
    std::string line;
    append_term(line, quad.subject, labels);
    line.push_back(' ');
    append_term(line, quad.predicate, labels);
    line.push_back(' ');
    append_term(line, quad.object, labels);
    if (quad.graph) {
        line.push_back(' ');
        append_term(line, *quad.graph, labels);
    }
    line += " .\n";
    return line;
}

std::string serialize_nquads(const Dataset& dataset, const LabelMap& labels) {
    std::vector<std::string> lines;
    lines.reserve(dataset.size());
    for (const auto& q : dataset.quads()) lines.push_back(serialize_quad(q, &labels));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& line : lines) out += line;
    return out;
}

std::string serialize_nquads(const Dataset& dataset) {
    LabelMap identity;
    for (const auto& label : dataset.blank_labels()) identity[label] = label;
    return serialize_nquads(dataset, identity);
}

// ---------------------------------------------------------------------------
// Minimal N-Quads parser

namespace {

struct LineScanner {
    std::string_view line;
    std::size_t pos = 0;
    int line_no;

    [[noreturn]] void fail(const std::string& msg) const {
        throw NQuadsParseError("line " + std::to_string(line_no) + ": " + msg);
    }

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) pos++;
    }

    bool eof() const { return pos >= line.size(); }

    char peek() const { return line[pos]; }

    std::string unescape(std::string_view raw) {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); i++) {
            if (raw[i] != '\\') {
                out.push_back(raw[i]);
                continue;
            }
            if (i + 1 >= raw.size()) fail("dangling escape");
            const char e = raw[++i];
            switch (e) {
                case 't': out.push_back('\t'); break;
                case 'b': out.push_back('\b'); break;
                case 'n': out.push_back('\n'); break;
                case 'r': out.push_back('\r'); break;
                case 'f': out.push_back('\f'); break;
                case '"': out.push_back('"'); break;
                case '\'': out.push_back('\''); break;
                case '\\': out.push_back('\\'); break;
                case 'u':
                case 'U': {
                    const std::size_t len = e == 'u' ? 4 : 8;
                    if (i + len >= raw.size()) fail("truncated \\u escape");
                    unsigned cp = 0;
                    for (std::size_t k = 1; k <= len; k++) {
                        const char c = raw[i + k];
                        cp <<= 4;
                        if (c >= '0' && c <= '9') cp |= static_cast<unsigned>(c - '0');
                        else if (c >= 'a' && c <= 'f') cp |= static_cast<unsigned>(c - 'a' + 10);
                        else if (c >= 'A' && c <= 'F') cp |= static_cast<unsigned>(c - 'A' + 10);
                        else fail("bad hex digit in escape");
                    }
                    i += len;
                    // encode code point as UTF-8
                    if (cp < 0x80) {
                        out.push_back(static_cast<char>(cp));
                    } else if (cp < 0x800) {
                        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                    } else if (cp < 0x10000) {
                        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                    } else {
                        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
                        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
                        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                    }
                    break;
                }
                default: fail("unknown escape");
            }
        }
        return out;
    }

    Term read_term() {
        skip_ws();
        if (eof()) fail("unexpected end of line");
        if (peek() == '<') {
            const auto end = line.find('>', pos);
            if (end == std::string_view::npos) fail("unterminated IRI");
            auto iri = std::string(line.substr(pos + 1, end - pos - 1));
            pos = end + 1;
            return Term::iri(std::move(iri));
        }
        if (peek() == '_') {
            if (line.substr(pos, 2) != "_:") fail("expected _:");
            pos += 2;
            const auto start = pos;
            while (pos < line.size() &&
                   std::isalnum(static_cast<unsigned char>(line[pos])))
                pos++;
            if (pos == start) fail("empty blank label");
            return Term::blank(std::string(line.substr(start, pos - start)));
        }
        if (peek() == '"') {
            pos++;
            const auto start = pos;
            while (pos < line.size()) {
                if (line[pos] == '\\') {
                    pos += 2;
                    continue;
                }
                if (line[pos] == '"') break;
                pos++;
            }
            if (pos >= line.size()) fail("unterminated literal");
            const auto raw = line.substr(start, pos - start);
            pos++;  // closing quote
            std::string datatype{xsd::kString};
            std::string language;
            if (pos < line.size() && line[pos] == '@') {
                pos++;
                const auto lang_start = pos;
                while (pos < line.size() &&
                       (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '-'))
                    pos++;
                language = std::string(line.substr(lang_start, pos - lang_start));
                datatype = std::string(kRdfLangString);
            } else if (line.substr(pos, 2) == "^^") {
                pos += 2;
                if (eof() || peek() != '<') fail("expected datatype IRI");
                const auto end = line.find('>', pos);
                if (end == std::string_view::npos) fail("unterminated datatype IRI");
                datatype = std::string(line.substr(pos + 1, end - pos - 1));
                pos = end + 1;
            }
            return Term::literal(unescape(raw), datatype, language);
        }
        fail(std::string("unexpected character '") + peek() + "'");
    }
};

}  // namespace

Dataset parse_nquads(std::string_view text) {
    Dataset dataset;
    int line_no = 0;
    for (const auto& raw_line : util::split_lines(text)) {
        line_no++;
        const auto trimmed = util::trim(raw_line);
        if (trimmed.empty() || trimmed.starts_with('#')) continue;
        LineScanner s{trimmed, 0, line_no};
        Term subject = s.read_term();
        Term predicate = s.read_term();
        Term object = s.read_term();
        s.skip_ws();
        std::optional<Term> graph;
        if (!s.eof() && s.peek() != '.') graph = s.read_term();
        s.skip_ws();
        if (s.eof() || s.peek() != '.') s.fail("expected terminating '.'");
        s.pos++;
        s.skip_ws();
        if (!s.eof()) s.fail("trailing content");
        dataset.insert(Quad::make(std::move(subject), std::move(predicate), std::move(object),
                                  std::move(graph)));
    }
    return dataset;
}

}  // namespace aigckit::rdf
