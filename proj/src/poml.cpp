#include "aigckit/poml.hpp"

#include <algorithm>
#include <cctype>

#include "aigckit/util.hpp"

namespace aigckit::poml {

namespace {

constexpr std::string_view kTags[] = {"role", "background", "requirements", "example",
                                      "output-format"};
constexpr std::string_view kNames[] = {"Role", "Background", "Requirements", "Example",
                                       "OutputFormat"};
constexpr std::string_view kHeadings[] = {"Role", "Background", "Requirements", "Example",
                                          "Output Format"};

struct Scanner {
    std::string_view text;
    std::size_t pos = 0;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
    }

    bool consume(std::string_view token) {
        if (text.substr(pos, token.size()) == token) {
            pos += token.size();
            return true;
        }
        return false;
    }

    // Reads a tag name after '<' (letters and '-').
    std::string_view read_tag_name() {
        const auto start = pos;
        while (!eof() && (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '-'))
            pos++;
        return text.substr(start, pos - start);
    }
};

// Parses one module element starting at '<'; body runs to the matching
// closing tag and is taken verbatim.
PromptModule parse_module_element(Scanner& s) {
    if (!s.consume("<")) throw MalformedMarkup("expected '<'");
    const auto tag = s.read_tag_name();
    const auto kind = kind_from_tag(tag);
    if (!kind) throw MalformedMarkup("unknown tag <" + std::string(tag) + ">");
    if (!s.consume(">")) throw MalformedMarkup("expected '>' after <" + std::string(tag));
    const std::string close = "</" + std::string(tag) + ">";
    const auto end = s.text.find(close, s.pos);
    if (end == std::string_view::npos)
        throw MalformedMarkup("unbalanced tag <" + std::string(tag) + ">");
    const auto body = s.text.substr(s.pos, end - s.pos);
    s.pos = end + close.size();
    return PromptModule::make(*kind, body);
}

// <include src="..."/>
std::string parse_include(Scanner& s) {
    if (!s.consume("<include")) throw MalformedMarkup("expected <include");
    s.skip_ws();
    if (!s.consume("src=\"")) throw MalformedMarkup("include needs src=\"...\"");
    const auto end = s.text.find('"', s.pos);
    if (end == std::string_view::npos) throw MalformedMarkup("unterminated src attribute");
    std::string src(s.text.substr(s.pos, end - s.pos));
    s.pos = end + 1;
    s.skip_ws();
    if (!s.consume("/>")) throw MalformedMarkup("include must be self-closing");
    if (src.empty()) throw MalformedMarkup("empty include src");
    return src;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); i++) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

bool contains_ci(std::string_view text, std::string_view needle) {
    const auto lower = util::lowercase(text);
    return lower.find(util::lowercase(needle)) != std::string::npos;
}

// Splits prose into sentences; a sentence ends at . ! or ? followed by
// whitespace (or end of text). Terminators stay with the sentence.
std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); i++) {
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            const auto sentence = util::trim(text.substr(start, i - start + 1));
            if (!sentence.empty()) sentences.emplace_back(sentence);
            start = i + 1;
        }
    }
    const auto tail = util::trim(text.substr(start));
    if (!tail.empty()) sentences.emplace_back(tail);
    return sentences;
}

std::optional<ModuleKind> match_heading_line(std::string_view line) {
    if (!line.starts_with("# ")) return std::nullopt;
    return kind_from_heading(util::trim(line.substr(2)));
}

bool has_module_headings(std::string_view text) {
    for (const auto& line : util::split_lines(text)) {
        if (match_heading_line(line)) return true;
    }
    return false;
}

std::vector<PromptModule> extract_by_headings(const std::string& text) {
    std::array<std::string, 5> sections;
    std::string* current = nullptr;
    std::string preamble;
    for (const auto& line : util::split_lines(text)) {
        if (const auto kind = match_heading_line(line)) {
            current = &sections[static_cast<std::size_t>(*kind)];
            if (!current->empty()) *current += "\n\n";
            continue;
        }
        auto* sink = current ? current : &preamble;
        if (!sink->empty()) sink->push_back('\n');
        *sink += line;
    }
    if (!util::trim(preamble).empty()) {
        auto& req = sections[static_cast<std::size_t>(ModuleKind::Requirements)];
        req = req.empty() ? preamble : preamble + "\n\n" + req;
    }
    std::vector<PromptModule> modules;
    for (const auto kind : all_module_kinds) {
        const auto& body = sections[static_cast<std::size_t>(kind)];
        if (!util::trim(body).empty()) modules.push_back(PromptModule::make(kind, body));
    }
    return modules;
}

// Sentence rule table; precedence is the order below. Documented in
// docs/decompose-rules.md.
ModuleKind classify_sentence(std::string_view sentence) {
    if (starts_with_ci(sentence, "you are")) return ModuleKind::Role;
    if (starts_with_ci(sentence, "for example") || starts_with_ci(sentence, "example:") ||
        starts_with_ci(sentence, "e.g."))
        return ModuleKind::Example;
    if (starts_with_ci(sentence, "background:") || starts_with_ci(sentence, "context:") ||
        starts_with_ci(sentence, "given "))
        return ModuleKind::Background;
    if (contains_ci(sentence, "output") || contains_ci(sentence, "format"))
        return ModuleKind::OutputFormat;
    return ModuleKind::Requirements;
}

std::vector<PromptModule> extract_by_sentences(const std::string& text) {
    std::array<std::string, 5> buckets;
    for (const auto& sentence : split_sentences(text)) {
        auto& bucket = buckets[static_cast<std::size_t>(classify_sentence(sentence))];
        if (!bucket.empty()) bucket.push_back(' ');
        bucket += sentence;
    }
    std::vector<PromptModule> modules;
    for (const auto kind : all_module_kinds) {
        const auto& body = buckets[static_cast<std::size_t>(kind)];
        if (!body.empty()) modules.push_back(PromptModule::make(kind, body));
    }
    return modules;
}

}  // namespace

std::string_view tag_name(ModuleKind kind) { return kTags[static_cast<std::size_t>(kind)]; }
std::string_view kind_name(ModuleKind kind) { return kNames[static_cast<std::size_t>(kind)]; }
std::string_view heading(ModuleKind kind) { return kHeadings[static_cast<std::size_t>(kind)]; }

std::optional<ModuleKind> kind_from_tag(std::string_view tag) {
    for (const auto kind : all_module_kinds)
        if (tag == tag_name(kind)) return kind;
    return std::nullopt;
}

std::optional<ModuleKind> kind_from_name(std::string_view name) {
    for (const auto kind : all_module_kinds)
        if (name == kind_name(kind)) return kind;
    return std::nullopt;
}

std::optional<ModuleKind> kind_from_heading(std::string_view heading_text) {
    for (const auto kind : all_module_kinds)
        if (heading_text == heading(kind)) return kind;
    return std::nullopt;
}

PromptModule PromptModule::make(ModuleKind kind, std::string_view raw_value,
                                std::optional<std::string> source_id) {
    const auto trimmed = util::trim(raw_value);
    if (trimmed.empty()) throw EmptyModule(std::string(tag_name(kind)));
    if (!util::utf8_valid(trimmed)) throw InvalidField("module.value", "not valid UTF-8");
    PromptModule m;
    m.kind = kind;
    m.value = util::normalize_newlines(trimmed);
    m.source_id = std::move(source_id);
    return m;
}

StructuredPrompt StructuredPrompt::make(std::vector<PromptModule> mods) {
    if (mods.empty()) throw EmptyPrompt();
    std::stable_sort(mods.begin(), mods.end(), [](const auto& a, const auto& b) {
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    for (std::size_t i = 1; i < mods.size(); i++) {
        if (mods[i].kind == mods[i - 1].kind) throw DuplicateModuleKind(kind_name(mods[i].kind));
    }
    StructuredPrompt p;
    p.modules = std::move(mods);
    return p;
}

const PromptModule* StructuredPrompt::find(ModuleKind kind) const {
    for (const auto& m : modules)
        if (m.kind == kind) return &m;
    return nullptr;
}

IncludeResolver file_resolver(const std::filesystem::path& base_dir) {
    return [base_dir](const std::string& src) -> std::optional<std::string> {
        const auto path = base_dir / src;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
        return util::read_file(path);
    };
}

PromptModule parse_module_file(std::string_view text, std::optional<ModuleKind> expected) {
    const auto normalized = util::normalize_newlines(text);
    Scanner s{normalized};
    s.skip_ws();
    if (s.eof() || s.peek() != '<') throw MalformedMarkup("module file must start with an element");
    auto module = parse_module_element(s);
    s.skip_ws();
    if (!s.eof()) throw MalformedMarkup("trailing content after module element");
    if (expected && module.kind != *expected)
        throw KindMismatch(kind_name(*expected), kind_name(module.kind));
    return module;
}

StructuredPrompt parse_main_file(std::string_view text, const IncludeResolver& resolver) {
    const auto normalized = util::normalize_newlines(text);
    Scanner s{normalized};
    s.skip_ws();
    if (!s.consume("<poml>")) throw MalformedMarkup("expected <poml> root");
    std::vector<PromptModule> modules;
    for (;;) {
        s.skip_ws();
        if (s.consume("</poml>")) break;
        if (s.eof()) throw MalformedMarkup("unterminated <poml>");
        if (s.peek() != '<') throw MalformedMarkup("unexpected text inside <poml>");
        if (s.text.substr(s.pos).starts_with("<include")) {
            const auto src = parse_include(s);
            const auto resolved = resolver ? resolver(src) : std::nullopt;
            if (!resolved) throw UnresolvedInclude(src);
            auto module = parse_module_file(*resolved);
            module.source_id = src;
            modules.push_back(std::move(module));
        } else {
            modules.push_back(parse_module_element(s));
        }
    }
    s.skip_ws();
    if (!s.eof()) throw MalformedMarkup("trailing content after </poml>");
    return StructuredPrompt::make(std::move(modules));
}

std::vector<PromptModule> parse_module_sequence(std::string_view text) {
    const auto normalized = util::normalize_newlines(text);
    Scanner s{normalized};
    s.skip_ws();
    bool wrapped = s.consume("<poml>");
    std::vector<PromptModule> modules;
    for (;;) {
        s.skip_ws();
        if (wrapped && s.consume("</poml>")) {
            wrapped = false;
            break;
        }
        if (s.eof()) break;
        if (s.peek() != '<') throw MalformedMarkup("unexpected text between module elements");
        modules.push_back(parse_module_element(s));
    }
    if (wrapped) throw MalformedMarkup("unterminated <poml>");
    s.skip_ws();
    if (!s.eof()) throw MalformedMarkup("trailing content after module elements");
    if (modules.empty()) throw MalformedMarkup("no module elements found");
    return modules;
}

std::string render_markdown(const StructuredPrompt& prompt) {
    if (prompt.modules.empty()) throw EmptyPrompt();
    std::string out;
    for (const auto& m : prompt.modules) {
        out += "# ";
        out += heading(m.kind);
        out += "\n\n";
        out += m.value;
        out += "\n\n";
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    out.push_back('\n');
    return out;
}

std::vector<PromptModule> RuleExtractor::extract(const std::string& text) {
    const auto normalized = util::normalize_newlines(text);
    if (has_module_headings(normalized)) return extract_by_headings(normalized);
    return extract_by_sentences(normalized);
}

StructuredPrompt decompose_plain_prompt(const std::string& text, Extractor& extractor) {
    if (util::trim(text).empty()) throw InvalidArgument("plain prompt text is empty");
    auto modules = extractor.extract(text);
    if (modules.empty()) throw ExtractionFailed("extractor produced no modules");
    return StructuredPrompt::make(std::move(modules));
}

std::string module_to_poml(const PromptModule& module) {
    const auto tag = std::string(tag_name(module.kind));
    return "<" + tag + ">" + module.value + "</" + tag + ">\n";
}

std::string main_poml_with_includes(const std::vector<std::string>& srcs) {
    std::string out = "<poml>\n";
    for (const auto& src : srcs) out += "  <include src=\"" + src + "\"/>\n";
    out += "</poml>\n";
    return out;
}

}  // namespace aigckit::poml
