#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aigckit/errors.hpp"

namespace aigckit::poml {

/// The five prompt module kinds, in fixed rank order.
enum class ModuleKind { Role = 0, Background = 1, Requirements = 2, Example = 3, OutputFormat = 4 };

constexpr std::array<ModuleKind, 5> all_module_kinds = {
    ModuleKind::Role, ModuleKind::Background, ModuleKind::Requirements, ModuleKind::Example,
    ModuleKind::OutputFormat};

std::string_view tag_name(ModuleKind kind);   // "role" ... "output-format"
std::string_view kind_name(ModuleKind kind);  // "Role" ... "OutputFormat"
std::string_view heading(ModuleKind kind);    // "Role" ... "Output Format"
std::optional<ModuleKind> kind_from_tag(std::string_view tag);
std::optional<ModuleKind> kind_from_name(std::string_view name);
std::optional<ModuleKind> kind_from_heading(std::string_view heading_text);

struct MalformedMarkup : Error {
    explicit MalformedMarkup(const std::string& msg) : Error("malformed markup: " + msg) {}
};
struct EmptyModule : Error {
    explicit EmptyModule(const std::string& tag) : Error("module <" + tag + "> has a blank body") {}
};
struct KindMismatch : Error {
    KindMismatch(std::string_view expected, std::string_view got)
        : Error("expected module kind " + std::string(expected) + ", got " + std::string(got)) {}
};
struct UnresolvedInclude : Error {
    explicit UnresolvedInclude(const std::string& src) : Error("cannot resolve include: " + src) {}
};
struct DuplicateModuleKind : Error {
    explicit DuplicateModuleKind(std::string_view kind)
        : Error("duplicate module kind: " + std::string(kind)) {}
};
struct EmptyPrompt : Error {
    EmptyPrompt() : Error("prompt has no modules") {}
};
struct ExtractionFailed : Error {
    explicit ExtractionFailed(const std::string& msg) : Error("extraction failed: " + msg) {}
};

struct PromptModule {
    ModuleKind kind;
    std::string value;  // trimmed, non-empty
    std::optional<std::string> source_id;

    /// Trims and validates; throws EmptyModule when nothing remains.
    static PromptModule make(ModuleKind kind, std::string_view raw_value,
                             std::optional<std::string> source_id = {});

    bool operator==(const PromptModule&) const = default;
};

struct StructuredPrompt {
    std::vector<PromptModule> modules;  // sorted by kind rank, at most one per kind
    std::optional<std::string> rendered_cache;

    /// Sorts by kind rank and validates uniqueness / non-emptiness.
    static StructuredPrompt make(std::vector<PromptModule> mods);

    const PromptModule* find(ModuleKind kind) const;

    bool operator==(const StructuredPrompt& other) const { return modules == other.modules; }
};

/// Maps an include `src` string to module file text; nullopt when unknown.
using IncludeResolver = std::function<std::optional<std::string>(const std::string& src)>;

/// Resolver that reads paths relative to a base directory.
IncludeResolver file_resolver(const std::filesystem::path& base_dir);

PromptModule parse_module_file(std::string_view text, std::optional<ModuleKind> expected = {});
StructuredPrompt parse_main_file(std::string_view text, const IncludeResolver& resolver);

/// One or more consecutive module elements, optionally wrapped in <poml>
/// (no includes). Used to read model-produced decompositions.
std::vector<PromptModule> parse_module_sequence(std::string_view text);

/// "# <Heading>\n\n<value>\n\n" per module in kind order, trimmed to one
/// trailing newline. Pure; byte-identical across calls.
std::string render_markdown(const StructuredPrompt& prompt);

/// Strategy for turning a plain prompt into modules.
class Extractor {
   public:
    virtual ~Extractor() = default;
    virtual std::vector<PromptModule> extract(const std::string& text) = 0;
};

/// Deterministic built-in extractor. When the text contains rendered
/// Markdown module headings it splits on them; otherwise it classifies
/// sentences by the rule table in docs/decompose-rules.md. Unmatched text
/// lands in Requirements.
class RuleExtractor : public Extractor {
   public:
    std::vector<PromptModule> extract(const std::string& text) override;
};

StructuredPrompt decompose_plain_prompt(const std::string& text, Extractor& extractor);

/// POML-lite serialization of a single module file.
std::string module_to_poml(const PromptModule& module);
/// Main file whose children are `<include src="..."/>` entries.
std::string main_poml_with_includes(const std::vector<std::string>& srcs);

}  // namespace aigckit::poml
