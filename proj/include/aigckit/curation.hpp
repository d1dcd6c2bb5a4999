#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aigckit/envelope.hpp"
#include "aigckit/errors.hpp"
#include "aigckit/generation.hpp"
#include "aigckit/proof.hpp"

namespace aigckit::curation {

struct NoRequirementsModule : Error {
    NoRequirementsModule() : Error("prompt has no Requirements module") {}
};
struct InvalidConstraint : Error {
    explicit InvalidConstraint(const std::string& msg) : Error("invalid constraint: " + msg) {}
};
struct JudgeUnavailable : Error {
    explicit JudgeUnavailable(const std::string& msg) : Error("judge unavailable: " + msg) {}
};
struct UnparseableVerdict : Error {
    explicit UnparseableVerdict(const std::string& reply)
        : Error("judge reply not parseable as yes/no: " + reply) {}
};
struct AllCandidatesUnverifiable : Error {
    explicit AllCandidatesUnverifiable(const std::string& prompt_id)
        : Error("no candidate for prompt " + prompt_id + " passed verification") {}
};
struct NoQuestions : Error {
    NoQuestions() : Error("no questions across the corpus; metrics undefined") {}
};
struct UnverifiedEnvelopeInSelection : Error {
    explicit UnverifiedEnvelopeInSelection(const std::string& id)
        : Error("selected envelope fails verification: " + id) {}
};

struct RequirementQuestion {
    std::string id;         // unique within prompt_id
    std::string prompt_id;
    std::string question;   // natural-language yes/no question
    std::optional<std::string> check;  // constraint DSL form
};

enum class Verdict { Yes, No };
enum class JudgeKind { Rule, External };

std::string_view to_string(Verdict verdict);
std::string_view to_string(JudgeKind kind);

struct Judgment {
    std::string question_id;
    Verdict verdict;
    JudgeKind judge;
    std::optional<std::string> rationale;
};

struct CandidateScore {
    std::string envelope_id;
    std::vector<Judgment> judgments;
    std::int64_t satisfied = 0;
    std::int64_t total = 0;
    bool all_satisfied = false;

    static CandidateScore make(std::string envelope_id, std::vector<Judgment> judgments);
};

struct ExcludedCandidate {
    std::string envelope_id;
    std::string reason;
};

struct PromptEvaluation {
    std::string prompt_id;
    std::vector<CandidateScore> scores;
    std::vector<ExcludedCandidate> excluded;
};

/// Splits the Requirements module on numbered/bulleted lines (whole text as
/// one question when no list markers are present); external question files
/// override this derivation.
std::vector<RequirementQuestion> derive_questions(const poml::StructuredPrompt& prompt,
                                                  const std::string& prompt_id = "");

/// Deterministic machine check. Grammar and semantics in docs/judge-rules.md.
class Constraint {
   public:
    enum class Kind {
        MaxWords,
        MinWords,
        MustInclude,
        MustNotInclude,
        MatchesRegex,
        JsonParseable,
        LineCountBetween,
    };

    static Constraint parse(std::string_view text);

    bool evaluate(std::string_view content) const;
    std::string describe(std::string_view content) const;  // rationale text
    Kind kind() const { return kind_; }

   private:
    Kind kind_ = Kind::JsonParseable;
    std::string text_arg_;
    std::int64_t a_ = 0;
    std::int64_t b_ = 0;
    std::shared_ptr<const void> regex_;  // compiled std::regex when MatchesRegex
};

Judgment judge_rule(std::string_view content, const RequirementQuestion& question);

/// Judges one question against one content; must be safe for concurrent
/// calls.
class Judge {
   public:
    virtual ~Judge() = default;
    virtual Judgment judge(const RequirementQuestion& question, const std::string& content) = 0;
};

class RuleJudge : public Judge {
   public:
    Judgment judge(const RequirementQuestion& question, const std::string& content) override;
};

inline constexpr std::string_view kJudgePromptVersion = "v1";
std::string judge_prompt(const std::string& question, const std::string& content);
std::optional<Verdict> parse_verdict(std::string_view reply);

struct ExternalJudgeConfig {
    vc::ModelRef model = vc::ModelRef::make("https://example.org/judge", "judge");
    std::int64_t max_tokens = 8;
    int max_retries = 2;  // retries after the first attempt
};

class ExternalJudge : public Judge {
   public:
    ExternalJudge(gen::GenerationClient& client, ExternalJudgeConfig config = {});
    Judgment judge(const RequirementQuestion& question, const std::string& content) override;

   private:
    gen::GenerationClient& client_;
    ExternalJudgeConfig config_;
};

Judgment judge_external(const std::string& content, const RequirementQuestion& question,
                        gen::GenerationClient& client, const ExternalJudgeConfig& config = {});

/// Verifies every envelope first (failures are excluded and reported), then
/// judges survivors question by question. Judged content is the envelope
/// value with any leading thought block stripped.
PromptEvaluation evaluate_candidates(const std::string& prompt_id,
                                     const std::vector<vc::AigcEnvelope>& envelopes,
                                     const std::vector<RequirementQuestion>& questions,
                                     Judge& judge, const proof::KeyLookup& resolve_key,
                                     std::size_t concurrency = 1);

struct CandidateMeta {
    std::optional<double> confidence_mean;
    std::string model_label;
};

/// Argmax of satisfied/total; ties broken by higher confidence mean, then
/// lexicographically smaller model label, then smaller envelope id.
std::string select_best(const std::vector<CandidateScore>& scores,
                        const std::map<std::string, CandidateMeta>& meta);

/// Uniform per-prompt choice, reproducible under the seed.
std::map<std::string, std::string> select_random(
    const std::map<std::string, std::vector<std::string>>& candidates_per_prompt,
    std::uint64_t seed);

struct Metrics {
    double rfr = 0;
    double frfr = 0;
    std::int64_t total_questions = 0;
    std::int64_t satisfied_questions = 0;
    std::int64_t prompts = 0;
    std::int64_t fully_satisfied_prompts = 0;
    std::int64_t vacuous_prompts = 0;  // prompts with zero questions
};

/// One selected CandidateScore per prompt. RFR = Σ satisfied / Σ total,
/// FRFR = fully satisfied prompts / prompts (vacuous prompts count as
/// fully satisfied but contribute no questions).
Metrics compute_metrics(const std::vector<CandidateScore>& selected);

/// "RFR   66.67%\nFRFR  33.33%\n"
std::string format_metrics_table(const Metrics& metrics);

struct CurationReport {
    std::string policy;  // "best" | "random"
    std::optional<std::uint64_t> seed;
    std::vector<PromptEvaluation> evaluations;
    std::map<std::string, std::string> selected;  // prompt_id -> envelope_id
    Metrics metrics;
};

std::string report_to_json(const CurationReport& report);
CurationReport report_from_json(std::string_view text);

/// Questions file: JSONL of {prompt_id, id, question, check?}.
std::vector<RequirementQuestion> parse_questions_jsonl(std::string_view text);
std::string questions_to_jsonl(const std::vector<RequirementQuestion>& questions);

struct SelectedEnvelope {
    std::string prompt_id;
    vc::AigcEnvelope envelope;
};

/// JSONL fine-tuning export, lines in prompt_id order: {"prompt": rendered
/// Markdown, "completion": value with thought stripped, "meta": {...}}.
/// Every envelope must verify.
std::string export_finetune(std::vector<SelectedEnvelope> selection,
                            const proof::KeyLookup& resolve_key);

}  // namespace aigckit::curation
