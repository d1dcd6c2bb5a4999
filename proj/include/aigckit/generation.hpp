#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aigckit/envelope.hpp"
#include "aigckit/errors.hpp"

namespace aigckit::gen {

struct TokenLogProb {
    std::string token;
    double logprob = 0;  // natural log of probability, <= 0

    static TokenLogProb make(std::string token, double logprob);
    bool operator==(const TokenLogProb&) const = default;
};

struct EmptyTokenList : Error {
    EmptyTokenList() : Error("cannot compute confidence over zero tokens") {}
};

struct EndpointError : Error {
    EndpointError(int status_, std::string body_, std::optional<std::string> retry_after_ = {})
        : Error("endpoint error " + std::to_string(status_) +
                (retry_after_ ? " (retry-after: " + *retry_after_ + ")" : "") + ": " + body_),
          status(status_),
          body(std::move(body_)),
          retry_after(std::move(retry_after_)) {}
    int status;
    std::string body;
    std::optional<std::string> retry_after;
};

/// mean/min/max/count over the logprobs, perplexity = exp(-mean).
/// Compensated summation; permutation-invariant.
vc::ConfidenceStats compute_confidence(std::span<const TokenLogProb> tokens);

const std::vector<std::string>& default_thought_tags();  // think, thinking, reasoning

struct ThoughtSplit {
    std::optional<vc::ThoughtTrace> thought;
    std::string content;
};

/// Splits a leading <tag>...</tag> reasoning block off the text. Only a
/// block at the start (after whitespace) is recognized; an unclosed or
/// empty block yields no thought and leaves the text unchanged.
ThoughtSplit extract_thought(std::string_view text,
                             const std::vector<std::string>& tags = default_thought_tags());

struct GenerationRequest {
    std::string prompt_markdown;
    vc::ModelRef model;
    vc::HyperParameters hyper;
    bool want_logprobs = true;
};

struct GenerationResult {
    std::string text;
    std::vector<TokenLogProb> tokens;  // empty when the endpoint gave no logprobs
    vc::ModelRef model;
    vc::HyperParameters hyper;
    bool logprobs_available = false;
};

class GenerationClient {
   public:
    virtual ~GenerationClient() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

GenerationResult generate(const std::string& prompt_markdown, const vc::ModelRef& model,
                          const vc::HyperParameters& hyper, GenerationClient& client);

/// Chat-completion-style HTTP client. Field mapping documented in
/// docs/generation-protocol.md.
class HttpGenerationClient : public GenerationClient {
   public:
    explicit HttpGenerationClient(std::string endpoint, bool allow_insecure_http = false);
    GenerationResult generate(const GenerationRequest& request) override;

   private:
    std::string endpoint_;
    bool allow_insecure_http_;
};

/// Prompt decomposition through a model endpoint: asks for POML module
/// elements and parses the reply. Any transport error, unparseable reply,
/// or empty result raises poml::ExtractionFailed.
class ClientExtractor : public poml::Extractor {
   public:
    ClientExtractor(GenerationClient& client, vc::ModelRef model, vc::HyperParameters hyper);
    std::vector<poml::PromptModule> extract(const std::string& text) override;

   private:
    GenerationClient& client_;
    vc::ModelRef model_;
    vc::HyperParameters hyper_;
};

/// Deterministic stand-in for a model endpoint. Scripted entries replay
/// recorded responses keyed by exact prompt text; anything else falls back
/// to the "default" entry, then to hash-seeded synthesis.
class MockGenerationClient : public GenerationClient {
   public:
    struct Response {
        std::string text;
        std::vector<TokenLogProb> tokens;
    };

    MockGenerationClient() = default;
    static MockGenerationClient from_file(const std::filesystem::path& path);

    void script(std::string prompt, Response response);
    void set_default(Response response);

    GenerationResult generate(const GenerationRequest& request) override;

   private:
    std::map<std::string, Response> responses_;
    std::optional<Response> default_;
};

}  // namespace aigckit::gen
