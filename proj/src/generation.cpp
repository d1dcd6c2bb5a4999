#include "aigckit/generation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "aigckit/util.hpp"

namespace aigckit::gen {

using nlohmann::json;

TokenLogProb TokenLogProb::make(std::string token, double logprob) {
    if (!(logprob <= 0) || !std::isfinite(logprob))
        throw InvalidField("token.logprob", "must be finite and <= 0");
    return TokenLogProb{std::move(token), logprob};
}

vc::ConfidenceStats compute_confidence(std::span<const TokenLogProb> tokens) {
    if (tokens.empty()) throw EmptyTokenList();
    double sum = 0, compensation = 0;
    double lo = tokens.front().logprob, hi = tokens.front().logprob;
    for (const auto& t : tokens) {
        // Kahan step
        const double y = t.logprob - compensation;
        const double s = sum + y;
        compensation = (s - sum) - y;
        sum = s;
        lo = std::min(lo, t.logprob);
        hi = std::max(hi, t.logprob);
    }
    const double mean = sum / static_cast<double>(tokens.size());
    return vc::ConfidenceStats::make(mean, lo, hi, static_cast<std::int64_t>(tokens.size()));
}

const std::vector<std::string>& default_thought_tags() {
    static const std::vector<std::string> tags = {"think", "thinking", "reasoning"};
    return tags;
}

ThoughtSplit extract_thought(std::string_view text, const std::vector<std::string>& tags) {
    std::size_t start = 0;
    while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) start++;
    for (const auto& tag : tags) {
        const std::string open = "<" + tag + ">";
        const std::string close = "</" + tag + ">";
        if (text.substr(start, open.size()) != open) continue;
        const auto body_start = start + open.size();
        const auto close_pos = text.find(close, body_start);
        if (close_pos == std::string_view::npos) break;  // unclosed: keep text intact
        const auto body = text.substr(body_start, close_pos - body_start);
        if (util::trim(body).empty()) break;             // empty block: nothing to extract
        auto rest = text.substr(close_pos + close.size());
        while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front())))
            rest.remove_prefix(1);
        return ThoughtSplit{vc::ThoughtTrace::make(std::string(body), tag), std::string(rest)};
    }
    return ThoughtSplit{std::nullopt, std::string(text)};
}

GenerationResult generate(const std::string& prompt_markdown, const vc::ModelRef& model,
                          const vc::HyperParameters& hyper, GenerationClient& client) {
    GenerationRequest request;
    request.prompt_markdown = prompt_markdown;
    request.model = model;
    request.hyper = hyper;
    auto result = client.generate(request);
    // Token coverage must match the text exactly; otherwise confidence is
    // not computable and the tokens are dropped.
    if (!result.tokens.empty()) {
        std::string joined;
        for (const auto& t : result.tokens) joined += t.token;
        if (joined != result.text) {
            result.tokens.clear();
            result.logprobs_available = false;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// HTTP client

namespace {

struct ParsedUrl {
    bool https = true;
    std::string host_port;
    std::string base_path;
};

ParsedUrl parse_endpoint(const std::string& endpoint) {
    ParsedUrl u;
    std::string rest;
    if (endpoint.starts_with("https://")) {
        u.https = true;
        rest = endpoint.substr(8);
    } else if (endpoint.starts_with("http://")) {
        u.https = false;
        rest = endpoint.substr(7);
    } else {
        throw InvalidArgument("endpoint must be an http(s) URL: " + endpoint);
    }
    const auto slash = rest.find('/');
    u.host_port = rest.substr(0, slash);
    if (slash != std::string::npos) {
        u.base_path = rest.substr(slash);
        while (u.base_path.size() > 1 && u.base_path.back() == '/') u.base_path.pop_back();
        if (u.base_path == "/") u.base_path.clear();
    }
    if (u.host_port.empty()) throw InvalidArgument("endpoint has no host: " + endpoint);
    return u;
}

json chat_request_body(const GenerationRequest& request) {
    json body;
    body["model"] = request.model.label;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt_markdown}}});
    body["temperature"] = request.hyper.temperature;
    body["max_tokens"] = request.hyper.max_tokens;
    if (request.want_logprobs) body["logprobs"] = true;
    for (const auto& [name, value] : request.hyper.extra)
        std::visit([&](const auto& v) { body[name] = v; }, value);
    return body;
}

GenerationResult parse_chat_response(const json& body, const GenerationRequest& request) {
    GenerationResult result;
    result.model = request.model;
    result.hyper = request.hyper;
    const auto choices = body.find("choices");
    if (choices == body.end() || !choices->is_array() || choices->empty())
        throw EndpointError(200, "response has no choices");
    const auto& choice = (*choices)[0];
    const auto message = choice.find("message");
    if (message == choice.end() || !message->contains("content"))
        throw EndpointError(200, "response has no message content");
    result.text = (*message)["content"].get<std::string>();
    const auto logprobs = choice.find("logprobs");
    if (logprobs != choice.end() && logprobs->is_object() && logprobs->contains("content")) {
        for (const auto& entry : (*logprobs)["content"]) {
            const double lp = entry.at("logprob").get<double>();
            // clamp float noise above certainty
            result.tokens.push_back(
                TokenLogProb::make(entry.at("token").get<std::string>(), std::min(lp, 0.0)));
        }
        result.logprobs_available = !result.tokens.empty();
    }
    return result;
}

}  // namespace

HttpGenerationClient::HttpGenerationClient(std::string endpoint, bool allow_insecure_http)
    : endpoint_(std::move(endpoint)), allow_insecure_http_(allow_insecure_http) {}

GenerationResult HttpGenerationClient::generate(const GenerationRequest& request) {
    const auto url = parse_endpoint(endpoint_);
    if (!url.https && !allow_insecure_http_)
        throw InvalidArgument("plain HTTP endpoint refused (pass --insecure-http to allow)");
    const auto body = chat_request_body(request).dump();
    const auto path = url.base_path + "/v1/chat/completions";

    auto handle = [&](const httplib::Result& res) -> GenerationResult {
        if (!res) throw EndpointError(0, "connection failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            std::optional<std::string> retry_after;
            if (res->has_header("Retry-After")) retry_after = res->get_header_value("Retry-After");
            throw EndpointError(res->status, res->body, retry_after);
        }
        json parsed;
        try {
            parsed = json::parse(res->body);
        } catch (const json::exception& ex) {
            throw EndpointError(200, std::string("unparseable response body: ") + ex.what());
        }
        return parse_chat_response(parsed, request);
    };

    if (url.https) {
        httplib::SSLClient client(url.host_port);
        client.set_read_timeout(120, 0);
        return handle(client.Post(path, body, "application/json"));
    }
    httplib::Client client("http://" + url.host_port);
    client.set_read_timeout(120, 0);
    return handle(client.Post(path, body, "application/json"));
}

// ---------------------------------------------------------------------------
// Client-backed extractor

ClientExtractor::ClientExtractor(GenerationClient& client, vc::ModelRef model,
                                 vc::HyperParameters hyper)
    : client_(client), model_(std::move(model)), hyper_(std::move(hyper)) {}

std::vector<poml::PromptModule> ClientExtractor::extract(const std::string& text) {
    GenerationRequest request;
    request.prompt_markdown =
        "Split the prompt below into POML modules. Reply with nothing but POML "
        "elements, using any of <role>, <background>, <requirements>, <example>, "
        "<output-format>, at most one of each. Put instruction text that fits "
        "nowhere else inside <requirements>.\n\nPrompt:\n" +
        text;
    request.model = model_;
    request.hyper = hyper_;
    request.want_logprobs = false;
    GenerationResult result;
    try {
        result = client_.generate(request);
    } catch (const EndpointError& e) {
        throw poml::ExtractionFailed(e.what());
    }
    if (util::trim(result.text).empty()) throw poml::ExtractionFailed("empty model reply");
    try {
        return poml::parse_module_sequence(result.text);
    } catch (const poml::MalformedMarkup& e) {
        throw poml::ExtractionFailed(e.what());
    } catch (const poml::EmptyModule& e) {
        throw poml::ExtractionFailed(e.what());
    }
}

// ---------------------------------------------------------------------------
// Mock client

MockGenerationClient MockGenerationClient::from_file(const std::filesystem::path& path) {
    MockGenerationClient client;
    const auto doc = json::parse(util::read_file(path));
    auto parse_response = [](const json& j) {
        Response r;
        r.text = j.at("text").get<std::string>();
        if (j.contains("logprobs")) {
            for (const auto& pair : j["logprobs"])
                r.tokens.push_back(
                    TokenLogProb::make(pair.at(0).get<std::string>(), pair.at(1).get<double>()));
        }
        return r;
    };
    if (doc.contains("responses")) {
        for (const auto& [prompt, response] : doc["responses"].items())
            client.responses_[prompt] = parse_response(response);
    }
    if (doc.contains("default")) client.default_ = parse_response(doc["default"]);
    return client;
}

void MockGenerationClient::script(std::string prompt, Response response) {
    responses_[std::move(prompt)] = std::move(response);
}

void MockGenerationClient::set_default(Response response) { default_ = std::move(response); }

GenerationResult MockGenerationClient::generate(const GenerationRequest& request) {
    GenerationResult result;
    result.model = request.model;
    result.hyper = request.hyper;
    const Response* response = nullptr;
    if (const auto it = responses_.find(request.prompt_markdown); it != responses_.end())
        response = &it->second;
    else if (default_)
        response = &*default_;
    if (response) {
        result.text = response->text;
        result.tokens = response->tokens;
        result.logprobs_available = !result.tokens.empty();
        return result;
    }
    // Hash-seeded synthesis: stable text and logprobs for any prompt.
    const auto digest = util::sha256(request.prompt_markdown);
    const auto hex = util::to_hex(digest);
    result.text = "Deterministic mock completion " + hex.substr(0, 12) +
                  " produced for testing; no live model was called.";
    std::size_t word_start = 0;
    std::size_t token_index = 0;
    for (std::size_t i = 0; i <= result.text.size(); i++) {
        if (i == result.text.size() || result.text[i] == ' ') {
            const auto token = result.text.substr(word_start, i - word_start) +
                               (i < result.text.size() ? " " : "");
            if (!token.empty()) {
                const double lp =
                    -0.05 - static_cast<double>(digest[token_index % digest.size()]) / 512.0;
                result.tokens.push_back(TokenLogProb::make(token, lp));
                token_index++;
            }
            word_start = i + 1;
        }
    }
    result.logprobs_available = true;
    return result;
}

}  // namespace aigckit::gen
