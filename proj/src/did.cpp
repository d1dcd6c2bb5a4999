#include "aigckit/did.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "aigckit/util.hpp"

namespace aigckit::did {

using nlohmann::json;

namespace {

constexpr std::string_view kDidWebPrefix = "did:web:";

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); i++) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const auto hex = std::string(s.substr(i + 1, 2));
            out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); i++) {
        if (i == s.size() || s[i] == sep) {
            parts.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

// Resolves a possibly-relative method reference ("#key-1") against the
// document id.
std::string absolute_method_id(const std::string& ref, const std::string& doc_id) {
    if (ref.starts_with('#')) return doc_id + ref;
    return ref;
}

}  // namespace

std::string did_web_to_url(std::string_view did) {
    if (!did.starts_with(kDidWebPrefix)) throw NotDidWeb(std::string(did));
    const auto method_specific = did.substr(kDidWebPrefix.size());
    const auto segments = split_on(method_specific, ':');
    const auto host = percent_decode(segments.front());
    if (host.empty()) throw EmptyHost();
    if (segments.size() == 1) return "https://" + host + "/.well-known/did.json";
    std::string url = "https://" + host;
    for (std::size_t i = 1; i < segments.size(); i++) {
        if (segments[i].empty()) throw NotDidWeb(std::string(did));
        url += "/" + percent_decode(segments[i]);
    }
    return url + "/did.json";
}

std::optional<std::string> url_to_did_web(std::string_view url) {
    if (!url.starts_with("https://")) return std::nullopt;
    auto rest = url.substr(8);
    if (rest.ends_with("/.well-known/did.json")) {
        const auto host = rest.substr(0, rest.size() - std::string_view("/.well-known/did.json").size());
        if (host.empty() || host.find('/') != std::string_view::npos) return std::nullopt;
        return std::string(kDidWebPrefix) + std::string(host);
    }
    if (!rest.ends_with("/did.json")) return std::nullopt;
    rest = rest.substr(0, rest.size() - std::string_view("/did.json").size());
    std::string did(kDidWebPrefix);
    bool first = true;
    for (const auto& segment : split_on(rest, '/')) {
        if (segment.empty()) return std::nullopt;
        if (!first) did += ":";
        did += segment;
        first = false;
    }
    return did;
}

std::string fixture_filename(const std::string& did) {
    std::string name = did;
    std::replace(name.begin(), name.end(), ':', '_');
    return name + ".json";
}

Fetcher http_fetcher(bool allow_insecure_http) {
    return [allow_insecure_http](const std::string& url) -> FetchResult {
        std::string host_port, path;
        bool https;
        if (url.starts_with("https://")) {
            https = true;
            const auto rest = url.substr(8);
            const auto slash = rest.find('/');
            host_port = rest.substr(0, slash);
            path = slash == std::string::npos ? "/" : rest.substr(slash);
        } else if (url.starts_with("http://")) {
            if (!allow_insecure_http)
                throw Error("plain HTTP refused (pass --insecure-http to allow): " + url);
            https = false;
            const auto rest = url.substr(7);
            const auto slash = rest.find('/');
            host_port = rest.substr(0, slash);
            path = slash == std::string::npos ? "/" : rest.substr(slash);
        } else {
            throw Error("unsupported URL scheme: " + url);
        }
        auto to_result = [&](const httplib::Result& res) -> FetchResult {
            if (!res) return {0, "connection failed: " + httplib::to_string(res.error())};
            return {res->status, res->body};
        };
        if (https) {
            httplib::SSLClient client(host_port);
            client.set_read_timeout(30, 0);
            return to_result(client.Get(path));
        }
        httplib::Client client("http://" + host_port);
        client.set_read_timeout(30, 0);
        return to_result(client.Get(path));
    };
}

Fetcher dir_fetcher(std::filesystem::path dir) {
    return [dir = std::move(dir)](const std::string& url) -> FetchResult {
        const auto did = url_to_did_web(url);
        if (!did) return {404, "not a did:web document URL: " + url};
        const auto path = dir / fixture_filename(*did);
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) return {404, "no fixture: " + path.string()};
        return {200, util::read_file(path)};
    };
}

DidDocument parse_did_document(std::string_view json_text, const std::string& expected_did) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& ex) {
        throw MalformedDocument(std::string("invalid JSON: ") + ex.what());
    }
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string())
        throw MalformedDocument("missing id");
    DidDocument document;
    document.id = doc["id"].get<std::string>();
    if (document.id != expected_did) throw DocumentIdMismatch(expected_did, document.id);

    if (const auto it = doc.find("verificationMethod"); it != doc.end()) {
        if (!it->is_array()) throw MalformedDocument("verificationMethod must be an array");
        for (const auto& entry : *it) {
            VerificationMethod method;
            try {
                method.id = absolute_method_id(entry.at("id").get<std::string>(), document.id);
                method.type = entry.at("type").get<std::string>();
                method.controller = entry.value("controller", document.id);
                method.public_key_multibase = entry.at("publicKeyMultibase").get<std::string>();
            } catch (const json::exception& ex) {
                throw MalformedDocument(std::string("verificationMethod entry: ") + ex.what());
            }
            document.verification_methods.push_back(std::move(method));
        }
    }
    if (const auto it = doc.find("assertionMethod"); it != doc.end()) {
        if (!it->is_array()) throw MalformedDocument("assertionMethod must be an array");
        for (const auto& entry : *it) {
            if (entry.is_string()) {
                document.assertion_methods.push_back(
                    absolute_method_id(entry.get<std::string>(), document.id));
            } else if (entry.is_object() && entry.contains("id")) {
                // embedded method: usable for assertion and key lookup
                VerificationMethod method;
                try {
                    method.id = absolute_method_id(entry.at("id").get<std::string>(), document.id);
                    method.type = entry.at("type").get<std::string>();
                    method.controller = entry.value("controller", document.id);
                    method.public_key_multibase = entry.at("publicKeyMultibase").get<std::string>();
                } catch (const json::exception& ex) {
                    throw MalformedDocument(std::string("embedded assertionMethod: ") + ex.what());
                }
                document.assertion_methods.push_back(method.id);
                document.verification_methods.push_back(std::move(method));
            } else {
                throw MalformedDocument("assertionMethod entries must be strings or methods");
            }
        }
    }
    // every assertion reference must resolve to a known method
    for (const auto& ref : document.assertion_methods) {
        const bool known = std::any_of(document.verification_methods.begin(),
                                       document.verification_methods.end(),
                                       [&](const auto& m) { return m.id == ref; });
        if (!known) throw MalformedDocument("assertionMethod references unknown method: " + ref);
    }
    return document;
}

DidDocument resolve(const std::string& did, const Fetcher& fetch) {
    const auto url = did_web_to_url(did);
    const auto result = fetch(url);
    if (result.status != 200) throw FetchFailed(result.status, url);
    return parse_did_document(result.body, did);
}

std::vector<unsigned char> find_verification_key(const DidDocument& document,
                                                 const std::string& did_url) {
    if (did_url.find('#') == std::string::npos)
        throw InvalidArgument("DID URL must contain a key fragment: " + did_url);
    const auto it = std::find_if(document.verification_methods.begin(),
                                 document.verification_methods.end(),
                                 [&](const auto& m) { return m.id == did_url; });
    if (it == document.verification_methods.end()) throw KeyNotFound(did_url);
    const bool authorized =
        std::find(document.assertion_methods.begin(), document.assertion_methods.end(), did_url) !=
        document.assertion_methods.end();
    if (!authorized) throw NotAuthorizedForAssertion(did_url);

    std::vector<unsigned char> decoded;
    try {
        decoded = proof::multibase_decode(it->public_key_multibase);
    } catch (const Error& e) {
        throw WrongKeyType(e.what());
    }
    if (decoded.size() != 34)
        throw WrongKeyType("expected 34 bytes (multicodec + key), got " +
                           std::to_string(decoded.size()));
    if (decoded[0] != 0xED || decoded[1] != 0x01)
        throw WrongKeyType("missing Ed25519 multicodec prefix 0xED 0x01");
    return {decoded.begin() + 2, decoded.end()};
}

std::string did_document_json(const std::string& did,
                              std::span<const unsigned char, 32> public_key,
                              const std::string& fragment) {
    const auto method_id = did + "#" + fragment;
    json doc;
    doc["@context"] = {"https://www.w3.org/ns/did/v1", "https://w3id.org/security/multikey/v1"};
    doc["id"] = did;
    doc["verificationMethod"] = json::array({json{{"id", method_id},
                                                  {"type", "Multikey"},
                                                  {"controller", did},
                                                  {"publicKeyMultibase",
                                                   proof::public_key_multibase(public_key)}}});
    doc["assertionMethod"] = json::array({method_id});
    return doc.dump(2) + "\n";
}

CachingResolver::CachingResolver(Options options) : options_(std::move(options)) {
    fetcher_ = options_.fixture_dir ? dir_fetcher(*options_.fixture_dir)
                                    : http_fetcher(options_.insecure_http);
}

CachingResolver::CachingResolver(Options options, Fetcher fetcher)
    : options_(std::move(options)), fetcher_(std::move(fetcher)) {}

DidDocument CachingResolver::resolve(const std::string& did) {
    const auto now = std::chrono::steady_clock::now();
    {
        std::lock_guard lock(mutex_);
        const auto it = cache_.find(did);
        if (it != cache_.end() && now - it->second.fetched_at < options_.ttl)
            return it->second.document;
    }
    auto document = did::resolve(did, fetcher_);
    {
        std::lock_guard lock(mutex_);
        cache_[did] = CacheEntry{document, now};
    }
    return document;
}

proof::KeyLookup CachingResolver::key_lookup() {
    return [this](const std::string& did_url) -> std::optional<std::vector<unsigned char>> {
        try {
            const auto did = did_url.substr(0, did_url.find('#'));
            return find_verification_key(resolve(did), did_url);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
}

}  // namespace aigckit::did
