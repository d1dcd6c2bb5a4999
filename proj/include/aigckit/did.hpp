#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aigckit/errors.hpp"
#include "aigckit/proof.hpp"

namespace aigckit::did {

struct NotDidWeb : Error {
    explicit NotDidWeb(const std::string& did) : Error("not a did:web identifier: " + did) {}
};
struct EmptyHost : Error {
    EmptyHost() : Error("did:web has an empty host") {}
};
struct FetchFailed : Error {
    FetchFailed(int status_, const std::string& url)
        : Error("fetch failed (" + std::to_string(status_) + "): " + url), status(status_) {}
    int status;
};
struct DocumentIdMismatch : Error {
    DocumentIdMismatch(const std::string& expected, const std::string& got)
        : Error("DID document id " + got + " does not match " + expected) {}
};
struct MalformedDocument : Error {
    explicit MalformedDocument(const std::string& msg) : Error("malformed DID document: " + msg) {}
};
struct KeyNotFound : Error {
    explicit KeyNotFound(const std::string& did_url)
        : Error("verification method not found: " + did_url) {}
};
struct NotAuthorizedForAssertion : Error {
    explicit NotAuthorizedForAssertion(const std::string& did_url)
        : Error("verification method not authorized for assertion: " + did_url) {}
};
struct WrongKeyType : Error {
    explicit WrongKeyType(const std::string& why) : Error("wrong key type: " + why) {}
};

struct VerificationMethod {
    std::string id;    // DID URL
    std::string type;  // e.g. "Multikey"
    std::string controller;
    std::string public_key_multibase;
};

struct DidDocument {
    std::string id;
    std::vector<VerificationMethod> verification_methods;
    std::vector<std::string> assertion_methods;  // DID URLs
};

/// did:web -> HTTPS URL of the hosted document. Path-less DIDs map to
/// /.well-known/did.json; path segments map to /<segments>/did.json.
std::string did_web_to_url(std::string_view did);

/// Inverse of did_web_to_url; used by the fixture fetcher.
std::optional<std::string> url_to_did_web(std::string_view url);

/// Fixture file name for a DID: ':' replaced by '_', ".json" appended.
std::string fixture_filename(const std::string& did);

struct FetchResult {
    int status = 0;
    std::string body;
};

using Fetcher = std::function<FetchResult(const std::string& url)>;

/// HTTPS fetcher (plain HTTP refused unless allow_insecure_http).
Fetcher http_fetcher(bool allow_insecure_http = false);
/// Serves DID documents from a fixture directory laid out by fixture_filename.
Fetcher dir_fetcher(std::filesystem::path dir);

DidDocument parse_did_document(std::string_view json_text, const std::string& expected_did);
DidDocument resolve(const std::string& did, const Fetcher& fetch);

/// Locates the method for a DID URL, decodes publicKeyMultibase, strips the
/// 0xED 0x01 Ed25519 multicodec prefix, and requires assertion authorization.
std::vector<unsigned char> find_verification_key(const DidDocument& document,
                                                 const std::string& did_url);

/// DID document JSON for a locally held key (did-doc init).
std::string did_document_json(const std::string& did,
                              std::span<const unsigned char, 32> public_key,
                              const std::string& fragment);

/// Thread-safe resolver with a per-DID TTL cache. Offline when a fixture
/// directory is set.
class CachingResolver {
   public:
    struct Options {
        std::optional<std::filesystem::path> fixture_dir;
        bool insecure_http = false;
        std::chrono::seconds ttl{300};
    };

    explicit CachingResolver(Options options);
    CachingResolver(Options options, Fetcher fetcher);  // injectable for tests

    DidDocument resolve(const std::string& did);

    /// Adapter for verify_envelope: DID URL -> raw key bytes, nullopt on
    /// any resolution failure.
    proof::KeyLookup key_lookup();

   private:
    struct CacheEntry {
        DidDocument document;
        std::chrono::steady_clock::time_point fetched_at;
    };

    Options options_;
    Fetcher fetcher_;
    std::mutex mutex_;
    std::map<std::string, CacheEntry> cache_;
};

}  // namespace aigckit::did
