#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aigckit/envelope.hpp"
#include "aigckit/errors.hpp"

namespace aigckit::proof {

struct BadSeedLength : Error {
    explicit BadSeedLength(std::size_t got)
        : Error("seed must be 32 bytes, got " + std::to_string(got)) {}
};
struct AlreadySigned : Error {
    AlreadySigned() : Error("envelope already carries a proof") {}
};
struct IssuerMismatch : Error {
    IssuerMismatch(const std::string& method_did, const std::string& issuer_did)
        : Error("verification method DID " + method_did + " does not match issuer " + issuer_did) {}
};
struct UnknownMultibasePrefix : Error {
    explicit UnknownMultibasePrefix(char prefix)
        : Error(std::string("unknown multibase prefix: '") + prefix + "'") {}
};
struct InvalidBase58Char : Error {
    explicit InvalidBase58Char(char c) : Error(std::string("invalid base58 character: '") + c + "'") {}
};

struct KeyPair {
    std::array<unsigned char, 32> seed{};        // private seed
    std::array<unsigned char, 32> public_key{};  // Ed25519 public key
};

/// Deterministic when seeded; CSPRNG otherwise.
KeyPair keygen(std::optional<std::span<const unsigned char>> seed = {});

std::array<unsigned char, 64> ed25519_sign(std::span<const unsigned char> message,
                                           const KeyPair& key);
bool ed25519_verify(std::span<const unsigned char> message,
                    std::span<const unsigned char, 64> signature,
                    std::span<const unsigned char, 32> public_key);

/// base58btc with the "z" multibase prefix.
std::string multibase_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> multibase_decode(std::string_view text);

/// Multibase encoding of the Ed25519 multicodec prefix 0xED 0x01 plus the
/// raw public key — the publicKeyMultibase form of DID documents.
std::string public_key_multibase(std::span<const unsigned char, 32> public_key);

/// Resolves a verification-method DID URL to 32 raw public-key bytes.
/// nullopt when the key cannot be found or decoded.
using KeyLookup =
    std::function<std::optional<std::vector<unsigned char>>(const std::string& did_url)>;

/// KeyLookup for a single known key (tests, local verification).
KeyLookup static_key(std::string did_url, std::array<unsigned char, 32> public_key);

/// Attaches an eddsa-rdfc-2022 data-integrity proof: the Ed25519 signature
/// over SHA-256(canonical proof options) || SHA-256(canonical document).
vc::AigcEnvelope sign_envelope(const vc::AigcEnvelope& envelope, const KeyPair& key,
                               const std::string& verification_method, util::Timestamp created);

enum class VerificationStatus {
    Verified,
    SignatureInvalid,
    KeyNotFound,
    UnsupportedCryptosuite,
    MalformedProof,
};

std::string_view to_string(VerificationStatus status);

struct VerificationResult {
    VerificationStatus status;
    std::string detail;

    bool ok() const { return status == VerificationStatus::Verified; }
};

/// Never mutates the envelope; failures are results, not exceptions.
VerificationResult verify_envelope(const vc::AigcEnvelope& envelope, const KeyLookup& resolve_key);

/// On-disk key format: JSON {id, public, private}, multibase-encoded,
/// created owner-read/write only.
struct KeyFile {
    std::string id;  // verification-method DID URL, may be empty until assigned
    KeyPair key;
};

void save_key_file(const KeyFile& key_file, const std::filesystem::path& path);
KeyFile load_key_file(const std::filesystem::path& path);

}  // namespace aigckit::proof
