#include "aigckit/proof.hpp"

#include <sodium.h>
#include <sys/stat.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include <nlohmann/json.hpp>

#include "aigckit/canonicalize.hpp"
#include "aigckit/rdf_map.hpp"
#include "aigckit/util.hpp"

namespace aigckit::proof {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error("libsodium initialization failed");
    });
}

constexpr char kBase58Alphabet[] =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

int base58_index(char c) {
    const auto* pos = std::strchr(kBase58Alphabet, c);
    if (pos == nullptr || c == '\0') return -1;
    return static_cast<int>(pos - kBase58Alphabet);
}

// libsodium secret keys are seed || public.
std::array<unsigned char, 64> expanded_secret(const KeyPair& key) {
    std::array<unsigned char, 64> sk{};
    std::copy(key.seed.begin(), key.seed.end(), sk.begin());
    std::copy(key.public_key.begin(), key.public_key.end(), sk.begin() + 32);
    return sk;
}

std::string did_of(const std::string& did_url) {
    const auto hash_pos = did_url.find('#');
    return did_url.substr(0, hash_pos);
}

// The two-hash signing input of eddsa-rdfc-2022: proof options digest
// first, document digest second.
std::array<unsigned char, 64> signing_input(const vc::AigcEnvelope& envelope,
                                            const vc::Proof& proof) {
    const auto options_nquads = rdf::canonicalize(rdf::proof_options_dataset(proof)).nquads;
    const auto document_nquads =
        rdf::canonicalize(rdf::envelope_to_dataset(envelope, /*include_proof=*/false)).nquads;
    const auto options_hash = util::sha256(options_nquads);
    const auto document_hash = util::sha256(document_nquads);
    std::array<unsigned char, 64> input{};
    std::copy(options_hash.begin(), options_hash.end(), input.begin());
    std::copy(document_hash.begin(), document_hash.end(), input.begin() + 32);
    return input;
}

}  // namespace

KeyPair keygen(std::optional<std::span<const unsigned char>> seed) {
    ensure_sodium();
    KeyPair key;
    if (seed) {
        if (seed->size() != 32) throw BadSeedLength(seed->size());
        std::copy(seed->begin(), seed->end(), key.seed.begin());
    } else {
        randombytes_buf(key.seed.data(), key.seed.size());
    }
    std::array<unsigned char, 64> sk{};
    if (crypto_sign_seed_keypair(key.public_key.data(), sk.data(), key.seed.data()) != 0)
        throw Error("Ed25519 key derivation failed");
    return key;
}

std::array<unsigned char, 64> ed25519_sign(std::span<const unsigned char> message,
                                           const KeyPair& key) {
    ensure_sodium();
    const auto sk = expanded_secret(key);
    std::array<unsigned char, 64> signature{};
    if (crypto_sign_detached(signature.data(), nullptr, message.data(), message.size(),
                             sk.data()) != 0)
        throw Error("Ed25519 signing failed");
    return signature;
}

bool ed25519_verify(std::span<const unsigned char> message,
                    std::span<const unsigned char, 64> signature,
                    std::span<const unsigned char, 32> public_key) {
    ensure_sodium();
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

std::string multibase_encode(std::span<const unsigned char> bytes) {
    std::size_t zeroes = 0;
    while (zeroes < bytes.size() && bytes[zeroes] == 0) zeroes++;

    // big-endian base-58 digits, most significant first
    std::vector<unsigned char> digits;
    for (std::size_t i = zeroes; i < bytes.size(); i++) {
        unsigned carry = bytes[i];
        for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
            carry += static_cast<unsigned>(*it) << 8;
            *it = static_cast<unsigned char>(carry % 58);
            carry /= 58;
        }
        while (carry > 0) {
            digits.insert(digits.begin(), static_cast<unsigned char>(carry % 58));
            carry /= 58;
        }
    }
    std::string out = "z";
    out.append(zeroes, '1');
    for (const auto d : digits) out.push_back(kBase58Alphabet[d]);
    return out;
}

std::vector<unsigned char> multibase_decode(std::string_view text) {
    if (text.empty()) throw UnknownMultibasePrefix('\0');
    if (text[0] != 'z') throw UnknownMultibasePrefix(text[0]);
    const auto payload = text.substr(1);

    std::size_t zeroes = 0;
    while (zeroes < payload.size() && payload[zeroes] == '1') zeroes++;

    std::vector<unsigned char> bytes;
    for (std::size_t i = zeroes; i < payload.size(); i++) {
        const int value = base58_index(payload[i]);
        if (value < 0) throw InvalidBase58Char(payload[i]);
        unsigned carry = static_cast<unsigned>(value);
        for (auto it = bytes.rbegin(); it != bytes.rend(); ++it) {
            carry += static_cast<unsigned>(*it) * 58;
            *it = static_cast<unsigned char>(carry & 0xFF);
            carry >>= 8;
        }
        while (carry > 0) {
            bytes.insert(bytes.begin(), static_cast<unsigned char>(carry & 0xFF));
            carry >>= 8;
        }
    }
    std::vector<unsigned char> out(zeroes, 0);
    out.insert(out.end(), bytes.begin(), bytes.end());
    return out;
}

std::string public_key_multibase(std::span<const unsigned char, 32> public_key) {
    std::vector<unsigned char> prefixed = {0xED, 0x01};
    prefixed.insert(prefixed.end(), public_key.begin(), public_key.end());
    return multibase_encode(prefixed);
}

KeyLookup static_key(std::string did_url, std::array<unsigned char, 32> public_key) {
    return [did_url = std::move(did_url),
            public_key](const std::string& request) -> std::optional<std::vector<unsigned char>> {
        if (request != did_url) return std::nullopt;
        return std::vector<unsigned char>(public_key.begin(), public_key.end());
    };
}

vc::AigcEnvelope sign_envelope(const vc::AigcEnvelope& envelope, const KeyPair& key,
                               const std::string& verification_method, util::Timestamp created) {
    if (envelope.proof) throw AlreadySigned();
    if (did_of(verification_method) != envelope.issuer.id)
        throw IssuerMismatch(did_of(verification_method), envelope.issuer.id);

    vc::Proof proof;
    proof.created = created;
    proof.verification_method = verification_method;

    const auto input = signing_input(envelope, proof);
    const auto signature = ed25519_sign(input, key);
    proof.proof_value = multibase_encode(signature);

    auto signed_envelope = envelope;
    signed_envelope.proof = std::move(proof);
    return signed_envelope;
}

std::string_view to_string(VerificationStatus status) {
    switch (status) {
        case VerificationStatus::Verified: return "Verified";
        case VerificationStatus::SignatureInvalid: return "SignatureInvalid";
        case VerificationStatus::KeyNotFound: return "KeyNotFound";
        case VerificationStatus::UnsupportedCryptosuite: return "UnsupportedCryptosuite";
        case VerificationStatus::MalformedProof: return "MalformedProof";
    }
    return "UnknownStatus";
}

VerificationResult verify_envelope(const vc::AigcEnvelope& envelope, const KeyLookup& resolve_key) {
    if (!envelope.proof) return {VerificationStatus::MalformedProof, "no proof present"};
    const auto& proof = *envelope.proof;

    if (proof.cryptosuite != vc::kCryptosuite)
        return {VerificationStatus::UnsupportedCryptosuite,
                "cryptosuite: " + proof.cryptosuite};
    if (proof.type != vc::kProofType)
        return {VerificationStatus::MalformedProof, "type: " + proof.type};
    if (proof.proof_purpose != vc::kProofPurpose)
        return {VerificationStatus::MalformedProof, "proofPurpose: " + proof.proof_purpose};
    if (proof.verification_method.find('#') == std::string::npos)
        return {VerificationStatus::MalformedProof, "verificationMethod has no key fragment"};
    // issuer id is part of the hashed document; tampering it fails the
    // signature check below

    std::vector<unsigned char> signature;
    try {
        signature = multibase_decode(proof.proof_value);
    } catch (const Error& e) {
        return {VerificationStatus::MalformedProof, e.what()};
    }
    if (signature.size() != 64)
        return {VerificationStatus::MalformedProof,
                "proofValue decodes to " + std::to_string(signature.size()) + " bytes"};

    std::optional<std::vector<unsigned char>> key_bytes;
    try {
        key_bytes = resolve_key(proof.verification_method);
    } catch (const std::exception& e) {
        return {VerificationStatus::KeyNotFound, e.what()};
    }
    if (!key_bytes || key_bytes->size() != 32)
        return {VerificationStatus::KeyNotFound, proof.verification_method};

    const auto input = signing_input(envelope, proof);
    const bool valid = ed25519_verify(
        input, std::span<const unsigned char, 64>(signature.data(), 64),
        std::span<const unsigned char, 32>(key_bytes->data(), 32));
    if (!valid) return {VerificationStatus::SignatureInvalid, "signature mismatch"};
    return {VerificationStatus::Verified, ""};
}

void save_key_file(const KeyFile& key_file, const std::filesystem::path& path) {
    nlohmann::json j;
    j["id"] = key_file.id;
    j["public"] = multibase_encode(key_file.key.public_key);
    j["private"] = multibase_encode(key_file.key.seed);
    util::write_file(path, j.dump(2) + "\n");
    ::chmod(path.c_str(), S_IRUSR | S_IWUSR);
}

KeyFile load_key_file(const std::filesystem::path& path) {
    const auto j = nlohmann::json::parse(util::read_file(path));
    KeyFile kf;
    kf.id = j.value("id", "");
    const auto seed = multibase_decode(j.at("private").get<std::string>());
    if (seed.size() != 32) throw BadSeedLength(seed.size());
    kf.key = keygen(std::span<const unsigned char>(seed.data(), seed.size()));
    const auto pub = multibase_decode(j.at("public").get<std::string>());
    if (pub.size() != kf.key.public_key.size() ||
        !std::equal(pub.begin(), pub.end(), kf.key.public_key.begin()))
        throw Error("key file public key does not match private seed: " + path.string());
    return kf;
}

}  // namespace aigckit::proof
