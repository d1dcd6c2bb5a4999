#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aigckit/envelope.hpp"
#include "aigckit/errors.hpp"
#include "aigckit/proof.hpp"

namespace aigckit::store {

struct DuplicateId : Error {
    explicit DuplicateId(const std::string& id) : Error("envelope already stored: " + id) {}
};
struct IoFailure : Error {
    explicit IoFailure(const std::string& msg) : Error("store I/O failure: " + msg) {}
};
struct NotFound : Error {
    explicit NotFound(const std::string& id) : Error("envelope not found: " + id) {}
};
struct ParseFailure : Error {
    ParseFailure(const std::string& path, const std::string& why)
        : Error("cannot parse stored envelope " + path + ": " + why) {}
};

/// Flat directory of `<uuid>.jsonld` files; the filesystem is the index.
/// Writes go through a temp file + rename and are serialized by an
/// advisory lock; concurrent reads are unrestricted.
class EnvelopeStore {
   public:
    explicit EnvelopeStore(std::filesystem::path root);

    std::filesystem::path save(const vc::AigcEnvelope& envelope);
    vc::AigcEnvelope load(const std::string& id) const;  // bare UUID or urn:uuid: form
    std::vector<std::string> list() const;               // sorted UUIDs

    struct VerifyEntry {
        std::string id;
        proof::VerificationResult result;
    };
    struct VerifyReport {
        std::vector<VerifyEntry> entries;
        std::size_t verified = 0;
        std::size_t failed = 0;
    };
    VerifyReport verify_all(const proof::KeyLookup& resolve_key) const;

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path_for(const std::string& id) const;

   private:
    std::filesystem::path root_;
};

}  // namespace aigckit::store
