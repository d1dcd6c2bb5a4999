#include "aigckit/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>

#include "aigckit/util.hpp"

namespace aigckit::store {

namespace {

// Advisory whole-store write lock (flock on <root>/.lock).
class StoreLock {
   public:
    explicit StoreLock(const std::filesystem::path& root) {
        const auto lock_path = root / ".lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoFailure("cannot open lock file: " + lock_path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IoFailure("cannot acquire store lock: " + lock_path.string());
        }
    }
    ~StoreLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

   private:
    int fd_ = -1;
};

std::string bare_uuid(const std::string& id) {
    auto uuid = id;
    if (uuid.starts_with("urn:uuid:")) uuid = uuid.substr(9);
    return util::lowercase(uuid);
}

}  // namespace

EnvelopeStore::EnvelopeStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoFailure("cannot create store directory " + root_.string() + ": " + ec.message());
}

std::filesystem::path EnvelopeStore::path_for(const std::string& id) const {
    return root_ / (bare_uuid(id) + ".jsonld");
}

std::filesystem::path EnvelopeStore::save(const vc::AigcEnvelope& envelope) {
    const auto document = vc::to_jsonld(envelope);
    StoreLock lock(root_);
    const auto target = path_for(envelope.id);
    std::error_code ec;
    if (std::filesystem::exists(target, ec)) throw DuplicateId(envelope.id);
    // dot-prefixed temp name so a crashed write is never listed
    const auto temp = root_ / (".tmp-" + envelope.uuid() + ".jsonld");
    try {
        util::write_file(temp, document);
    } catch (const Error& e) {
        throw IoFailure(e.what());
    }
    std::filesystem::rename(temp, target, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        throw IoFailure("rename failed for " + target.string());
    }
    return target;
}

vc::AigcEnvelope EnvelopeStore::load(const std::string& id) const {
    const auto path = path_for(id);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw NotFound(id);
    vc::AigcEnvelope envelope;
    try {
        envelope = vc::from_jsonld(util::read_file(path));
    } catch (const std::exception& e) {
        throw ParseFailure(path.string(), e.what());
    }
    if (envelope.uuid() != bare_uuid(id))
        throw ParseFailure(path.string(), "envelope id does not match filename stem");
    return envelope;
}

std::vector<std::string> EnvelopeStore::list() const {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.starts_with('.') || !name.ends_with(".jsonld")) continue;
        const auto stem = name.substr(0, name.size() - std::string_view(".jsonld").size());
        if (!util::is_uuid(stem)) continue;
        ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

EnvelopeStore::VerifyReport EnvelopeStore::verify_all(const proof::KeyLookup& resolve_key) const {
    VerifyReport report;
    for (const auto& id : list()) {
        proof::VerificationResult result{proof::VerificationStatus::MalformedProof, ""};
        try {
            result = proof::verify_envelope(load(id), resolve_key);
        } catch (const std::exception& e) {
            result.detail = e.what();
        }
        report.entries.push_back({id, result});
        if (result.ok()) report.verified++;
        else report.failed++;
    }
    return report;
}

}  // namespace aigckit::store
