#include "aigckit/canonicalize.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "aigckit/util.hpp"

namespace aigckit::rdf {

namespace {

// Issues identifiers with a fixed prefix in first-come order.
class IdentifierIssuer {
   public:
    explicit IdentifierIssuer(std::string prefix) : prefix_(std::move(prefix)) {}

    bool has(const std::string& old_id) const { return issued_.count(old_id) > 0; }

    const std::string& get(const std::string& old_id) const { return issued_.at(old_id); }

    const std::string& issue(const std::string& old_id) {
        const auto it = issued_.find(old_id);
        if (it != issued_.end()) return it->second;
        auto [ins, _] = issued_.emplace(old_id, prefix_ + std::to_string(counter_++));
        order_.push_back(old_id);
        return ins->second;
    }

    const std::vector<std::string>& issued_order() const { return order_; }

   private:
    std::string prefix_;
    int counter_ = 0;
    std::map<std::string, std::string> issued_;
    std::vector<std::string> order_;
};

struct NDegreeResult {
    std::string hash;
    IdentifierIssuer issuer;
};

class Canonicalizer {
   public:
    Canonicalizer(const Dataset& dataset, const CanonicalizeOptions& options)
        : dataset_(dataset), options_(options), canonical_("c14n") {}

    CanonicalizationResult run() {
        for (const auto& quad : dataset_.quads()) {
            for (const auto* term : {&quad.subject, &quad.object,
                                     quad.graph ? &*quad.graph : nullptr}) {
                if (term && term->is_blank()) mentions_[term->value].push_back(&quad);
            }
        }

        std::map<std::string, std::vector<std::string>> hash_to_nodes;
        for (const auto& [label, _] : mentions_)
            hash_to_nodes[hash_first_degree(label)].push_back(label);

        for (const auto& [hash, node_labels] : hash_to_nodes) {
            if (node_labels.size() == 1) canonical_.issue(node_labels.front());
        }

        for (const auto& [hash, node_labels] : hash_to_nodes) {
            if (node_labels.size() == 1) continue;
            std::vector<NDegreeResult> results;
            for (const auto& label : node_labels) {
                if (canonical_.has(label)) continue;
                IdentifierIssuer temp("b");
                temp.issue(label);
                results.push_back(hash_n_degree(label, temp, 0));
            }
            std::sort(results.begin(), results.end(),
                      [](const auto& a, const auto& b) { return a.hash < b.hash; });
            for (const auto& result : results) {
                for (const auto& label : result.issuer.issued_order()) canonical_.issue(label);
            }
        }

        CanonicalizationResult out;
        for (const auto& [label, _] : mentions_) out.labels[label] = canonical_.get(label);
        out.nquads = serialize_nquads(dataset_, out.labels);
        return out;
    }

   private:
    // Quad serialization with "_:a" for the reference node and "_:z" for
    // every other blank node.
    std::string serialize_reference(const Quad& quad, const std::string& ref) const {
        auto substitute = [&ref](const Term& t) {
            if (!t.is_blank()) return t;
            return Term::blank(t.value == ref ? "a" : "z");
        };
        Quad q;
        q.subject = substitute(quad.subject);
        q.predicate = quad.predicate;
        q.object = substitute(quad.object);
        if (quad.graph) q.graph = substitute(*quad.graph);
        return serialize_quad(q, nullptr);
    }

    std::string hash_first_degree(const std::string& label) {
        const auto cached = first_degree_cache_.find(label);
        if (cached != first_degree_cache_.end()) return cached->second;
        std::vector<std::string> lines;
        for (const auto* quad : mentions_.at(label))
            lines.push_back(serialize_reference(*quad, label));
        std::sort(lines.begin(), lines.end());
        std::string joined;
        for (const auto& line : lines) joined += line;
        auto hash = util::sha256_hex(joined);
        first_degree_cache_[label] = hash;
        return hash;
    }

    std::string hash_related(const std::string& related, const Quad& quad, char position,
                             const IdentifierIssuer& issuer) {
        std::string input(1, position);
        if (position != 'g') input += "<" + quad.predicate.value + ">";
        if (canonical_.has(related))
            input += "_:" + canonical_.get(related);
        else if (issuer.has(related))
            input += "_:" + issuer.get(related);
        else
            input += hash_first_degree(related);
        return util::sha256_hex(input);
    }

    NDegreeResult hash_n_degree(const std::string& identifier, IdentifierIssuer issuer,
                                int depth) {
        if (depth > options_.max_depth)
            throw ComplexityLimitExceeded("recursion depth > " +
                                          std::to_string(options_.max_depth));

        // Group related blank nodes by their relation hash.
        std::map<std::string, std::vector<std::string>> related_by_hash;
        for (const auto* quad : mentions_.at(identifier)) {
            const std::pair<const Term*, char> positions[] = {
                {&quad->subject, 's'}, {&quad->object, 'o'},
                {quad->graph ? &*quad->graph : nullptr, 'g'}};
            for (const auto& [term, position] : positions) {
                if (!term || !term->is_blank() || term->value == identifier) continue;
                related_by_hash[hash_related(term->value, *quad, position, issuer)]
                    .push_back(term->value);
            }
        }

        std::string data_to_hash;
        for (auto& [related_hash, related_nodes] : related_by_hash) {
            data_to_hash += related_hash;
            std::string chosen_path;
            std::optional<IdentifierIssuer> chosen_issuer;

            std::sort(related_nodes.begin(), related_nodes.end());
            std::uint64_t permutations = 0;
            do {
                if (++permutations > options_.max_permutations)
                    throw ComplexityLimitExceeded("more than " +
                                                  std::to_string(options_.max_permutations) +
                                                  " permutations for one node");
                IdentifierIssuer issuer_copy = issuer;
                std::string path;
                std::vector<std::string> recursion_list;
                bool abandoned = false;

                auto longer_and_greater = [&] {
                    return !chosen_path.empty() && path.size() >= chosen_path.size() &&
                           path > chosen_path;
                };

                for (const auto& related : related_nodes) {
                    if (canonical_.has(related)) {
                        path += "_:" + canonical_.get(related);
                    } else {
                        if (!issuer_copy.has(related)) recursion_list.push_back(related);
                        path += "_:" + issuer_copy.issue(related);
                    }
                    if (longer_and_greater()) {
                        abandoned = true;
                        break;
                    }
                }
                if (!abandoned) {
                    for (const auto& related : recursion_list) {
                        auto result = hash_n_degree(related, issuer_copy, depth + 1);
                        path += "_:" + issuer_copy.issue(related);
                        path += "<" + result.hash + ">";
                        issuer_copy = std::move(result.issuer);
                        if (longer_and_greater()) {
                            abandoned = true;
                            break;
                        }
                    }
                }
                if (!abandoned && (chosen_path.empty() || path < chosen_path)) {
                    chosen_path = std::move(path);
                    chosen_issuer = std::move(issuer_copy);
                }
            } while (std::next_permutation(related_nodes.begin(), related_nodes.end()));

            data_to_hash += chosen_path;
            issuer = std::move(*chosen_issuer);
        }
        return NDegreeResult{util::sha256_hex(data_to_hash), std::move(issuer)};
    }

    const Dataset& dataset_;
    const CanonicalizeOptions& options_;
    IdentifierIssuer canonical_;
    std::map<std::string, std::vector<const Quad*>> mentions_;
    std::map<std::string, std::string> first_degree_cache_;
};

}  // namespace

CanonicalizationResult canonicalize(const Dataset& dataset, const CanonicalizeOptions& options) {
    return Canonicalizer(dataset, options).run();
}

}  // namespace aigckit::rdf
