#include "aigckit/envelope.hpp"

#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

namespace aigckit::vc {

using nlohmann::json;

namespace {

constexpr std::size_t kLabelLimit = 80;
constexpr std::size_t kLabelPrefix = 77;

bool valid_extra_name(std::string_view name) {
    if (name.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
    for (const char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
            return false;
    }
    return true;
}

json param_to_json(const ParamValue& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

ParamValue param_from_json(const json& j, const std::string& name) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw InvalidField("hyperParameter." + name, "must be a scalar");
}

const json& require(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw MissingKey(path);
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw InvalidField(path, "must be a string");
    return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) throw InvalidField(path, "must be a number");
    return v.get<double>();
}

// A node reference object: {"@id": "..."}.
std::string ref_id(const json& v, const std::string& path) {
    if (!v.is_object()) throw InvalidField(path, "must be an object reference");
    return require_string(v, "@id", path + ".@id");
}

std::string blank_ref(const json& v, const std::string& path) {
    const auto id = ref_id(v, path);
    if (!id.starts_with("_:")) throw InvalidField(path, "must reference a blank node");
    return id;
}

}  // namespace

ModelRef ModelRef::make(std::string iri, std::string label) {
    if (!util::absolute_iri_valid(iri)) throw InvalidField("model.iri", "not an absolute IRI");
    if (label.empty()) throw InvalidField("model.label", "must be non-empty");
    if (!util::utf8_valid(label)) throw InvalidField("model.label", "not valid UTF-8");
    return ModelRef{std::move(iri), std::move(label)};
}

HyperParameters HyperParameters::make(double temperature, std::int64_t max_tokens,
                                      std::map<std::string, ParamValue> extra) {
    if (!(temperature >= 0) || !std::isfinite(temperature))
        throw InvalidField("hyper.temperature", "must be a finite value >= 0");
    if (max_tokens <= 0) throw InvalidField("hyper.max_tokens", "must be > 0");
    for (const auto& [name, value] : extra) {
        if (name == "temperature" || name == "max_tokens")
            throw InvalidField("hyper.extra", "name collides with a fixed parameter: " + name);
        if (!valid_extra_name(name))
            throw InvalidField("hyper.extra", "name is not identifier-like: " + name);
        if (const auto* d = std::get_if<double>(&value); d && !std::isfinite(*d))
            throw InvalidField("hyper.extra", name + " must be finite");
    }
    HyperParameters h;
    h.temperature = temperature;
    h.max_tokens = max_tokens;
    h.extra = std::move(extra);
    return h;
}

ConfidenceStats ConfidenceStats::make(double mean, double min, double max, std::int64_t count) {
    if (!std::isfinite(mean) || !std::isfinite(min) || !std::isfinite(max))
        throw InvalidField("confidence", "statistics must be finite");
    if (std::abs(mean) > 700) throw InvalidField("confidence.mean", "out of range for exp(-mean)");
    return with_perplexity(mean, min, max, count, std::exp(-mean));
}

ConfidenceStats ConfidenceStats::with_perplexity(double mean, double min, double max,
                                                 std::int64_t count, double perplexity) {
    if (count <= 0) throw InvalidField("confidence.count", "must be > 0");
    if (!(min <= mean && mean <= max))
        throw InvalidField("confidence", "requires min <= mean <= max");
    if (!(perplexity > 0) || !std::isfinite(perplexity))
        throw InvalidField("confidence.perplexity", "must be finite and > 0");
    const double expected = std::exp(-mean);
    if (std::abs(perplexity - expected) > 1e-12 * std::max(std::abs(expected), 1.0))
        throw InvalidField("confidence.perplexity", "must equal exp(-mean)");
    ConfidenceStats c;
    c.mean = mean;
    c.min = min;
    c.max = max;
    c.count = count;
    c.perplexity = perplexity;
    return c;
}

ThoughtTrace ThoughtTrace::make(std::string value, std::string source_tag) {
    if (value.empty()) throw InvalidField("thought.value", "must be non-empty");
    if (!util::utf8_valid(value)) throw InvalidField("thought.value", "not valid UTF-8");
    return ThoughtTrace{std::move(value), std::move(source_tag)};
}

IssuerRef IssuerRef::make(std::string id, std::string name) {
    if (!id.starts_with("did:")) throw InvalidField("issuer.id", "must be a DID");
    if (!util::absolute_iri_valid(id)) throw InvalidField("issuer.id", "not a valid IRI");
    if (name.empty()) throw InvalidField("issuer.name", "must be non-empty");
    if (!util::utf8_valid(name)) throw InvalidField("issuer.name", "not valid UTF-8");
    return IssuerRef{std::move(id), std::move(name)};
}

std::string derive_label(std::string_view value) {
    if (value.size() <= kLabelLimit) return std::string(value);
    std::size_t cut = kLabelPrefix;
    // back off to a UTF-8 codepoint boundary
    while (cut > 0 && (static_cast<unsigned char>(value[cut]) & 0xC0) == 0x80) cut--;
    return std::string(value.substr(0, cut)) + "...";
}

namespace {

void validate_label(const std::string& label, const std::string& value) {
    if (label == value) return;
    if (label.size() >= 4 && label.ends_with("...")) {
        const auto prefix = std::string_view(label).substr(0, label.size() - 3);
        if (prefix.size() <= kLabelLimit && value.starts_with(prefix)) return;
    }
    throw InvalidField("content.label", "not a prefix excerpt of value");
}

}  // namespace

GeneratedContent GeneratedContent::make(std::string value, poml::StructuredPrompt prompt,
                                        ModelRef model, HyperParameters hyper,
                                        std::optional<ConfidenceStats> confidence,
                                        std::optional<ThoughtTrace> thought) {
    if (value.empty()) throw InvalidField("content.value", "must be non-empty");
    if (!util::utf8_valid(value)) throw InvalidField("content.value", "not valid UTF-8");
    if (prompt.modules.empty()) throw poml::EmptyPrompt();
    GeneratedContent c;
    c.label = derive_label(value);
    c.value = std::move(value);
    c.prompt = std::move(prompt);
    c.model = std::move(model);
    c.hyper = std::move(hyper);
    c.confidence = confidence;
    c.thought = std::move(thought);
    return c;
}

std::string AigcEnvelope::uuid() const { return id.substr(9); }

AigcEnvelope build_envelope(GeneratedContent content, IssuerRef issuer,
                            util::Timestamp valid_from, std::optional<std::string> id,
                            const util::RandomBytesFn& random) {
    std::string uuid;
    if (id) {
        auto candidate = *id;
        if (candidate.starts_with("urn:uuid:")) candidate = candidate.substr(9);
        uuid = util::lowercase(candidate);
        if (!util::is_uuid(uuid)) throw InvalidField("envelope.id", "not a UUID URN");
    } else {
        uuid = util::new_uuid_v4(random);
    }
    AigcEnvelope e;
    e.id = "urn:uuid:" + uuid;
    e.issuer = std::move(issuer);
    e.valid_from = valid_from;
    e.subject = std::move(content);
    return e;
}

namespace {

json proof_to_json(const Proof& p) {
    json j;
    j["created"] = p.created.to_rfc3339();
    j["cryptosuite"] = p.cryptosuite;
    j["proofPurpose"] = p.proof_purpose;
    j["proofValue"] = p.proof_value;
    j["type"] = p.type;
    j["verificationMethod"] = p.verification_method;
    return j;
}

}  // namespace

std::string to_jsonld(const AigcEnvelope& e) {
    // Deterministic blank labels in traversal order: subject, prompt,
    // modules by kind, confidence, hyper, thought.
    int next = 0;
    auto blank = [&next] { return "_:b" + std::to_string(next++); };
    const std::string subject_id = blank();
    const std::string prompt_id = blank();
    std::vector<std::string> module_ids;
    module_ids.reserve(e.subject.prompt.modules.size());
    for (std::size_t i = 0; i < e.subject.prompt.modules.size(); i++) module_ids.push_back(blank());
    const std::string confidence_id = e.subject.confidence ? blank() : "";
    const std::string hyper_id = blank();
    const std::string thought_id = e.subject.thought ? blank() : "";

    json doc;
    doc["@context"] = {kContextCredentialsV2, kContextDataIntegrityV1, kContextAigckitV1};
    doc["id"] = e.id;
    doc["type"] = {kTypeVerifiableCredential, kTypeAigcCredential};
    doc["issuer"] = {{"id", e.issuer.id}, {"name", e.issuer.name}};
    doc["validFrom"] = e.valid_from.to_rfc3339();

    json subject;
    subject["@id"] = subject_id;
    subject["@type"] = "GeneratedContent";
    subject["value"] = e.subject.value;
    subject["label"] = e.subject.label;
    subject["prompt"] = {{"@id", prompt_id}};
    subject["model"] = {{"@id", e.subject.model.iri}};
    if (e.subject.confidence) subject["confidence"] = {{"@id", confidence_id}};
    subject["hyperParameter"] = {{"@id", hyper_id}};
    if (e.subject.thought) subject["thought"] = {{"@id", thought_id}};
    doc["credentialSubject"] = std::move(subject);

    json graph = json::array();
    json prompt_node;
    prompt_node["@id"] = prompt_id;
    prompt_node["@type"] = "Prompt";
    json contains = json::array();
    for (const auto& mid : module_ids) contains.push_back({{"@id", mid}});
    prompt_node["contains"] = std::move(contains);
    prompt_node["value"] = e.subject.prompt.rendered_cache
                               ? *e.subject.prompt.rendered_cache
                               : poml::render_markdown(e.subject.prompt);
    graph.push_back(std::move(prompt_node));

    for (std::size_t i = 0; i < e.subject.prompt.modules.size(); i++) {
        const auto& m = e.subject.prompt.modules[i];
        json node;
        node["@id"] = module_ids[i];
        node["@type"] = std::string(poml::kind_name(m.kind));
        node["value"] = m.value;
        if (m.source_id) node["source"] = *m.source_id;
        graph.push_back(std::move(node));
    }

    if (e.subject.confidence) {
        const auto& c = *e.subject.confidence;
        json node;
        node["@id"] = confidence_id;
        node["count"] = c.count;
        node["max"] = c.max;
        node["mean"] = c.mean;
        node["min"] = c.min;
        node["perplexity"] = c.perplexity;
        graph.push_back(std::move(node));
    }

    {
        json node;
        node["@id"] = hyper_id;
        node["max_tokens"] = e.subject.hyper.max_tokens;
        node["temperature"] = e.subject.hyper.temperature;
        for (const auto& [name, value] : e.subject.hyper.extra)
            node[name] = param_to_json(value);
        graph.push_back(std::move(node));
    }

    if (e.subject.thought) {
        json node;
        node["@id"] = thought_id;
        node["@type"] = "Thought";
        node["sourceTag"] = e.subject.thought->source_tag;
        node["value"] = e.subject.thought->value;
        graph.push_back(std::move(node));
    }

    {
        json node;
        node["@id"] = e.subject.model.iri;
        node["@type"] = "Model";
        node["label"] = e.subject.model.label;
        graph.push_back(std::move(node));
    }
    doc["@graph"] = std::move(graph);

    if (e.proof) doc["proof"] = proof_to_json(*e.proof);
    return doc.dump();
}

AigcEnvelope from_jsonld(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& ex) {
        throw Error(std::string("invalid JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw Error("document must be a JSON object");

    const auto& ctx = require(doc, "@context", "@context");
    if (!ctx.is_array() || ctx.size() < 3 || ctx[0] != kContextCredentialsV2 ||
        ctx[1] != kContextDataIntegrityV1 || ctx[2] != kContextAigckitV1)
        throw UnknownContext(ctx.dump());

    const auto& types = require(doc, "type", "type");
    if (!types.is_array() || types.size() != 2 || types[0] != kTypeVerifiableCredential ||
        types[1] != kTypeAigcCredential)
        throw InvalidField("type", "must be [VerifiableCredential, AIGCContentCredential]");

    auto id = require_string(doc, "id", "id");
    if (!id.starts_with("urn:uuid:") || !util::is_uuid(id.substr(9)))
        throw InvalidField("id", "not a UUID URN");
    id = "urn:uuid:" + util::lowercase(id.substr(9));

    const auto& issuer_json = require(doc, "issuer", "issuer");
    auto issuer = IssuerRef::make(require_string(issuer_json, "id", "issuer.id"),
                                  require_string(issuer_json, "name", "issuer.name"));

    const auto valid_from = util::Timestamp::parse(require_string(doc, "validFrom", "validFrom"));

    // Index the top-level graph by @id.
    std::map<std::string, const json*> nodes;
    const auto& graph = require(doc, "@graph", "@graph");
    if (!graph.is_array()) throw InvalidField("@graph", "must be an array");
    for (const auto& node : graph) {
        if (!node.is_object()) throw InvalidField("@graph", "nodes must be objects");
        nodes[require_string(node, "@id", "@graph[].@id")] = &node;
    }
    auto resolve = [&nodes](const std::string& node_id) -> const json& {
        const auto it = nodes.find(node_id);
        if (it == nodes.end()) throw DanglingReference(node_id);
        return *it->second;
    };

    const auto& subject = require(doc, "credentialSubject", "credentialSubject");
    if (!subject.is_object()) throw InvalidField("credentialSubject", "must be an object");
    blank_ref(subject, "credentialSubject");  // @id must be a blank node
    if (require_string(subject, "@type", "credentialSubject.@type") != "GeneratedContent")
        throw InvalidField("credentialSubject.@type", "must be GeneratedContent");
    const auto value = require_string(subject, "value", "credentialSubject.value");
    const auto label = require_string(subject, "label", "credentialSubject.label");
    validate_label(label, value);

    // Prompt graph: prompt node -> contains -> module nodes.
    const auto prompt_ref =
        blank_ref(require(subject, "prompt", "credentialSubject.prompt"), "credentialSubject.prompt");
    const auto& prompt_node = resolve(prompt_ref);
    if (require_string(prompt_node, "@type", "prompt.@type") != "Prompt")
        throw InvalidField("prompt.@type", "must be Prompt");
    const auto& contains = require(prompt_node, "contains", "prompt.contains");
    if (!contains.is_array()) throw InvalidField("prompt.contains", "must be an array");
    std::vector<poml::PromptModule> modules;
    for (const auto& ref : contains) {
        const auto& module_node = resolve(blank_ref(ref, "prompt.contains[]"));
        const auto type_name = require_string(module_node, "@type", "module.@type");
        const auto kind = poml::kind_from_name(type_name);
        if (!kind) throw InvalidField("module.@type", "unknown module kind: " + type_name);
        std::optional<std::string> source;
        if (const auto it = module_node.find("source"); it != module_node.end())
            source = it->get<std::string>();
        modules.push_back(poml::PromptModule::make(
            *kind, require_string(module_node, "value", "module.value"), std::move(source)));
    }
    auto prompt = poml::StructuredPrompt::make(std::move(modules));
    prompt.rendered_cache = require_string(prompt_node, "value", "prompt.value");

    // Model: IRI-identified node.
    const auto model_iri =
        ref_id(require(subject, "model", "credentialSubject.model"), "credentialSubject.model");
    const auto& model_node = resolve(model_iri);
    if (require_string(model_node, "@type", "model.@type") != "Model")
        throw InvalidField("model.@type", "must be Model");
    auto model = ModelRef::make(model_iri, require_string(model_node, "label", "model.label"));

    std::optional<ConfidenceStats> confidence;
    if (const auto it = subject.find("confidence"); it != subject.end()) {
        const auto& node = resolve(blank_ref(*it, "credentialSubject.confidence"));
        const auto& count_json = require(node, "count", "confidence.count");
        if (!count_json.is_number_integer())
            throw InvalidField("confidence.count", "must be an integer");
        confidence = ConfidenceStats::with_perplexity(
            require_number(node, "mean", "confidence.mean"),
            require_number(node, "min", "confidence.min"),
            require_number(node, "max", "confidence.max"), count_json.get<std::int64_t>(),
            require_number(node, "perplexity", "confidence.perplexity"));
    }

    const auto& hyper_node = resolve(blank_ref(
        require(subject, "hyperParameter", "credentialSubject.hyperParameter"),
        "credentialSubject.hyperParameter"));
    const auto& max_tokens_json = require(hyper_node, "max_tokens", "hyperParameter.max_tokens");
    if (!max_tokens_json.is_number_integer())
        throw InvalidField("hyperParameter.max_tokens", "must be an integer");
    std::map<std::string, ParamValue> extra;
    for (const auto& [key, val] : hyper_node.items()) {
        if (key == "@id" || key == "max_tokens" || key == "temperature") continue;
        extra[key] = param_from_json(val, key);
    }
    auto hyper =
        HyperParameters::make(require_number(hyper_node, "temperature", "hyperParameter.temperature"),
                              max_tokens_json.get<std::int64_t>(), std::move(extra));

    std::optional<ThoughtTrace> thought;
    if (const auto it = subject.find("thought"); it != subject.end()) {
        const auto& node = resolve(blank_ref(*it, "credentialSubject.thought"));
        if (require_string(node, "@type", "thought.@type") != "Thought")
            throw InvalidField("thought.@type", "must be Thought");
        thought = ThoughtTrace::make(require_string(node, "value", "thought.value"),
                                     require_string(node, "sourceTag", "thought.sourceTag"));
    }

    auto content = GeneratedContent::make(value, std::move(prompt), std::move(model),
                                          std::move(hyper), confidence, std::move(thought));
    content.label = label;  // keep the document's excerpt verbatim

    auto envelope = build_envelope(std::move(content), std::move(issuer), valid_from, id);

    if (const auto it = doc.find("proof"); it != doc.end()) {
        const auto& p = *it;
        Proof proof;
        proof.type = require_string(p, "type", "proof.type");
        proof.created = util::Timestamp::parse(require_string(p, "created", "proof.created"));
        proof.proof_purpose = require_string(p, "proofPurpose", "proof.proofPurpose");
        proof.verification_method =
            require_string(p, "verificationMethod", "proof.verificationMethod");
        proof.cryptosuite = require_string(p, "cryptosuite", "proof.cryptosuite");
        proof.proof_value = require_string(p, "proofValue", "proof.proofValue");
        envelope.proof = std::move(proof);
    }
    return envelope;
}

}  // namespace aigckit::vc
