#include "aigckit/rdf_map.hpp"

namespace aigckit::rdf {

namespace vocab {

std::string aigckit(std::string_view term) { return std::string(kBase) + std::string(term); }
std::string cred(std::string_view term) { return std::string(kCred) + std::string(term); }
std::string sec(std::string_view term) { return std::string(kSec) + std::string(term); }

}  // namespace vocab

Term double_literal(double value) {
    return Term::literal(util::format_double(value), xsd::kDouble);
}

Term integer_literal(std::int64_t value) {
    return Term::literal(std::to_string(value), xsd::kInteger);
}

Term datetime_literal(util::Timestamp ts) {
    return Term::literal(ts.to_rfc3339(), xsd::kDateTime);
}

Term param_literal(const vc::ParamValue& value) {
    if (const auto* b = std::get_if<bool>(&value))
        return Term::literal(*b ? "true" : "false", xsd::kBoolean);
    if (const auto* i = std::get_if<std::int64_t>(&value)) return integer_literal(*i);
    if (const auto* d = std::get_if<double>(&value)) return double_literal(*d);
    return Term::literal(std::get<std::string>(value));
}

namespace {

void add_proof_quads(Dataset& ds, const vc::Proof& proof, const Term& proof_node,
                     bool include_value) {
    const auto type = Term::iri(std::string(kRdfType));
    ds.insert(Quad::make(proof_node, type, Term::iri(vocab::sec("DataIntegrityProof"))));
    ds.insert(Quad::make(proof_node, Term::iri(std::string(vocab::kDctCreated)),
                         datetime_literal(proof.created)));
    ds.insert(Quad::make(proof_node, Term::iri(vocab::sec("cryptosuite")),
                         Term::literal(proof.cryptosuite)));
    ds.insert(Quad::make(proof_node, Term::iri(vocab::sec("proofPurpose")),
                         Term::iri(vocab::sec(proof.proof_purpose))));
    ds.insert(Quad::make(proof_node, Term::iri(vocab::sec("verificationMethod")),
                         Term::iri(proof.verification_method)));
    if (include_value)
        ds.insert(Quad::make(proof_node, Term::iri(vocab::sec("proofValue")),
                             Term::literal(proof.proof_value)));
}

}  // namespace

Dataset envelope_to_dataset(const vc::AigcEnvelope& e, bool include_proof) {
    Dataset ds;
    const auto type = Term::iri(std::string(kRdfType));
    const auto envelope_node = Term::iri(e.id);

    // Blank labels in the same traversal order as to_jsonld.
    int next = 0;
    auto blank = [&next] { return Term::blank("b" + std::to_string(next++)); };
    const auto subject_node = blank();
    const auto prompt_node = blank();
    std::vector<Term> module_nodes;
    for (std::size_t i = 0; i < e.subject.prompt.modules.size(); i++) module_nodes.push_back(blank());
    const auto confidence_node = e.subject.confidence ? std::optional(blank()) : std::nullopt;
    const auto hyper_node = blank();
    const auto thought_node = e.subject.thought ? std::optional(blank()) : std::nullopt;

    ds.insert(Quad::make(envelope_node, type, Term::iri(vocab::cred("VerifiableCredential"))));
    ds.insert(Quad::make(envelope_node, type, Term::iri(vocab::aigckit("AIGCContentCredential"))));
    ds.insert(Quad::make(envelope_node, Term::iri(vocab::cred("issuer")), Term::iri(e.issuer.id)));
    ds.insert(Quad::make(Term::iri(e.issuer.id), Term::iri(std::string(vocab::kSchemaName)),
                         Term::literal(e.issuer.name)));
    ds.insert(Quad::make(envelope_node, Term::iri(vocab::cred("validFrom")),
                         datetime_literal(e.valid_from)));
    ds.insert(Quad::make(envelope_node, Term::iri(vocab::cred("credentialSubject")), subject_node));

    ds.insert(Quad::make(subject_node, type, Term::iri(vocab::aigckit("GeneratedContent"))));
    ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("value")),
                         Term::literal(e.subject.value)));
    ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("label")),
                         Term::literal(e.subject.label)));
    ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("prompt")), prompt_node));
    ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("model")),
                         Term::iri(e.subject.model.iri)));
    ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("hyperParameter")), hyper_node));

    ds.insert(Quad::make(prompt_node, type, Term::iri(vocab::aigckit("Prompt"))));
    const auto rendered = e.subject.prompt.rendered_cache
                              ? *e.subject.prompt.rendered_cache
                              : poml::render_markdown(e.subject.prompt);
    ds.insert(Quad::make(prompt_node, Term::iri(vocab::aigckit("value")), Term::literal(rendered)));
    for (std::size_t i = 0; i < e.subject.prompt.modules.size(); i++) {
        const auto& m = e.subject.prompt.modules[i];
        ds.insert(Quad::make(prompt_node, Term::iri(vocab::aigckit("contains")), module_nodes[i]));
        ds.insert(Quad::make(module_nodes[i], type,
                             Term::iri(vocab::aigckit(poml::kind_name(m.kind)))));
        ds.insert(Quad::make(module_nodes[i], Term::iri(vocab::aigckit("value")),
                             Term::literal(m.value)));
        if (m.source_id)
            ds.insert(Quad::make(module_nodes[i], Term::iri(vocab::aigckit("source")),
                                 Term::literal(*m.source_id)));
    }

    if (e.subject.confidence) {
        const auto& c = *e.subject.confidence;
        ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("confidence")),
                             *confidence_node));
        ds.insert(Quad::make(*confidence_node, Term::iri(vocab::aigckit("mean")),
                             double_literal(c.mean)));
        ds.insert(Quad::make(*confidence_node, Term::iri(vocab::aigckit("min")),
                             double_literal(c.min)));
        ds.insert(Quad::make(*confidence_node, Term::iri(vocab::aigckit("max")),
                             double_literal(c.max)));
        ds.insert(Quad::make(*confidence_node, Term::iri(vocab::aigckit("count")),
                             integer_literal(c.count)));
        ds.insert(Quad::make(*confidence_node, Term::iri(vocab::aigckit("perplexity")),
                             double_literal(c.perplexity)));
    }

    ds.insert(Quad::make(hyper_node, Term::iri(vocab::aigckit("temperature")),
                         double_literal(e.subject.hyper.temperature)));
    ds.insert(Quad::make(hyper_node, Term::iri(vocab::aigckit("max_tokens")),
                         integer_literal(e.subject.hyper.max_tokens)));
    for (const auto& [name, value] : e.subject.hyper.extra)
        ds.insert(Quad::make(hyper_node, Term::iri(vocab::aigckit(name)), param_literal(value)));

    if (e.subject.thought) {
        ds.insert(Quad::make(subject_node, Term::iri(vocab::aigckit("thought")), *thought_node));
        ds.insert(Quad::make(*thought_node, type, Term::iri(vocab::aigckit("Thought"))));
        ds.insert(Quad::make(*thought_node, Term::iri(vocab::aigckit("value")),
                             Term::literal(e.subject.thought->value)));
        ds.insert(Quad::make(*thought_node, Term::iri(vocab::aigckit("sourceTag")),
                             Term::literal(e.subject.thought->source_tag)));
    }

    ds.insert(Quad::make(Term::iri(e.subject.model.iri), type, Term::iri(vocab::aigckit("Model"))));
    ds.insert(Quad::make(Term::iri(e.subject.model.iri), Term::iri(vocab::aigckit("label")),
                         Term::literal(e.subject.model.label)));

    if (include_proof && e.proof) {
        const auto proof_node = Term::blank("pf0");
        ds.insert(Quad::make(envelope_node, Term::iri(vocab::sec("proof")), proof_node));
        add_proof_quads(ds, *e.proof, proof_node, /*include_value=*/true);
    }
    return ds;
}

Dataset proof_options_dataset(const vc::Proof& proof) {
    Dataset ds;
    add_proof_quads(ds, proof, Term::blank("pf0"), /*include_value=*/false);
    return ds;
}

}  // namespace aigckit::rdf
