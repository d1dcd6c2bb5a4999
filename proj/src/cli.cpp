#include "aigckit/cli.hpp"

#include <charconv>
#include <filesystem>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aigckit/curation.hpp"
#include "aigckit/did.hpp"
#include "aigckit/envelope.hpp"
#include "aigckit/generation.hpp"
#include "aigckit/poml.hpp"
#include "aigckit/proof.hpp"
#include "aigckit/store.hpp"
#include "aigckit/util.hpp"

namespace aigckit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kSchemaVersion = 1;

struct Io {
    std::ostream& out;
    std::ostream& err;
};

struct ResolverOpts {
    bool offline = false;
    std::string did_dir;
    bool insecure_http = false;
};

void add_resolver_opts(CLI::App* cmd, ResolverOpts& opts) {
    cmd->add_flag("--offline", opts.offline, "Never touch the network; requires --did-dir");
    cmd->add_option("--did-dir", opts.did_dir, "Directory of DID document fixtures")
        ->envname("AIGC_DID_DIR");
    cmd->add_flag("--insecure-http", opts.insecure_http,
                  "Allow plain-HTTP DID resolution and endpoints (tests only)");
}

std::unique_ptr<did::CachingResolver> make_resolver(const ResolverOpts& opts) {
    did::CachingResolver::Options options;
    if (opts.offline || !opts.did_dir.empty()) {
        if (opts.did_dir.empty())
            throw InvalidArgument("--offline requires --did-dir");
        options.fixture_dir = fs::path(opts.did_dir);
    }
    options.insecure_http = opts.insecure_http;
    return std::make_unique<did::CachingResolver>(options);
}

vc::ParamValue parse_param_value(const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    std::int64_t i = 0;
    auto [iptr, iec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
    if (iec == std::errc() && iptr == raw.data() + raw.size()) return i;
    double d = 0;
    auto [dptr, dec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
    if (dec == std::errc() && dptr == raw.data() + raw.size()) return d;
    return raw;
}

std::map<std::string, vc::ParamValue> parse_params(const std::vector<std::string>& raw) {
    std::map<std::string, vc::ParamValue> params;
    for (const auto& entry : raw) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
            throw InvalidArgument("--param expects name=value, got: " + entry);
        params[entry.substr(0, eq)] = parse_param_value(entry.substr(eq + 1));
    }
    return params;
}

vc::ModelRef model_ref_from(const std::string& label, const std::string& iri) {
    if (label.empty()) throw InvalidArgument("--model is required");
    return vc::ModelRef::make(iri.empty() ? "https://huggingface.co/" + label : iri, label);
}

// ---------------------------------------------------------------------------
// keygen

struct KeygenOpts {
    std::string out_file;
    std::string seed_hex;
    std::string id;
    bool as_json = false;
};

int cmd_keygen(const KeygenOpts& opts, Io io) {
    proof::KeyPair key;
    if (!opts.seed_hex.empty()) {
        const auto seed = util::from_hex(opts.seed_hex);
        key = proof::keygen(std::span<const unsigned char>(seed.data(), seed.size()));
    } else {
        key = proof::keygen();
    }
    proof::save_key_file({opts.id, key}, opts.out_file);
    const auto public_multibase = proof::multibase_encode(key.public_key);
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "keygen";
        j["key_file"] = opts.out_file;
        j["public"] = public_multibase;
        j["public_multikey"] = proof::public_key_multibase(key.public_key);
        io.out << j.dump() << "\n";
    } else {
        io.out << "wrote " << opts.out_file << "\n";
        io.out << "public key (multibase): " << public_multibase << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// did-doc init

struct DidDocOpts {
    std::string key_file;
    std::string did;
    std::string fragment = "key-1";
    std::string out_file;
    std::string did_dir;
    bool as_json = false;
};

int cmd_did_doc_init(const DidDocOpts& opts, Io io) {
    const auto key_file = proof::load_key_file(opts.key_file);
    const auto document = did::did_document_json(opts.did, key_file.key.public_key, opts.fragment);
    std::vector<std::string> written;
    if (!opts.out_file.empty()) {
        util::write_file(opts.out_file, document);
        written.push_back(opts.out_file);
    }
    if (!opts.did_dir.empty()) {
        fs::create_directories(opts.did_dir);
        const auto path = fs::path(opts.did_dir) / did::fixture_filename(opts.did);
        util::write_file(path, document);
        written.push_back(path.string());
    }
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "did-doc init";
        j["did"] = opts.did;
        j["verification_method"] = opts.did + "#" + opts.fragment;
        j["written"] = written;
        io.out << j.dump() << "\n";
    } else if (written.empty()) {
        io.out << document;
    } else {
        for (const auto& path : written) io.out << "wrote " << path << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// generation client plumbing shared by decompose/generate/issue

struct ClientOpts {
    std::string endpoint;
    bool mock = false;
    std::string mock_file;
    std::string content_file;  // issue only
};

std::unique_ptr<gen::GenerationClient> make_client(const ClientOpts& opts, bool insecure_http) {
    if (opts.mock) {
        auto client = std::make_unique<gen::MockGenerationClient>();
        if (!opts.mock_file.empty())
            *client = gen::MockGenerationClient::from_file(opts.mock_file);
        return client;
    }
    if (opts.endpoint.empty()) throw InvalidArgument("no generation endpoint configured");
    return std::make_unique<gen::HttpGenerationClient>(opts.endpoint, insecure_http);
}

// ---------------------------------------------------------------------------
// render / decompose

struct RenderOpts {
    std::string main_file;
    std::string out_file;
};

int cmd_render(const RenderOpts& opts, Io io) {
    const auto path = fs::path(opts.main_file);
    const auto prompt =
        poml::parse_main_file(util::read_file(path), poml::file_resolver(path.parent_path()));
    const auto markdown = poml::render_markdown(prompt);
    if (opts.out_file.empty()) io.out << markdown;
    else util::write_file(opts.out_file, markdown);
    return 0;
}

struct DecomposeOpts {
    std::string in_file;
    std::string out_dir;
    std::string extractor = "rule";
    std::string endpoint;
    bool mock = false;
    std::string mock_file;
    std::string model_label = "extractor";
    bool insecure_http = false;
    bool print = false;
    bool as_json = false;
};

int cmd_decompose(const DecomposeOpts& opts, Io io) {
    std::unique_ptr<gen::GenerationClient> client;
    std::unique_ptr<poml::Extractor> extractor;
    if (opts.extractor == "rule") {
        extractor = std::make_unique<poml::RuleExtractor>();
    } else if (opts.extractor == "external") {
        ClientOpts client_opts;
        client_opts.endpoint = opts.endpoint;
        client_opts.mock = opts.mock;
        client_opts.mock_file = opts.mock_file;
        client = make_client(client_opts, opts.insecure_http);
        extractor = std::make_unique<gen::ClientExtractor>(
            *client, model_ref_from(opts.model_label, ""),
            vc::HyperParameters::make(0.0, 2000));
    } else {
        throw InvalidArgument("--extractor must be rule or external");
    }
    const auto prompt = poml::decompose_plain_prompt(util::read_file(opts.in_file), *extractor);
    if (opts.print || opts.out_dir.empty()) {
        io.out << poml::render_markdown(prompt);
        if (opts.out_dir.empty()) return 0;
    }
    fs::create_directories(opts.out_dir);
    std::vector<std::string> srcs;
    for (const auto& module : prompt.modules) {
        const auto name = std::string(poml::tag_name(module.kind)) + ".poml";
        util::write_file(fs::path(opts.out_dir) / name, poml::module_to_poml(module));
        srcs.push_back(name);
    }
    const auto main_path = fs::path(opts.out_dir) / "main.poml";
    util::write_file(main_path, poml::main_poml_with_includes(srcs));
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "decompose";
        j["main"] = main_path.string();
        j["modules"] = srcs;
        io.out << j.dump() << "\n";
    } else {
        io.out << "wrote " << main_path.string() << " (+" << srcs.size() << " module files)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
    std::string prompt_file;
    ClientOpts client;
    std::string model_label;
    std::string model_iri;
    double temperature = 1.0;
    std::int64_t max_tokens = 2000;
    std::vector<std::string> params;
    bool insecure_http = false;
    bool as_json = false;
};

std::string load_prompt_markdown(const std::string& prompt_file) {
    const auto path = fs::path(prompt_file);
    const auto text = util::read_file(path);
    if (path.extension() == ".poml") {
        const auto prompt = poml::parse_main_file(text, poml::file_resolver(path.parent_path()));
        return poml::render_markdown(prompt);
    }
    return text;
}

int cmd_generate(const GenerateOpts& opts, Io io) {
    const auto markdown = load_prompt_markdown(opts.prompt_file);
    const auto model = model_ref_from(opts.model_label, opts.model_iri);
    const auto hyper =
        vc::HyperParameters::make(opts.temperature, opts.max_tokens, parse_params(opts.params));
    auto client = make_client(opts.client, opts.insecure_http);
    const auto result = gen::generate(markdown, model, hyper, *client);
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "generate";
        j["text"] = result.text;
        j["logprobs_available"] = result.logprobs_available;
        if (result.logprobs_available) {
            const auto confidence = gen::compute_confidence(result.tokens);
            j["confidence"] = {{"mean", confidence.mean},
                               {"min", confidence.min},
                               {"max", confidence.max},
                               {"count", confidence.count},
                               {"perplexity", confidence.perplexity}};
        }
        io.out << j.dump() << "\n";
    } else {
        io.out << result.text << "\n";
        if (result.logprobs_available) {
            const auto confidence = gen::compute_confidence(result.tokens);
            io.err << "confidence mean " << util::format_double(confidence.mean) << " over "
                   << confidence.count << " tokens\n";
        } else {
            io.err << "logprobs unavailable; no confidence recorded\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// issue

struct IssueOpts {
    std::string prompt_file;
    ClientOpts client;
    std::string key_file;
    std::string issuer_did;
    std::string issuer_name;
    std::string verification_method;
    std::string store_dir;
    std::string model_label;
    std::string model_iri;
    double temperature = 1.0;
    std::int64_t max_tokens = 2000;
    std::vector<std::string> params;
    std::string created;
    std::string uuid;
    bool insecure_http = false;
    bool as_json = false;
};

int cmd_issue(const IssueOpts& opts, Io io) {
    const auto path = fs::path(opts.prompt_file);
    const auto prompt =
        poml::parse_main_file(util::read_file(path), poml::file_resolver(path.parent_path()));
    const auto markdown = poml::render_markdown(prompt);
    const auto model = model_ref_from(opts.model_label, opts.model_iri);
    const auto hyper =
        vc::HyperParameters::make(opts.temperature, opts.max_tokens, parse_params(opts.params));

    std::string raw_text;
    std::optional<vc::ConfidenceStats> confidence;
    if (!opts.client.content_file.empty()) {
        raw_text = util::read_file(opts.client.content_file);
    } else {
        auto client = make_client(opts.client, opts.insecure_http);
        const auto result = gen::generate(markdown, model, hyper, *client);
        raw_text = result.text;
        if (result.logprobs_available) confidence = gen::compute_confidence(result.tokens);
        else io.err << "warning: logprobs unavailable; envelope carries no confidence\n";
    }

    const auto split = gen::extract_thought(raw_text);
    auto content = vc::GeneratedContent::make(raw_text, prompt, model, hyper, confidence,
                                              split.thought);

    const auto issuer = vc::IssuerRef::make(opts.issuer_did, opts.issuer_name);
    const auto valid_from = opts.created.empty() ? util::Timestamp::now()
                                                 : util::Timestamp::parse(opts.created);
    auto envelope = vc::build_envelope(std::move(content), issuer, valid_from,
                                       opts.uuid.empty() ? std::nullopt
                                                         : std::optional(opts.uuid));

    const auto key_file = proof::load_key_file(opts.key_file);
    const auto method = !opts.verification_method.empty() ? opts.verification_method
                        : !key_file.id.empty()            ? key_file.id
                                                          : opts.issuer_did + "#key-1";
    const auto signed_envelope =
        proof::sign_envelope(envelope, key_file.key, method, valid_from);

    store::EnvelopeStore store_dir(opts.store_dir);
    const auto saved = store_dir.save(signed_envelope);
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "issue";
        j["id"] = signed_envelope.id;
        j["path"] = saved.string();
        j["has_thought"] = split.thought.has_value();
        j["has_confidence"] = confidence.has_value();
        io.out << j.dump() << "\n";
    } else {
        io.out << signed_envelope.id << " -> " << saved.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOpts {
    std::vector<std::string> files;
    std::string store_dir;
    ResolverOpts resolver;
    std::size_t concurrency = 4;
    bool as_json = false;
};

int cmd_verify(const VerifyOpts& opts, Io io) {
    auto resolver = make_resolver(opts.resolver);
    const auto lookup = resolver->key_lookup();

    struct Target {
        std::string name;
        std::optional<fs::path> file;  // store id otherwise
    };
    std::vector<Target> targets;
    for (const auto& file : opts.files) targets.push_back({file, fs::path(file)});
    std::optional<store::EnvelopeStore> envelope_store;
    if (!opts.store_dir.empty()) {
        envelope_store.emplace(opts.store_dir);
        for (const auto& id : envelope_store->list()) targets.push_back({id, std::nullopt});
    }
    if (targets.empty()) throw InvalidArgument("nothing to verify: pass files or --store");

    std::vector<proof::VerificationResult> results(targets.size(),
                                                   {proof::VerificationStatus::MalformedProof, ""});
    util::parallel_for(targets.size(), opts.concurrency, [&](std::size_t i) {
        try {
            const auto envelope = targets[i].file
                                      ? vc::from_jsonld(util::read_file(*targets[i].file))
                                      : envelope_store->load(targets[i].name);
            results[i] = proof::verify_envelope(envelope, lookup);
        } catch (const std::exception& e) {
            results[i] = {proof::VerificationStatus::MalformedProof, e.what()};
        }
    });

    std::size_t verified = 0;
    json entries = json::array();
    for (std::size_t i = 0; i < targets.size(); i++) {
        const auto status = std::string(proof::to_string(results[i].status));
        if (results[i].ok()) verified++;
        if (opts.as_json) {
            json entry;
            entry["target"] = targets[i].name;
            entry["status"] = status;
            if (!results[i].detail.empty()) entry["detail"] = results[i].detail;
            entries.push_back(std::move(entry));
        } else {
            io.out << targets[i].name << ": " << status << "\n";
        }
    }
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "verify";
        j["results"] = std::move(entries);
        j["verified"] = verified;
        j["failed"] = targets.size() - verified;
        io.out << j.dump() << "\n";
    }
    return verified == targets.size() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// curate

struct CurateOpts {
    std::string store_dir;
    std::string questions_file;
    std::string judge = "rule";
    std::string judge_endpoint;
    std::string judge_model = "judge";
    std::string select = "best";
    std::uint64_t seed = 0;
    std::string report_file;
    std::string prompts_dir;
    std::string prompts_manifest;
    std::string export_file;
    ResolverOpts resolver;
    std::size_t concurrency = 4;
    bool as_json = false;
};

struct PromptEntry {
    poml::StructuredPrompt prompt;
    std::string rendered;
};

// prompt_id -> parsed prompt, from --prompts-dir or --prompts-manifest.
std::map<std::string, PromptEntry> load_prompt_corpus(const CurateOpts& opts) {
    std::map<std::string, PromptEntry> corpus;
    auto add_main_file = [&corpus](const std::string& prompt_id, const fs::path& file) {
        auto prompt =
            poml::parse_main_file(util::read_file(file), poml::file_resolver(file.parent_path()));
        auto rendered = poml::render_markdown(prompt);
        corpus[prompt_id] = PromptEntry{std::move(prompt), std::move(rendered)};
    };
    if (!opts.prompts_dir.empty()) {
        for (const auto& entry : fs::directory_iterator(opts.prompts_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".poml") continue;
            // module files live beside main files; only <poml> roots are prompts
            if (!util::trim(util::read_file(entry.path())).starts_with("<poml")) continue;
            add_main_file(entry.path().stem().string(), entry.path());
        }
    } else if (!opts.prompts_manifest.empty()) {
        const auto base = fs::path(opts.prompts_manifest).parent_path();
        for (const auto& line : util::split_lines(util::read_file(opts.prompts_manifest))) {
            if (util::trim(line).empty()) continue;
            const auto j = json::parse(line);
            add_main_file(j.at("prompt_id").get<std::string>(),
                          base / j.at("file").get<std::string>());
        }
    } else {
        throw InvalidArgument("curate needs --prompts-dir or --prompts-manifest");
    }
    if (corpus.empty()) throw InvalidArgument("prompt corpus is empty");
    return corpus;
}

int cmd_curate(const CurateOpts& opts, Io io) {
    auto resolver = make_resolver(opts.resolver);
    const auto lookup = resolver->key_lookup();

    const auto corpus = load_prompt_corpus(opts);

    // questions grouped by prompt id; a questions file overrides derivation
    std::map<std::string, std::vector<curation::RequirementQuestion>> questions;
    if (!opts.questions_file.empty()) {
        for (auto& q : curation::parse_questions_jsonl(util::read_file(opts.questions_file)))
            questions[q.prompt_id].push_back(std::move(q));
    } else {
        for (const auto& [prompt_id, entry] : corpus) {
            try {
                questions[prompt_id] = curation::derive_questions(entry.prompt, prompt_id);
            } catch (const curation::NoRequirementsModule&) {
                io.err << "warning: prompt " << prompt_id
                       << " has no Requirements module; no questions derived\n";
            }
        }
        if (opts.judge == "rule")
            io.err << "note: derived questions carry no machine checks; the rule judge "
                      "needs --questions with check entries\n";
    }

    // load and group envelopes by rendered prompt text
    store::EnvelopeStore envelope_store(opts.store_dir);
    std::map<std::string, std::vector<vc::AigcEnvelope>> by_prompt_text;
    std::size_t unreadable = 0;
    for (const auto& id : envelope_store.list()) {
        try {
            auto envelope = envelope_store.load(id);
            auto text = envelope.subject.prompt.rendered_cache
                            ? *envelope.subject.prompt.rendered_cache
                            : poml::render_markdown(envelope.subject.prompt);
            by_prompt_text[std::move(text)].push_back(std::move(envelope));
        } catch (const std::exception& e) {
            io.err << "warning: skipping unreadable envelope " << id << ": " << e.what() << "\n";
            unreadable++;
        }
    }

    std::unique_ptr<gen::GenerationClient> judge_client;
    std::unique_ptr<curation::Judge> judge;
    if (opts.judge == "rule") {
        judge = std::make_unique<curation::RuleJudge>();
    } else if (opts.judge == "external") {
        if (opts.judge_endpoint.empty())
            throw InvalidArgument("--judge external requires --judge-endpoint");
        judge_client = std::make_unique<gen::HttpGenerationClient>(opts.judge_endpoint,
                                                                   opts.resolver.insecure_http);
        curation::ExternalJudgeConfig config;
        config.model = vc::ModelRef::make("https://huggingface.co/" + opts.judge_model,
                                          opts.judge_model);
        judge = std::make_unique<curation::ExternalJudge>(*judge_client, config);
    } else {
        throw InvalidArgument("--judge must be rule or external");
    }

    curation::CurationReport report;
    report.policy = opts.select;
    if (opts.select == "random") report.seed = opts.seed;
    else if (opts.select != "best") throw InvalidArgument("--select must be best or random");

    std::map<std::string, std::vector<std::string>> survivors_per_prompt;
    std::map<std::string, const curation::CandidateScore*> score_index;
    std::map<std::string, curation::CandidateMeta> meta;
    std::size_t failed_prompts = 0;

    for (const auto& [prompt_id, entry] : corpus) {
        const auto candidates_it = by_prompt_text.find(entry.rendered);
        if (candidates_it == by_prompt_text.end()) {
            io.err << "warning: no stored envelopes for prompt " << prompt_id << "\n";
            continue;
        }
        auto candidates = candidates_it->second;
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& a, const auto& b) { return a.id < b.id; });
        const auto question_it = questions.find(prompt_id);
        const std::vector<curation::RequirementQuestion> empty_questions;
        const auto& prompt_questions =
            question_it == questions.end() ? empty_questions : question_it->second;
        if (prompt_questions.empty())
            io.err << "warning: prompt " << prompt_id
                   << " has no questions; counted as vacuously satisfied\n";

        curation::PromptEvaluation evaluation;
        try {
            evaluation = curation::evaluate_candidates(prompt_id, candidates, prompt_questions,
                                                       *judge, lookup, opts.concurrency);
        } catch (const curation::AllCandidatesUnverifiable&) {
            evaluation.prompt_id = prompt_id;
            for (const auto& envelope : candidates) {
                const auto result = proof::verify_envelope(envelope, lookup);
                evaluation.excluded.push_back(
                    {envelope.id, std::string(proof::to_string(result.status))});
            }
            io.err << "error: all candidates for prompt " << prompt_id
                   << " failed verification\n";
            failed_prompts++;
            report.evaluations.push_back(std::move(evaluation));
            continue;
        }
        for (const auto& envelope : candidates) {
            const bool survived =
                std::any_of(evaluation.scores.begin(), evaluation.scores.end(),
                            [&](const auto& s) { return s.envelope_id == envelope.id; });
            if (!survived) continue;
            survivors_per_prompt[prompt_id].push_back(envelope.id);
            curation::CandidateMeta m;
            if (envelope.subject.confidence) m.confidence_mean = envelope.subject.confidence->mean;
            m.model_label = envelope.subject.model.label;
            meta[envelope.id] = m;
        }
        report.evaluations.push_back(std::move(evaluation));
    }

    if (survivors_per_prompt.empty()) throw Error("no prompt had any verifiable candidate");

    // selection
    for (const auto& evaluation : report.evaluations) {
        if (evaluation.scores.empty()) continue;
        if (opts.select == "best")
            report.selected[evaluation.prompt_id] = curation::select_best(evaluation.scores, meta);
    }
    if (opts.select == "random")
        report.selected = curation::select_random(survivors_per_prompt, opts.seed);

    // metrics over the selected candidate of each prompt
    std::vector<curation::CandidateScore> selected_scores;
    for (const auto& evaluation : report.evaluations) {
        const auto it = report.selected.find(evaluation.prompt_id);
        if (it == report.selected.end()) continue;
        for (const auto& score : evaluation.scores) {
            if (score.envelope_id == it->second) {
                selected_scores.push_back(score);
                break;
            }
        }
    }
    report.metrics = curation::compute_metrics(selected_scores);

    if (!opts.report_file.empty())
        util::write_file(opts.report_file, curation::report_to_json(report));

    if (!opts.export_file.empty()) {
        std::vector<curation::SelectedEnvelope> selection;
        for (const auto& [prompt_id, envelope_id] : report.selected)
            selection.push_back({prompt_id, envelope_store.load(envelope_id)});
        util::write_file(opts.export_file, curation::export_finetune(std::move(selection), lookup));
    }

    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "curate";
        j["policy"] = report.policy;
        if (report.seed) j["seed"] = *report.seed;
        j["rfr"] = report.metrics.rfr;
        j["frfr"] = report.metrics.frfr;
        j["prompts"] = report.metrics.prompts;
        j["selected"] = report.selected;
        if (!opts.report_file.empty()) j["report"] = opts.report_file;
        io.out << j.dump() << "\n";
    } else {
        io.out << curation::format_metrics_table(report.metrics);
    }
    return failed_prompts == 0 && unreadable == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// export-ft / metrics

struct ExportOpts {
    std::string report_file;
    std::string store_dir;
    std::string out_file;
    ResolverOpts resolver;
    bool as_json = false;
};

int cmd_export_ft(const ExportOpts& opts, Io io) {
    auto resolver = make_resolver(opts.resolver);
    const auto report = curation::report_from_json(util::read_file(opts.report_file));
    store::EnvelopeStore envelope_store(opts.store_dir);
    std::vector<curation::SelectedEnvelope> selection;
    for (const auto& [prompt_id, envelope_id] : report.selected)
        selection.push_back({prompt_id, envelope_store.load(envelope_id)});
    const auto jsonl = curation::export_finetune(std::move(selection), resolver->key_lookup());
    util::write_file(opts.out_file, jsonl);
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "export-ft";
        j["out"] = opts.out_file;
        j["lines"] = report.selected.size();
        io.out << j.dump() << "\n";
    } else {
        io.out << "wrote " << opts.out_file << " (" << report.selected.size() << " lines)\n";
    }
    return 0;
}

struct MetricsOpts {
    std::string report_file;
    bool as_json = false;
};

int cmd_metrics(const MetricsOpts& opts, Io io) {
    const auto report = curation::report_from_json(util::read_file(opts.report_file));
    if (opts.as_json) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["command"] = "metrics";
        j["rfr"] = report.metrics.rfr;
        j["frfr"] = report.metrics.frfr;
        j["prompts"] = report.metrics.prompts;
        j["total_questions"] = report.metrics.total_questions;
        io.out << j.dump() << "\n";
    } else {
        io.out << curation::format_metrics_table(report.metrics);
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Io io{out, err};
    CLI::App app{"Issue, verify, and curate provenance envelopes for AI-generated content"};
    app.set_config("--config", "", "Config file (key = value, sections per subcommand)")
        ->envname("AIGC_CONFIG");
    app.require_subcommand(1);
    int exit_code = 0;

    KeygenOpts keygen_opts;
    auto* keygen_cmd = app.add_subcommand("keygen", "Generate an Ed25519 key file");
    keygen_cmd->add_option("--out", keygen_opts.out_file, "Key file path")
        ->required()
        ->envname("AIGC_KEY_FILE");
    keygen_cmd->add_option("--seed", keygen_opts.seed_hex, "32-byte seed as hex (deterministic)");
    keygen_cmd->add_option("--id", keygen_opts.id, "Verification method DID URL to record");
    keygen_cmd->add_flag("--json", keygen_opts.as_json, "Machine-readable output");
    keygen_cmd->callback([&] { exit_code = cmd_keygen(keygen_opts, io); });

    auto* did_doc_cmd = app.add_subcommand("did-doc", "DID document helpers");
    did_doc_cmd->require_subcommand(1);
    DidDocOpts did_doc_opts;
    auto* did_init_cmd =
        did_doc_cmd->add_subcommand("init", "Emit a DID document for a local key");
    did_init_cmd->add_option("--key", did_doc_opts.key_file, "Key file")
        ->required()
        ->envname("AIGC_KEY_FILE");
    did_init_cmd->add_option("--did", did_doc_opts.did, "did:web identifier")->required();
    did_init_cmd->add_option("--fragment", did_doc_opts.fragment, "Key fragment name");
    did_init_cmd->add_option("--out", did_doc_opts.out_file, "Write document to this path");
    did_init_cmd->add_option("--did-dir", did_doc_opts.did_dir,
                             "Also write into a fixture directory (offline verification)");
    did_init_cmd->add_flag("--json", did_doc_opts.as_json, "Machine-readable output");
    did_init_cmd->callback([&] { exit_code = cmd_did_doc_init(did_doc_opts, io); });

    RenderOpts render_opts;
    auto* render_cmd = app.add_subcommand("render", "Render a main POML file to Markdown");
    render_cmd->add_option("main", render_opts.main_file, "Main .poml file")->required();
    render_cmd->add_option("--out", render_opts.out_file, "Write instead of printing");
    render_cmd->callback([&] { exit_code = cmd_render(render_opts, io); });

    DecomposeOpts decompose_opts;
    auto* decompose_cmd =
        app.add_subcommand("decompose", "Split a plain prompt into POML modules");
    decompose_cmd->add_option("input", decompose_opts.in_file, "Plain prompt text file")
        ->required();
    decompose_cmd->add_option("--out-dir", decompose_opts.out_dir, "Directory for .poml files");
    decompose_cmd->add_option("--extractor", decompose_opts.extractor,
                              "rule (built-in, deterministic) | external (model-backed)");
    decompose_cmd->add_option("--endpoint", decompose_opts.endpoint,
                              "Endpoint for --extractor external")
        ->envname("AIGC_ENDPOINT");
    decompose_cmd->add_flag("--mock", decompose_opts.mock, "Mock client for --extractor external");
    decompose_cmd->add_option("--mock-file", decompose_opts.mock_file,
                              "Scripted mock responses (JSON)");
    decompose_cmd->add_option("--model", decompose_opts.model_label, "Extractor model label");
    decompose_cmd->add_flag("--insecure-http", decompose_opts.insecure_http,
                            "Allow plain HTTP endpoints (tests only)");
    decompose_cmd->add_flag("--print", decompose_opts.print, "Also print rendered Markdown");
    decompose_cmd->add_flag("--json", decompose_opts.as_json, "Machine-readable output");
    decompose_cmd->callback([&] { exit_code = cmd_decompose(decompose_opts, io); });

    GenerateOpts generate_opts;
    auto* generate_cmd = app.add_subcommand("generate", "Call a generation endpoint once");
    generate_cmd->add_option("--prompt", generate_opts.prompt_file, "Prompt (.poml or Markdown)")
        ->required();
    generate_cmd->add_option("--endpoint", generate_opts.client.endpoint, "Generation endpoint")
        ->envname("AIGC_ENDPOINT");
    generate_cmd->add_flag("--mock", generate_opts.client.mock, "Use the deterministic mock");
    generate_cmd->add_option("--mock-file", generate_opts.client.mock_file,
                             "Scripted mock responses (JSON)");
    generate_cmd->add_option("--model", generate_opts.model_label, "Model label")
        ->envname("AIGC_MODEL");
    generate_cmd->add_option("--model-iri", generate_opts.model_iri, "Model IRI");
    generate_cmd->add_option("--temperature", generate_opts.temperature, "Sampling temperature");
    generate_cmd->add_option("--max-tokens", generate_opts.max_tokens, "Token budget");
    generate_cmd->add_option("--param", generate_opts.params, "Extra hyperparameter name=value");
    generate_cmd->add_flag("--insecure-http", generate_opts.insecure_http,
                           "Allow plain HTTP endpoints (tests only)");
    generate_cmd->add_flag("--json", generate_opts.as_json, "Machine-readable output");
    generate_cmd->callback([&] { exit_code = cmd_generate(generate_opts, io); });

    IssueOpts issue_opts;
    auto* issue_cmd =
        app.add_subcommand("issue", "Generate (or read) content, envelope, sign, store");
    issue_cmd->add_option("--prompt", issue_opts.prompt_file, "Main .poml prompt")->required();
    auto* source = issue_cmd->add_option_group("content-source", "Where the content comes from");
    source->add_option("--content-file", issue_opts.client.content_file,
                       "Use pre-generated raw output");
    source->add_option("--endpoint", issue_opts.client.endpoint, "Generation endpoint")
        ->envname("AIGC_ENDPOINT");
    source->add_flag("--mock", issue_opts.client.mock, "Use the deterministic mock client");
    source->require_option(1);
    issue_cmd->add_option("--mock-file", issue_opts.client.mock_file,
                          "Scripted mock responses (JSON)");
    issue_cmd->add_option("--key", issue_opts.key_file, "Signing key file")
        ->required()
        ->envname("AIGC_KEY_FILE");
    issue_cmd->add_option("--issuer-did", issue_opts.issuer_did, "Issuer DID")->required();
    issue_cmd->add_option("--issuer-name", issue_opts.issuer_name, "Issuer display name")
        ->required();
    issue_cmd->add_option("--vm", issue_opts.verification_method,
                          "Verification method DID URL (default <issuer>#key-1)");
    issue_cmd->add_option("--store", issue_opts.store_dir, "Envelope store directory")
        ->required()
        ->envname("AIGC_STORE_DIR");
    issue_cmd->add_option("--model", issue_opts.model_label, "Model label")
        ->envname("AIGC_MODEL");
    issue_cmd->add_option("--model-iri", issue_opts.model_iri, "Model IRI");
    issue_cmd->add_option("--temperature", issue_opts.temperature, "Sampling temperature");
    issue_cmd->add_option("--max-tokens", issue_opts.max_tokens, "Token budget");
    issue_cmd->add_option("--param", issue_opts.params, "Extra hyperparameter name=value");
    issue_cmd->add_option("--created", issue_opts.created,
                          "validFrom / proof timestamp (RFC 3339; default now)");
    issue_cmd->add_option("--uuid", issue_opts.uuid, "Fixed envelope UUID (default random)");
    issue_cmd->add_flag("--insecure-http", issue_opts.insecure_http,
                        "Allow plain HTTP endpoints (tests only)");
    issue_cmd->add_flag("--json", issue_opts.as_json, "Machine-readable output");
    issue_cmd->callback([&] { exit_code = cmd_issue(issue_opts, io); });

    VerifyOpts verify_opts;
    auto* verify_cmd = app.add_subcommand("verify", "Verify envelope proofs");
    verify_cmd->add_option("files", verify_opts.files, "Envelope .jsonld files");
    verify_cmd->add_option("--store", verify_opts.store_dir, "Verify every envelope in a store")
        ->envname("AIGC_STORE_DIR");
    add_resolver_opts(verify_cmd, verify_opts.resolver);
    verify_cmd->add_option("--concurrency", verify_opts.concurrency, "Parallel verifications")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->envname("AIGC_CONCURRENCY");
    verify_cmd->add_flag("--json", verify_opts.as_json, "Machine-readable output");
    verify_cmd->callback([&] { exit_code = cmd_verify(verify_opts, io); });

    CurateOpts curate_opts;
    auto* curate_cmd =
        app.add_subcommand("curate", "Judge candidates, select per prompt, compute metrics");
    curate_cmd->add_option("--store", curate_opts.store_dir, "Envelope store directory")
        ->required()
        ->envname("AIGC_STORE_DIR");
    curate_cmd->add_option("--questions", curate_opts.questions_file,
                           "Questions JSONL file; when omitted, questions are derived from "
                           "each prompt's Requirements module (external judge only)");
    curate_cmd->add_option("--judge", curate_opts.judge, "rule | external");
    curate_cmd->add_option("--judge-endpoint", curate_opts.judge_endpoint,
                           "Endpoint for the external judge")
        ->envname("AIGC_JUDGE_ENDPOINT");
    curate_cmd->add_option("--judge-model", curate_opts.judge_model, "External judge model label");
    curate_cmd->add_option("--select", curate_opts.select, "best | random");
    curate_cmd->add_option("--seed", curate_opts.seed, "Seed for --select random")
        ->envname("AIGC_SEED");
    curate_cmd->add_option("--report", curate_opts.report_file, "Write the curation report JSON");
    curate_cmd->add_option("--prompts-dir", curate_opts.prompts_dir,
                           "Directory of main .poml files (prompt_id = stem)");
    curate_cmd->add_option("--prompts-manifest", curate_opts.prompts_manifest,
                           "JSONL of {prompt_id, file}");
    curate_cmd->add_option("--export-ft", curate_opts.export_file,
                           "Also export fine-tuning JSONL");
    add_resolver_opts(curate_cmd, curate_opts.resolver);
    curate_cmd->add_option("--concurrency", curate_opts.concurrency, "Parallel judging")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->envname("AIGC_CONCURRENCY");
    curate_cmd->add_flag("--json", curate_opts.as_json, "Machine-readable output");
    curate_cmd->callback([&] { exit_code = cmd_curate(curate_opts, io); });

    ExportOpts export_opts;
    auto* export_cmd =
        app.add_subcommand("export-ft", "Export fine-tuning JSONL from a curation report");
    export_cmd->add_option("--report", export_opts.report_file, "Curation report JSON")
        ->required();
    export_cmd->add_option("--store", export_opts.store_dir, "Envelope store directory")
        ->required()
        ->envname("AIGC_STORE_DIR");
    export_cmd->add_option("--out", export_opts.out_file, "Output JSONL path")->required();
    add_resolver_opts(export_cmd, export_opts.resolver);
    export_cmd->add_flag("--json", export_opts.as_json, "Machine-readable output");
    export_cmd->callback([&] { exit_code = cmd_export_ft(export_opts, io); });

    MetricsOpts metrics_opts;
    auto* metrics_cmd = app.add_subcommand("metrics", "Print RFR/FRFR from a curation report");
    metrics_cmd->add_option("--report", metrics_opts.report_file, "Curation report JSON")
        ->required();
    metrics_cmd->add_flag("--json", metrics_opts.as_json, "Machine-readable output");
    metrics_cmd->callback([&] { exit_code = cmd_metrics(metrics_opts, io); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("aigckit");
    for (const auto& arg : args) argv.push_back(arg.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace aigckit::cli
