#include "aigckit/curation.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <random>
#include <regex>

#include <nlohmann/json.hpp>

#include "aigckit/util.hpp"

namespace aigckit::curation {

using nlohmann::json;

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Yes ? "yes" : "no"; }
std::string_view to_string(JudgeKind kind) { return kind == JudgeKind::Rule ? "rule" : "external"; }

namespace {

Verdict verdict_from_string(std::string_view s) {
    if (s == "yes") return Verdict::Yes;
    if (s == "no") return Verdict::No;
    throw InvalidArgument("verdict must be yes or no: " + std::string(s));
}

JudgeKind judge_kind_from_string(std::string_view s) {
    if (s == "rule") return JudgeKind::Rule;
    if (s == "external") return JudgeKind::External;
    throw InvalidArgument("judge kind must be rule or external: " + std::string(s));
}

// A list-item line: "1. foo", "2) foo", "- foo", "* foo", "• foo".
std::optional<std::string> list_item_text(std::string_view line) {
    const auto trimmed = util::trim(line);
    if (trimmed.empty()) return std::nullopt;
    std::size_t i = 0;
    while (i < trimmed.size() && std::isdigit(static_cast<unsigned char>(trimmed[i]))) i++;
    if (i > 0 && i < trimmed.size() && (trimmed[i] == '.' || trimmed[i] == ')')) {
        const auto rest = util::trim(trimmed.substr(i + 1));
        if (!rest.empty()) return std::string(rest);
        return std::nullopt;
    }
    if (trimmed[0] == '-' || trimmed[0] == '*') {
        const auto rest = util::trim(trimmed.substr(1));
        if (!rest.empty()) return std::string(rest);
        return std::nullopt;
    }
    if (trimmed.starts_with("•")) {  // bullet
        const auto rest = util::trim(trimmed.substr(3));
        if (!rest.empty()) return std::string(rest);
        return std::nullopt;
    }
    return std::nullopt;
}

std::int64_t count_lines(std::string_view content) {
    if (content.empty()) return 0;
    std::int64_t n = 0;
    for (const char c : content)
        if (c == '\n') n++;
    if (content.back() != '\n') n++;
    return n;
}

}  // namespace

std::vector<RequirementQuestion> derive_questions(const poml::StructuredPrompt& prompt,
                                                  const std::string& prompt_id) {
    const auto* requirements = prompt.find(poml::ModuleKind::Requirements);
    if (requirements == nullptr) throw NoRequirementsModule();

    // Collect list items; continuation lines attach to the current item.
    std::vector<std::string> items;
    for (const auto& line : util::split_lines(requirements->value)) {
        if (auto item = list_item_text(line)) {
            items.push_back(std::move(*item));
        } else if (!items.empty() && !util::trim(line).empty()) {
            items.back() += " " + std::string(util::trim(line));
        }
    }
    if (items.empty()) items.push_back(std::string(util::trim(requirements->value)));

    std::vector<RequirementQuestion> questions;
    for (std::size_t i = 0; i < items.size(); i++) {
        RequirementQuestion q;
        q.id = "q" + std::to_string(i + 1);
        q.prompt_id = prompt_id;
        q.question = "Does the output satisfy: " + items[i] + "?";
        questions.push_back(std::move(q));
    }
    return questions;
}

// ---------------------------------------------------------------------------
// Constraint DSL

Constraint Constraint::parse(std::string_view text) {
    const auto trimmed = util::trim(text);
    if (trimmed.empty()) throw InvalidConstraint("empty constraint");

    std::string name;
    std::string args;
    const auto open = trimmed.find('(');
    if (open == std::string_view::npos) {
        name = std::string(trimmed);
    } else {
        if (trimmed.back() != ')') throw InvalidConstraint("missing ')': " + std::string(trimmed));
        name = std::string(util::trim(trimmed.substr(0, open)));
        args = std::string(trimmed.substr(open + 1, trimmed.size() - open - 2));
    }

    auto int_arg = [&](std::string_view raw) -> std::int64_t {
        const auto t = util::trim(raw);
        if (t.empty()) throw InvalidConstraint(name + " needs an integer argument");
        std::int64_t v = 0;
        for (const char c : t) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw InvalidConstraint(name + ": not a non-negative integer: " + std::string(t));
            v = v * 10 + (c - '0');
        }
        return v;
    };
    // Quoted arguments are JSON strings; bare arguments are taken verbatim
    // after trimming.
    auto string_arg = [&](std::string_view raw) -> std::string {
        const auto t = util::trim(raw);
        if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
            try {
                return json::parse(t).get<std::string>();
            } catch (const json::exception&) {
                throw InvalidConstraint(name + ": bad quoted string: " + std::string(t));
            }
        }
        return std::string(t);
    };

    Constraint c;
    if (name == "max_words") {
        c.kind_ = Kind::MaxWords;
        c.a_ = int_arg(args);
    } else if (name == "min_words") {
        c.kind_ = Kind::MinWords;
        c.a_ = int_arg(args);
    } else if (name == "must_include") {
        c.kind_ = Kind::MustInclude;
        c.text_arg_ = string_arg(args);
        if (c.text_arg_.empty()) throw InvalidConstraint("must_include needs a non-empty string");
    } else if (name == "must_not_include") {
        c.kind_ = Kind::MustNotInclude;
        c.text_arg_ = string_arg(args);
        if (c.text_arg_.empty())
            throw InvalidConstraint("must_not_include needs a non-empty string");
    } else if (name == "matches_regex") {
        c.kind_ = Kind::MatchesRegex;
        c.text_arg_ = string_arg(args);
        try {
            c.regex_ = std::make_shared<std::regex>(c.text_arg_);
        } catch (const std::regex_error& e) {
            throw InvalidConstraint("matches_regex: " + std::string(e.what()));
        }
    } else if (name == "json_parseable") {
        c.kind_ = Kind::JsonParseable;
        if (!util::trim(args).empty()) throw InvalidConstraint("json_parseable takes no arguments");
    } else if (name == "line_count_between") {
        c.kind_ = Kind::LineCountBetween;
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw InvalidConstraint("line_count_between needs two arguments");
        c.a_ = int_arg(std::string_view(args).substr(0, comma));
        c.b_ = int_arg(std::string_view(args).substr(comma + 1));
        if (c.a_ > c.b_) throw InvalidConstraint("line_count_between: lower bound above upper");
    } else {
        throw InvalidConstraint("unknown constraint: " + name);
    }
    return c;
}

bool Constraint::evaluate(std::string_view content) const {
    switch (kind_) {
        case Kind::MaxWords:
            return static_cast<std::int64_t>(util::count_words(content)) <= a_;
        case Kind::MinWords:
            return static_cast<std::int64_t>(util::count_words(content)) >= a_;
        case Kind::MustInclude:
            return content.find(text_arg_) != std::string_view::npos;
        case Kind::MustNotInclude:
            return content.find(text_arg_) == std::string_view::npos;
        case Kind::MatchesRegex: {
            const auto& re = *static_cast<const std::regex*>(regex_.get());
            return std::regex_search(content.begin(), content.end(), re);
        }
        case Kind::JsonParseable:
            return json::accept(content);
        case Kind::LineCountBetween: {
            const auto n = count_lines(content);
            return n >= a_ && n <= b_;
        }
    }
    return false;
}

std::string Constraint::describe(std::string_view content) const {
    switch (kind_) {
        case Kind::MaxWords:
            return "word count " + std::to_string(util::count_words(content)) + " vs max " +
                   std::to_string(a_);
        case Kind::MinWords:
            return "word count " + std::to_string(util::count_words(content)) + " vs min " +
                   std::to_string(a_);
        case Kind::MustInclude:
            return "substring \"" + text_arg_ + "\" " +
                   (content.find(text_arg_) != std::string_view::npos ? "present" : "absent");
        case Kind::MustNotInclude:
            return "substring \"" + text_arg_ + "\" " +
                   (content.find(text_arg_) == std::string_view::npos ? "absent" : "present");
        case Kind::MatchesRegex:
            return "regex /" + text_arg_ + "/";
        case Kind::JsonParseable:
            return json::accept(content) ? "valid JSON" : "not valid JSON";
        case Kind::LineCountBetween:
            return "line count " + std::to_string(count_lines(content)) + " vs [" +
                   std::to_string(a_) + "," + std::to_string(b_) + "]";
    }
    return "";
}

Judgment judge_rule(std::string_view content, const RequirementQuestion& question) {
    if (!question.check)
        throw InvalidConstraint("question " + question.id + " has no machine check");
    const auto constraint = Constraint::parse(*question.check);
    Judgment j;
    j.question_id = question.id;
    j.verdict = constraint.evaluate(content) ? Verdict::Yes : Verdict::No;
    j.judge = JudgeKind::Rule;
    j.rationale = constraint.describe(content);
    return j;
}

Judgment RuleJudge::judge(const RequirementQuestion& question, const std::string& content) {
    return judge_rule(content, question);
}

std::string judge_prompt(const std::string& question, const std::string& content) {
    return "You are a strict evaluator of instruction following.\n"
           "Answer with exactly one word: yes or no.\n\n"
           "Question: " +
           question + "\n\nContent:\n" + content + "\n\nAnswer yes or no:";
}

std::optional<Verdict> parse_verdict(std::string_view reply) {
    auto text = util::lowercase(util::trim(reply));
    // first token, punctuation-tolerant
    std::string token;
    for (const char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) token.push_back(c);
        else break;
    }
    if (token == "yes") return Verdict::Yes;
    if (token == "no") return Verdict::No;
    return std::nullopt;
}

ExternalJudge::ExternalJudge(gen::GenerationClient& client, ExternalJudgeConfig config)
    : client_(client), config_(std::move(config)) {}

Judgment ExternalJudge::judge(const RequirementQuestion& question, const std::string& content) {
    return judge_external(content, question, client_, config_);
}

Judgment judge_external(const std::string& content, const RequirementQuestion& question,
                        gen::GenerationClient& client, const ExternalJudgeConfig& config) {
    gen::GenerationRequest request;
    request.prompt_markdown = judge_prompt(question.question, content);
    request.model = config.model;
    request.hyper = vc::HyperParameters::make(0.0, config.max_tokens);
    request.want_logprobs = false;

    std::string last_reply;
    for (int attempt = 0; attempt <= config.max_retries; attempt++) {
        gen::GenerationResult result;
        try {
            result = client.generate(request);
        } catch (const gen::EndpointError& e) {
            throw JudgeUnavailable(e.what());
        }
        last_reply = result.text;
        if (const auto verdict = parse_verdict(result.text)) {
            Judgment j;
            j.question_id = question.id;
            j.verdict = *verdict;
            j.judge = JudgeKind::External;
            return j;
        }
    }
    throw UnparseableVerdict(last_reply);
}

CandidateScore CandidateScore::make(std::string envelope_id, std::vector<Judgment> judgments) {
    CandidateScore score;
    score.envelope_id = std::move(envelope_id);
    score.total = static_cast<std::int64_t>(judgments.size());
    score.satisfied = std::count_if(judgments.begin(), judgments.end(),
                                    [](const auto& j) { return j.verdict == Verdict::Yes; });
    score.all_satisfied = score.satisfied == score.total;
    score.judgments = std::move(judgments);
    return score;
}

PromptEvaluation evaluate_candidates(const std::string& prompt_id,
                                     const std::vector<vc::AigcEnvelope>& envelopes,
                                     const std::vector<RequirementQuestion>& questions,
                                     Judge& judge, const proof::KeyLookup& resolve_key,
                                     std::size_t concurrency) {
    if (envelopes.empty()) throw InvalidArgument("evaluate_candidates needs at least one envelope");

    PromptEvaluation evaluation;
    evaluation.prompt_id = prompt_id;

    // Signature check precedes judging.
    std::vector<const vc::AigcEnvelope*> survivors;
    for (const auto& envelope : envelopes) {
        const auto result = proof::verify_envelope(envelope, resolve_key);
        if (result.ok()) {
            survivors.push_back(&envelope);
        } else {
            evaluation.excluded.push_back(
                {envelope.id, std::string(proof::to_string(result.status)) +
                                  (result.detail.empty() ? "" : ": " + result.detail)});
        }
    }
    if (survivors.empty()) throw AllCandidatesUnverifiable(prompt_id);

    evaluation.scores.resize(survivors.size());
    util::parallel_for(survivors.size(), concurrency, [&](std::size_t i) {
        const auto& envelope = *survivors[i];
        const auto content = gen::extract_thought(envelope.subject.value).content;
        std::vector<Judgment> judgments;
        judgments.reserve(questions.size());
        for (const auto& question : questions) judgments.push_back(judge.judge(question, content));
        evaluation.scores[i] = CandidateScore::make(envelope.id, std::move(judgments));
    });
    return evaluation;
}

namespace {

// satisfied/total as an exact rational; 0/0 counts as fully satisfied.
std::pair<std::int64_t, std::int64_t> ratio_of(const CandidateScore& s) {
    if (s.total == 0) return {1, 1};
    return {s.satisfied, s.total};
}

}  // namespace

std::string select_best(const std::vector<CandidateScore>& scores,
                        const std::map<std::string, CandidateMeta>& meta) {
    if (scores.empty()) throw InvalidArgument("select_best needs at least one score");
    const CandidateScore* best = nullptr;
    for (const auto& candidate : scores) {
        if (best == nullptr) {
            best = &candidate;
            continue;
        }
        const auto [cs, ct] = ratio_of(candidate);
        const auto [bs, bt] = ratio_of(*best);
        if (cs * bt != bs * ct) {
            if (cs * bt > bs * ct) best = &candidate;
            continue;
        }
        const auto meta_of = [&meta](const std::string& id) -> const CandidateMeta* {
            const auto it = meta.find(id);
            return it == meta.end() ? nullptr : &it->second;
        };
        const auto* cm = meta_of(candidate.envelope_id);
        const auto* bm = meta_of(best->envelope_id);
        const double c_conf = cm && cm->confidence_mean ? *cm->confidence_mean
                                                        : -std::numeric_limits<double>::infinity();
        const double b_conf = bm && bm->confidence_mean ? *bm->confidence_mean
                                                        : -std::numeric_limits<double>::infinity();
        if (c_conf != b_conf) {
            if (c_conf > b_conf) best = &candidate;
            continue;
        }
        const std::string c_label = cm ? cm->model_label : "";
        const std::string b_label = bm ? bm->model_label : "";
        if (c_label != b_label) {
            if (c_label < b_label) best = &candidate;
            continue;
        }
        if (candidate.envelope_id < best->envelope_id) best = &candidate;
    }
    return best->envelope_id;
}

namespace {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace

std::map<std::string, std::string> select_random(
    const std::map<std::string, std::vector<std::string>>& candidates_per_prompt,
    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<std::string, std::string> selection;
    for (const auto& [prompt_id, candidates] : candidates_per_prompt) {
        if (candidates.empty())
            throw InvalidArgument("prompt " + prompt_id + " has no candidates");
        selection[prompt_id] = candidates[bounded_draw(rng, candidates.size())];
    }
    return selection;
}

Metrics compute_metrics(const std::vector<CandidateScore>& selected) {
    Metrics m;
    for (const auto& score : selected) {
        m.prompts++;
        m.total_questions += score.total;
        m.satisfied_questions += score.satisfied;
        if (score.all_satisfied) m.fully_satisfied_prompts++;
        if (score.total == 0) m.vacuous_prompts++;
    }
    if (m.total_questions == 0) throw NoQuestions();
    m.rfr = static_cast<double>(m.satisfied_questions) / static_cast<double>(m.total_questions);
    m.frfr = static_cast<double>(m.fully_satisfied_prompts) / static_cast<double>(m.prompts);
    return m;
}

std::string format_metrics_table(const Metrics& metrics) {
    char buf[64];
    std::string out;
    std::snprintf(buf, sizeof buf, "RFR   %.2f%%\n", metrics.rfr * 100.0);
    out += buf;
    std::snprintf(buf, sizeof buf, "FRFR  %.2f%%\n", metrics.frfr * 100.0);
    out += buf;
    return out;
}

// ---------------------------------------------------------------------------
// Report and file formats

namespace {

json judgment_to_json(const Judgment& j) {
    json out;
    out["question_id"] = j.question_id;
    out["verdict"] = std::string(to_string(j.verdict));
    out["judge"] = std::string(to_string(j.judge));
    if (j.rationale) out["rationale"] = *j.rationale;
    return out;
}

Judgment judgment_from_json(const json& j) {
    Judgment out;
    out.question_id = j.at("question_id").get<std::string>();
    out.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    out.judge = judge_kind_from_string(j.at("judge").get<std::string>());
    if (j.contains("rationale")) out.rationale = j["rationale"].get<std::string>();
    return out;
}

json metrics_to_json(const Metrics& m) {
    json out;
    out["rfr"] = m.rfr;
    out["frfr"] = m.frfr;
    out["total_questions"] = m.total_questions;
    out["satisfied_questions"] = m.satisfied_questions;
    out["prompts"] = m.prompts;
    out["fully_satisfied_prompts"] = m.fully_satisfied_prompts;
    out["vacuous_prompts"] = m.vacuous_prompts;
    return out;
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.rfr = j.at("rfr").get<double>();
    m.frfr = j.at("frfr").get<double>();
    m.total_questions = j.at("total_questions").get<std::int64_t>();
    m.satisfied_questions = j.at("satisfied_questions").get<std::int64_t>();
    m.prompts = j.at("prompts").get<std::int64_t>();
    m.fully_satisfied_prompts = j.at("fully_satisfied_prompts").get<std::int64_t>();
    m.vacuous_prompts = j.at("vacuous_prompts").get<std::int64_t>();
    return m;
}

}  // namespace

std::string report_to_json(const CurationReport& report) {
    json doc;
    doc["schema_version"] = 1;
    doc["policy"] = report.policy;
    if (report.seed) doc["seed"] = *report.seed;
    json prompts = json::array();
    for (const auto& evaluation : report.evaluations) {
        json p;
        p["prompt_id"] = evaluation.prompt_id;
        const auto selected_it = report.selected.find(evaluation.prompt_id);
        if (selected_it != report.selected.end()) p["selected"] = selected_it->second;
        json candidates = json::array();
        for (const auto& score : evaluation.scores) {
            json c;
            c["envelope_id"] = score.envelope_id;
            c["satisfied"] = score.satisfied;
            c["total"] = score.total;
            c["all_satisfied"] = score.all_satisfied;
            json judgments = json::array();
            for (const auto& j : score.judgments) judgments.push_back(judgment_to_json(j));
            c["judgments"] = std::move(judgments);
            candidates.push_back(std::move(c));
        }
        p["candidates"] = std::move(candidates);
        json excluded = json::array();
        for (const auto& e : evaluation.excluded)
            excluded.push_back(json{{"envelope_id", e.envelope_id}, {"reason", e.reason}});
        p["excluded"] = std::move(excluded);
        prompts.push_back(std::move(p));
    }
    doc["prompts"] = std::move(prompts);
    doc["metrics"] = metrics_to_json(report.metrics);
    return doc.dump(2) + "\n";
}

CurationReport report_from_json(std::string_view text) {
    const auto doc = json::parse(text);
    CurationReport report;
    report.policy = doc.at("policy").get<std::string>();
    if (doc.contains("seed")) report.seed = doc["seed"].get<std::uint64_t>();
    for (const auto& p : doc.at("prompts")) {
        PromptEvaluation evaluation;
        evaluation.prompt_id = p.at("prompt_id").get<std::string>();
        for (const auto& c : p.at("candidates")) {
            std::vector<Judgment> judgments;
            for (const auto& j : c.at("judgments")) judgments.push_back(judgment_from_json(j));
            evaluation.scores.push_back(
                CandidateScore::make(c.at("envelope_id").get<std::string>(), std::move(judgments)));
        }
        for (const auto& e : p.at("excluded"))
            evaluation.excluded.push_back({e.at("envelope_id").get<std::string>(),
                                           e.at("reason").get<std::string>()});
        if (p.contains("selected"))
            report.selected[evaluation.prompt_id] = p["selected"].get<std::string>();
        report.evaluations.push_back(std::move(evaluation));
    }
    report.metrics = metrics_from_json(doc.at("metrics"));
    return report;
}

std::vector<RequirementQuestion> parse_questions_jsonl(std::string_view text) {
    std::vector<RequirementQuestion> questions;
    int line_no = 0;
    for (const auto& line : util::split_lines(text)) {
        line_no++;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& ex) {
            throw InvalidArgument("questions line " + std::to_string(line_no) + ": " + ex.what());
        }
        RequirementQuestion q;
        q.prompt_id = j.at("prompt_id").get<std::string>();
        q.id = j.at("id").get<std::string>();
        q.question = j.at("question").get<std::string>();
        if (j.contains("check")) {
            q.check = j["check"].get<std::string>();
            Constraint::parse(*q.check);  // validate eagerly
        }
        questions.push_back(std::move(q));
    }
    return questions;
}

std::string questions_to_jsonl(const std::vector<RequirementQuestion>& questions) {
    std::string out;
    for (const auto& q : questions) {
        json j;
        j["prompt_id"] = q.prompt_id;
        j["id"] = q.id;
        j["question"] = q.question;
        if (q.check) j["check"] = *q.check;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::string export_finetune(std::vector<SelectedEnvelope> selection,
                            const proof::KeyLookup& resolve_key) {
    std::sort(selection.begin(), selection.end(),
              [](const auto& a, const auto& b) { return a.prompt_id < b.prompt_id; });
    std::string out;
    for (const auto& entry : selection) {
        const auto& envelope = entry.envelope;
        if (!proof::verify_envelope(envelope, resolve_key).ok())
            throw UnverifiedEnvelopeInSelection(envelope.id);
        const auto prompt_markdown =
            envelope.subject.prompt.rendered_cache
                ? *envelope.subject.prompt.rendered_cache
                : poml::render_markdown(envelope.subject.prompt);
        json line;
        line["prompt"] = prompt_markdown;
        line["completion"] = gen::extract_thought(envelope.subject.value).content;
        json meta;
        meta["envelope_id"] = envelope.id;
        meta["model_label"] = envelope.subject.model.label;
        meta["confidence_mean"] =
            envelope.subject.confidence ? json(envelope.subject.confidence->mean) : json(nullptr);
        line["meta"] = std::move(meta);
        out += line.dump();
        out += "\n";
    }
    return out;
}

}  // namespace aigckit::curation
