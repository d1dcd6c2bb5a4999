#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "aigckit/cli.hpp"
#include "aigckit/curation.hpp"
#include "aigckit/did.hpp"
#include "aigckit/proof.hpp"
#include "aigckit/store.hpp"
#include "aigckit/util.hpp"
#include "support.hpp"

using namespace aigckit;
using nlohmann::json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// keygen + did-doc fixtures + two prompts + issued envelopes, all offline
struct Workspace {
    testsupport::TempDir dir{"cli"};
    std::string key_file;
    std::string did_dir;
    std::string store_dir;
    std::string prompts_dir;

    Workspace() {
        key_file = (dir.path / "key.json").string();
        did_dir = (dir.path / "did").string();
        store_dir = (dir.path / "store").string();
        prompts_dir = (dir.path / "prompts").string();
        REQUIRE(run_cli({"keygen", "--out", key_file, "--seed",
                         "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"})
                    .code == 0);
        REQUIRE(run_cli({"did-doc", "init", "--key", key_file, "--did", "did:web:issuer.example",
                         "--did-dir", did_dir})
                    .code == 0);
        std::filesystem::create_directories(prompts_dir);
        write_prompt("p1", "You are terse.", "1. Answer in at most 5 words");
        write_prompt("p2", "You are thorough.", "1. Mention the word lantern");
    }

    void write_prompt(const std::string& id, const std::string& role, const std::string& reqs) {
        const auto base = std::filesystem::path(prompts_dir);
        util::write_file(base / (id + "-role.poml"), "<role>" + role + "</role>");
        util::write_file(base / (id + "-req.poml"),
                         "<requirements>" + reqs + "</requirements>");
        util::write_file(base / (id + ".poml"),
                         "<poml><include src=\"" + id + "-role.poml\"/><include src=\"" + id +
                             "-req.poml\"/></poml>");
    }

    CliResult issue(const std::string& prompt_id, const std::string& uuid,
                    const std::string& mock_file = "") {
        std::vector<std::string> args = {
            "issue", "--prompt", prompts_dir + "/" + prompt_id + ".poml", "--mock", "--key",
            key_file, "--issuer-did", "did:web:issuer.example", "--issuer-name", "CLI Tester",
            "--model", "openai/gpt-oss-20b", "--store", store_dir, "--created",
            "2025-12-10T01:17:04Z", "--uuid", uuid};
        if (!mock_file.empty()) {
            args.push_back("--mock-file");
            args.push_back(mock_file);
        }
        return run_cli(args);
    }
};

}  // namespace

TEST_CASE("usage errors exit 2; help exits 0") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"no-such-command"}).code == 2);
    CHECK(run_cli({"verify", "--bogus-flag"}).code == 2);
    const auto help = run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("issue") != std::string::npos);
}

TEST_CASE("render prints Markdown beginning with the Role heading") {
    const auto dir = testsupport::fixtures_dir() / "prompts";
    const auto result = run_cli({"render", (dir / "main.poml").string()});
    CHECK(result.code == 0);
    CHECK(result.out.starts_with("# Role\n\nYou are an assistant for Practical Writing tasks.\n"));
}

TEST_CASE("render reports missing files as operational failure") {
    CHECK(run_cli({"render", "/nonexistent/main.poml"}).code == 1);
}

TEST_CASE("decompose writes POML modules that render back") {
    testsupport::TempDir dir("cli-decompose");
    const auto input = dir.path / "plain.txt";
    util::write_file(input, "You are a poet. Write a haiku about rain. Output as JSON.");
    const auto out_dir = (dir.path / "modules").string();
    const auto result = run_cli({"decompose", input.string(), "--out-dir", out_dir, "--json"});
    CHECK(result.code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed["modules"].size() == 3);
    const auto rendered = run_cli({"render", out_dir + "/main.poml"});
    CHECK(rendered.code == 0);
    CHECK(rendered.out.find("# Role\n\nYou are a poet.") != std::string::npos);
    CHECK(rendered.out.find("# Output Format\n\nOutput as JSON.") != std::string::npos);
}

TEST_CASE("issue + verify round trip through the store, offline") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    const auto verify = run_cli(
        {"verify", "--offline", "--did-dir", ws.did_dir, "--store", ws.store_dir});
    CHECK(verify.code == 0);
    CHECK(verify.out.find("11111111-2222-4333-8444-555555555555: Verified") != std::string::npos);
}

TEST_CASE("verify flags tampered files and exits 1") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    REQUIRE(ws.issue("p2", "22222222-3333-4444-8555-666666666666").code == 0);

    // tamper a copy on disk: shift the validFrom second
    const auto victim =
        std::filesystem::path(ws.store_dir) / "22222222-3333-4444-8555-666666666666.jsonld";
    auto text = util::read_file(victim);
    const std::string needle = "\"validFrom\":\"2025-12-10T01:17:04Z\"";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"validFrom\":\"2025-12-10T01:17:05Z\"");
    util::write_file(victim, text);

    const auto verify = run_cli(
        {"verify", "--offline", "--did-dir", ws.did_dir, "--store", ws.store_dir, "--json"});
    CHECK(verify.code == 1);
    const auto parsed = json::parse(verify.out);
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed["verified"] == 1);
    CHECK(parsed["failed"] == 1);
    bool saw_invalid = false;
    for (const auto& entry : parsed["results"]) {
        if (entry["status"] == "SignatureInvalid") saw_invalid = true;
    }
    CHECK(saw_invalid);
}

TEST_CASE("verify accepts explicit file arguments") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    const auto file =
        std::filesystem::path(ws.store_dir) / "11111111-2222-4333-8444-555555555555.jsonld";
    const auto verify =
        run_cli({"verify", "--offline", "--did-dir", ws.did_dir, file.string()});
    CHECK(verify.code == 0);
    CHECK(verify.out.find(": Verified") != std::string::npos);
}

TEST_CASE("curate with the rule judge: best beats random, reports and exports") {
    Workspace ws;
    // three candidates per prompt with controlled quality via scripted mocks
    const auto render_of = [&](const std::string& id) {
        return run_cli({"render", ws.prompts_dir + "/" + id + ".poml"}).out;
    };
    const auto p1_prompt = render_of("p1");
    const auto p2_prompt = render_of("p2");

    int uuid_counter = 0;
    auto scripted_issue = [&](const std::string& prompt_id, const std::string& text) {
        const auto mock_file = std::filesystem::path(ws.dir.path) /
                               ("mock" + std::to_string(uuid_counter) + ".json");
        json mock;
        mock["responses"][prompt_id == "p1" ? p1_prompt : p2_prompt] = {{"text", text}};
        util::write_file(mock_file, mock.dump());
        char uuid[64];
        std::snprintf(uuid, sizeof uuid, "%08d-aaaa-4bbb-8ccc-ddddeeee0000", uuid_counter++);
        REQUIRE(ws.issue(prompt_id, uuid, mock_file.string()).code == 0);
    };
    scripted_issue("p1", "one two three four five six");        // violates max 5 words
    scripted_issue("p1", "exactly five words right here");      // satisfies
    scripted_issue("p1", "way too many words in this answer");  // violates
    scripted_issue("p2", "no magic word");                      // violates lantern
    scripted_issue("p2", "the lantern glows");                  // satisfies
    scripted_issue("p2", "still nothing");                      // violates

    const auto questions_file = std::filesystem::path(ws.dir.path) / "questions.jsonl";
    util::write_file(
        questions_file,
        R"x({"prompt_id":"p1","id":"q1","question":"at most 5 words?","check":"max_words(5)"})x"
        "\n"
        R"x({"prompt_id":"p2","id":"q1","question":"mentions lantern?","check":"must_include(lantern)"})x"
        "\n");

    const auto report_best = std::filesystem::path(ws.dir.path) / "report-best.json";
    const auto export_file = std::filesystem::path(ws.dir.path) / "ft.jsonl";
    const auto best = run_cli({"curate", "--store", ws.store_dir, "--questions",
                               questions_file.string(), "--judge", "rule", "--select", "best",
                               "--prompts-dir", ws.prompts_dir, "--offline", "--did-dir",
                               ws.did_dir, "--report", report_best.string(), "--export-ft",
                               export_file.string()});
    CHECK(best.code == 0);
    CHECK(best.out == "RFR   100.00%\nFRFR  100.00%\n");

    // random selection under several seeds never beats best
    for (const auto* seed : {"1", "7", "13"}) {
        const auto random_report =
            std::filesystem::path(ws.dir.path) / ("report-rand-" + std::string(seed) + ".json");
        const auto random = run_cli({"curate", "--store", ws.store_dir, "--questions",
                                     questions_file.string(), "--judge", "rule", "--select",
                                     "random", "--seed", seed, "--prompts-dir", ws.prompts_dir,
                                     "--offline", "--did-dir", ws.did_dir, "--report",
                                     random_report.string(), "--json"});
        CHECK(random.code == 0);
        const auto parsed = json::parse(random.out);
        CHECK(parsed["rfr"].get<double>() <= 1.0 + 1e-12);
    }

    // export lines parse and carry no think-tags
    const auto jsonl = util::read_file(export_file);
    const auto lines = util::split_lines(jsonl);
    CHECK(lines.size() == 2);
    for (const auto& line : lines) {
        const auto entry = json::parse(line);
        CHECK(entry.contains("prompt"));
        CHECK(entry.contains("completion"));
        CHECK(entry.contains("meta"));
        CHECK(entry["completion"].get<std::string>().find("<think>") == std::string::npos);
    }

    // metrics subcommand reads the report back
    const auto metrics = run_cli({"metrics", "--report", report_best.string()});
    CHECK(metrics.code == 0);
    CHECK(metrics.out == "RFR   100.00%\nFRFR  100.00%\n");

    // export-ft reproduces the same JSONL from the report
    const auto export2 = std::filesystem::path(ws.dir.path) / "ft2.jsonl";
    const auto exported = run_cli({"export-ft", "--report", report_best.string(), "--store",
                                   ws.store_dir, "--out", export2.string(), "--offline",
                                   "--did-dir", ws.did_dir});
    CHECK(exported.code == 0);
    CHECK(util::read_file(export2) == jsonl);
}

TEST_CASE("issue --content-file produces an envelope without confidence") {
    Workspace ws;
    const auto content = std::filesystem::path(ws.dir.path) / "content.txt";
    util::write_file(content, "<think>quiet</think>A pre-generated answer.");
    const auto result = run_cli(
        {"issue", "--prompt", ws.prompts_dir + "/p1.poml", "--content-file", content.string(),
         "--key", ws.key_file, "--issuer-did", "did:web:issuer.example", "--issuer-name",
         "CLI Tester", "--model", "openai/gpt-oss-20b", "--store", ws.store_dir, "--created",
         "2025-12-10T01:17:04Z", "--uuid", "99999999-1111-4222-8333-444444444444", "--json"});
    CHECK(result.code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed["has_confidence"] == false);
    CHECK(parsed["has_thought"] == true);

    store::EnvelopeStore store_dir(ws.store_dir);
    const auto envelope = store_dir.load("99999999-1111-4222-8333-444444444444");
    CHECK_FALSE(envelope.subject.confidence.has_value());
    REQUIRE(envelope.subject.thought.has_value());
    CHECK(envelope.subject.thought->value == "quiet");
}

TEST_CASE("issue requires exactly one content source") {
    Workspace ws;
    const auto result = run_cli(
        {"issue", "--prompt", ws.prompts_dir + "/p1.poml", "--key", ws.key_file, "--issuer-did",
         "did:web:issuer.example", "--issuer-name", "T", "--model", "m", "--store", ws.store_dir});
    CHECK(result.code == 2);
}

TEST_CASE("environment variables fill in defaults, flags win") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    ::setenv("AIGC_STORE_DIR", ws.store_dir.c_str(), 1);
    ::setenv("AIGC_DID_DIR", ws.did_dir.c_str(), 1);
    const auto from_env = run_cli({"verify", "--offline"});
    CHECK(from_env.code == 0);
    CHECK(from_env.out.find("Verified") != std::string::npos);
    // a flag overrides the environment
    testsupport::TempDir empty("cli-empty-store");
    const auto flag_wins =
        run_cli({"verify", "--offline", "--store", (empty.path / "none").string()});
    CHECK(flag_wins.code == 1);  // nothing to verify there
    ::unsetenv("AIGC_STORE_DIR");
    ::unsetenv("AIGC_DID_DIR");
}

TEST_CASE("config file supplies subcommand options") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    const auto config = std::filesystem::path(ws.dir.path) / "aigc.toml";
    util::write_file(config, "[verify]\nstore = \"" + ws.store_dir + "\"\ndid-dir = \"" +
                                 ws.did_dir + "\"\noffline = true\n");
    const auto result = run_cli({"--config", config.string(), "verify"});
    CHECK(result.code == 0);
    CHECK(result.out.find("Verified") != std::string::npos);
}

TEST_CASE("decompose --extractor external uses a scripted mock") {
    testsupport::TempDir dir("cli-ext");
    const auto input = dir.path / "plain.txt";
    util::write_file(input, "Summarize the report.");
    const auto mock_file = dir.path / "mock.json";
    json mock;
    mock["default"] = {{"text", "<requirements>Summarize the report.</requirements>"}};
    util::write_file(mock_file, mock.dump());
    const auto out_dir = (dir.path / "mods").string();
    const auto result = run_cli({"decompose", input.string(), "--extractor", "external", "--mock",
                                 "--mock-file", mock_file.string(), "--out-dir", out_dir,
                                 "--json"});
    CHECK(result.code == 0);
    CHECK(json::parse(result.out)["modules"].size() == 1);
}

TEST_CASE("curate without --questions derives them and judges externally") {
    Workspace ws;
    REQUIRE(ws.issue("p1", "11111111-2222-4333-8444-555555555555").code == 0);
    REQUIRE(ws.issue("p2", "22222222-3333-4444-8555-666666666666").code == 0);

    // a judge endpoint that always says yes
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        json reply;
        reply["choices"] = json::array(
            {{{"message", {{"role", "assistant"}, {"content", "yes"}}}}});
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto report = std::filesystem::path(ws.dir.path) / "derived-report.json";
    const auto result = run_cli(
        {"curate", "--store", ws.store_dir, "--judge", "external", "--judge-endpoint",
         "http://127.0.0.1:" + std::to_string(port), "--insecure-http", "--select", "best",
         "--prompts-dir", ws.prompts_dir, "--offline", "--did-dir", ws.did_dir, "--report",
         report.string()});
    server.stop();
    server_thread.join();
    CHECK(result.code == 0);
    CHECK(result.out == "RFR   100.00%\nFRFR  100.00%\n");
    const auto parsed = curation::report_from_json(util::read_file(report));
    REQUIRE(parsed.evaluations.size() == 2);
    // both prompts have one derived question each, judged yes
    CHECK(parsed.metrics.total_questions == 2);
    for (const auto& evaluation : parsed.evaluations)
        for (const auto& score : evaluation.scores)
            for (const auto& judgment : score.judgments)
                CHECK(judgment.judge == curation::JudgeKind::External);
}

TEST_CASE("generate --mock --json reports confidence") {
    Workspace ws;
    const auto result = run_cli({"generate", "--prompt", ws.prompts_dir + "/p1.poml", "--mock",
                                 "--model", "openai/gpt-oss-20b", "--json"});
    CHECK(result.code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed["logprobs_available"] == true);
    CHECK(parsed["confidence"]["mean"].get<double>() < 0);
}
