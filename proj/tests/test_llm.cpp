#include <doctest.h>

#include "kelp/errors.hpp"
#include "kelp/llm.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace kelp;

namespace {

// Replies from a fixed script and counts calls.
class ScriptedLLM : public LLMProvider {
public:
    explicit ScriptedLLM(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::string& prompt) override {
        prompts.push_back(prompt);
        return replies_.at(prompts.size() - 1);
    }
    std::vector<std::string> prompts;

private:
    std::vector<std::string> replies_;
};

PromptBundle claim_bundle() {
    PromptBundle b;
    b.context_block = {"a r b."};
    b.question = "Claim: a r b.";
    return b;
}

}  // namespace

TEST_CASE("assemble_prompt layout") {
    PromptBundle b;
    b.question = "what is the capital of japan?";
    CHECK(assemble_prompt(b) == "Context:\nNone\nQuestion: what is the capital of japan?\nAnswer:");

    b.system_preamble = "Answer briefly.";
    b.few_shot = {{"q1?", {"s1.", "s2."}, "a1"}};
    b.context_block = {"japan capital tokyo.", "tokyo famous food sushi."};
    CHECK(assemble_prompt(b) ==
          "Answer briefly.\n\n"
          "Context:\ns1.\ns2.\nQuestion: q1?\nAnswer: a1\n\n"
          "Context:\njapan capital tokyo.\ntokyo famous food sushi.\nQuestion: what is the capital of japan?\nAnswer:");
    CHECK(assemble_prompt(b) == assemble_prompt(b));
}

TEST_CASE("query block parsing reads the final block only") {
    PromptBundle b;
    b.few_shot = {{"demo?", {"demo line."}, "x"}};
    b.context_block = {"one.", "two."};
    b.question = "real?";
    auto prompt = assemble_prompt(b);
    CHECK(query_context(prompt) == std::vector<std::string>{"one.", "two."});
    CHECK(query_question(prompt) == "real?");

    b.context_block.clear();
    CHECK(query_context(assemble_prompt(b)).empty());
}

TEST_CASE("prompt preserves context order and content exactly") {
    PromptBundle b;
    b.question = "q";
    for (int i = 9; i >= 0; --i) b.context_block.push_back("sentence " + std::to_string(i) + ", with, commas.");
    CHECK(query_context(assemble_prompt(b)) == b.context_block);
}

TEST_CASE("assemble_prompt distinguishes different bundles") {
    PromptBundle a, b, c;
    a.question = b.question = c.question = "q";
    a.context_block = {"x."};
    b.context_block = {"x.", "y."};
    c.few_shot = {{"q", {"x."}, "a"}};
    CHECK(assemble_prompt(a) != assemble_prompt(b));
    CHECK(assemble_prompt(a) != assemble_prompt(c));
    CHECK(assemble_prompt(b) != assemble_prompt(c));
}

TEST_CASE("mock LLM rules") {
    MockLLMSpec spec;
    spec.rules = {{"capital tokyo", "", ContextCondition::Any, "tokyo"}};
    spec.default_answer = "no idea";
    MockLLM llm(spec);

    PromptBundle b;
    b.question = "what is the capital of japan?";
    b.context_block = {"japan capital tokyo."};
    CHECK(answer_with_context(llm, b) == "tokyo");
    CHECK(answer_with_context(llm, b) == "tokyo");

    b.context_block = {"japan famous food sushi."};
    CHECK(answer_with_context(llm, b) == "no idea");

    // the question text alone does not satisfy a context rule
    b.context_block.clear();
    b.question = "capital tokyo?";
    CHECK(answer_with_context(llm, b) == "no idea");
    CHECK(llm.calls() == 4);
    CHECK(llm.prompts().size() == 4);
}

TEST_CASE("mock LLM conditions and first-match order") {
    MockLLMSpec spec;
    spec.rules = {{"", "", ContextCondition::Absent, "bare"},
                  {"x", "alpha", ContextCondition::Present, "alpha-x"},
                  {"x", "", ContextCondition::Any, "any-x"}};
    MockLLM llm(spec);
    PromptBundle b;
    b.question = "alpha?";
    CHECK(llm.complete(assemble_prompt(b)) == "bare");
    b.context_block = {"x."};
    CHECK(llm.complete(assemble_prompt(b)) == "alpha-x");
    b.question = "beta?";
    CHECK(llm.complete(assemble_prompt(b)) == "any-x");
}

TEST_CASE("parse_verdict") {
    CHECK(parse_verdict("True") == Verdict::True);
    CHECK(parse_verdict("  FALSE.") == Verdict::False);
    CHECK(parse_verdict("The claim is true, not false") == Verdict::True);
    CHECK(parse_verdict("false; true") == Verdict::False);
    CHECK_FALSE(parse_verdict("untrue").has_value());
    CHECK_FALSE(parse_verdict("").has_value());
}

TEST_CASE("verify_claim: True on the first pass makes one call") {
    ScriptedLLM llm({"True"});
    auto out = verify_claim(llm, claim_bundle());
    CHECK(out.verdict == Verdict::True);
    CHECK(out.calls == 1);
    CHECK(llm.prompts.size() == 1);
}

TEST_CASE("verify_claim: False then True makes two calls, the second without context") {
    ScriptedLLM llm({"False", "True"});
    auto out = verify_claim(llm, claim_bundle());
    CHECK(out.verdict == Verdict::True);
    CHECK(out.calls == 2);
    REQUIRE(llm.prompts.size() == 2);
    CHECK(query_context(llm.prompts[0]) == std::vector<std::string>{"a r b."});
    CHECK(query_context(llm.prompts[1]).empty());
}

TEST_CASE("verify_claim: False both times") {
    ScriptedLLM llm({"False", "false"});
    auto out = verify_claim(llm, claim_bundle());
    CHECK(out.verdict == Verdict::False);
    CHECK(out.calls == 2);
    CHECK(out.warnings.empty());
}

TEST_CASE("verify_claim: unparseable replies fall back to False with a warning") {
    ScriptedLLM llm({"maybe", "no clue"});
    auto out = verify_claim(llm, claim_bundle());
    CHECK(out.verdict == Verdict::False);
    CHECK(out.calls == 2);
    CHECK(out.warnings.size() == 2);
}

TEST_CASE("remote LLM client") {
    httplib::Server server;
    server.Post("/complete", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        auto prompt = body.at("prompt").get<std::string>();
        if (prompt == "boom") {
            res.status = 500;
            res.set_content(R"({"error":"model crashed"})", "application/json");
            return;
        }
        res.set_content(nlohmann::json{{"text", "echo:" + prompt}}.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RemoteLLM llm("http://127.0.0.1:" + std::to_string(port));
    CHECK(llm.complete("hi") == "echo:hi");
    try {
        llm.complete("boom");
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(std::string(e.what()).find("model crashed") != std::string::npos);
    }
    server.stop();
    t.join();

    RemoteLLM nowhere("http://127.0.0.1:1", "", 1);
    CHECK_THROWS_AS(nowhere.complete("x"), ProviderError);
}
