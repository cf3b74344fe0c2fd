#include "kelp/llm.hpp"

#include "kelp/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>

namespace kelp {

namespace {

constexpr std::string_view kContextHeader = "Context:\n";
constexpr std::string_view kNoContext = "None";

void append_block(std::string& out, const std::vector<std::string>& context, const std::string& question) {
    out += kContextHeader;
    if (context.empty()) {
        out += kNoContext;
        out += '\n';
    } else {
        for (const auto& line : context) {
            out += line;
            out += '\n';
        }
    }
    out += "Question: ";
    out += question;
    out += '\n';
}

std::size_t last_query_block(std::string_view prompt) {
    auto pos = prompt.rfind(kContextHeader);
    while (pos != std::string_view::npos && pos != 0 && prompt[pos - 1] != '\n') {
        pos = prompt.rfind(kContextHeader, pos - 1);
    }
    return pos;
}

}  // namespace

std::string assemble_prompt(const PromptBundle& bundle) {
    std::string out;
    if (!bundle.system_preamble.empty()) {
        out += bundle.system_preamble;
        out += "\n\n";
    }
    for (const auto& demo : bundle.few_shot) {
        append_block(out, demo.context, demo.question);
        out += "Answer: ";
        out += demo.answer;
        out += "\n\n";
    }
    append_block(out, bundle.context_block, bundle.question);
    out += "Answer:";
    return out;
}

std::vector<std::string> query_context(std::string_view prompt) {
    std::vector<std::string> lines;
    auto pos = last_query_block(prompt);
    if (pos == std::string_view::npos) return lines;
    std::size_t cursor = pos + kContextHeader.size();
    while (cursor < prompt.size()) {
        auto end = prompt.find('\n', cursor);
        if (end == std::string_view::npos) end = prompt.size();
        auto line = prompt.substr(cursor, end - cursor);
        if (line.starts_with("Question: ")) break;
        lines.emplace_back(line);
        cursor = end + 1;
    }
    if (lines.size() == 1 && lines.front() == kNoContext) lines.clear();
    return lines;
}

std::string query_question(std::string_view prompt) {
    auto pos = prompt.rfind("\nQuestion: ");
    if (pos == std::string_view::npos) return {};
    pos += std::string_view("\nQuestion: ").size();
    auto end = prompt.find('\n', pos);
    if (end == std::string_view::npos) end = prompt.size();
    return std::string(prompt.substr(pos, end - pos));
}

std::string answer_with_context(LLMProvider& llm, const PromptBundle& bundle) {
    return llm.complete(assemble_prompt(bundle));
}

std::optional<Verdict> parse_verdict(std::string_view reply) {
    std::string token;
    auto flush = [&]() -> std::optional<Verdict> {
        std::optional<Verdict> v;
        if (token == "true") v = Verdict::True;
        if (token == "false") v = Verdict::False;
        token.clear();
        return v;
    };
    for (unsigned char c : reply) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else if (auto v = flush()) {
            return v;
        }
    }
    return flush();
}

ClaimOutcome verify_claim(LLMProvider& llm, const PromptBundle& bundle) {
    ClaimOutcome outcome;
    auto first_reply = llm.complete(assemble_prompt(bundle));
    ++outcome.calls;
    auto first = parse_verdict(first_reply);
    if (first == Verdict::True) {
        outcome.verdict = Verdict::True;
        return outcome;
    }
    if (!first) outcome.warnings.push_back("unparseable verdict: \"" + first_reply + "\"");

    PromptBundle bare = bundle;
    bare.context_block.clear();
    auto second_reply = llm.complete(assemble_prompt(bare));
    ++outcome.calls;
    auto second = parse_verdict(second_reply);
    if (!second) outcome.warnings.push_back("unparseable verdict: \"" + second_reply + "\"");
    outcome.verdict = second.value_or(Verdict::False);
    return outcome;
}

MockLLM::MockLLM(MockLLMSpec spec) : spec_(std::move(spec)) {}

std::string MockLLM::complete(const std::string& prompt) {
    ++calls_;
    {
        std::lock_guard lock(mutex_);
        prompts_.push_back(prompt);
    }
    auto context = query_context(prompt);
    auto question = query_question(prompt);
    std::string joined;
    for (const auto& line : context) {
        joined += line;
        joined += '\n';
    }
    for (const auto& rule : spec_.rules) {
        if (rule.when == ContextCondition::Present && context.empty()) continue;
        if (rule.when == ContextCondition::Absent && !context.empty()) continue;
        if (!rule.context_contains.empty() && joined.find(rule.context_contains) == std::string::npos) continue;
        if (!rule.question_contains.empty() && question.find(rule.question_contains) == std::string::npos) continue;
        return rule.answer;
    }
    return spec_.default_answer;
}

std::vector<std::string> MockLLM::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

MockLLMSpec load_mock_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open mock LLM spec: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("mock LLM spec " + path.string() + ": " + e.what());
    }
    MockLLMSpec spec;
    spec.default_answer = j.value("default", std::string("unknown"));
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
        MockRule rule;
        rule.context_contains = r.value("context", std::string());
        rule.question_contains = r.value("question", std::string());
        rule.answer = r.at("answer").get<std::string>();
        auto when = r.value("when", std::string("any"));
        if (when == "any") rule.when = ContextCondition::Any;
        else if (when == "present") rule.when = ContextCondition::Present;
        else if (when == "absent") rule.when = ContextCondition::Absent;
        else throw InputError("mock LLM spec: unknown \"when\" value \"" + when + "\"");
        spec.rules.push_back(std::move(rule));
    }
    return spec;
}

RemoteLLM::RemoteLLM(std::string base_url, std::string token_env, int timeout_seconds)
    : base_url_(std::move(base_url)), token_env_(std::move(token_env)), timeout_seconds_(timeout_seconds) {}

std::string RemoteLLM::complete(const std::string& prompt) {
    std::lock_guard lock(mutex_);
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    if (!token_env_.empty()) {
        if (const char* token = std::getenv(token_env_.c_str()); token && *token) {
            client.set_bearer_token_auth(token);
        }
    }
    nlohmann::json body{{"prompt", prompt}};
    auto res = client.Post("/complete", body.dump(), "application/json");
    if (!res) throw ProviderError("LLM provider unreachable at " + base_url_ + ": " + httplib::to_string(res.error()));
    auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status != 200) {
        std::string message = "HTTP " + std::to_string(res->status);
        if (reply.is_object() && reply.contains("error") && reply["error"].is_string()) {
            message += ": " + reply["error"].get<std::string>();
        }
        throw ProviderError("LLM provider error: " + message);
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw ProviderError("LLM provider returned malformed body");
    }
    return reply["text"].get<std::string>();
}

}  // namespace kelp
