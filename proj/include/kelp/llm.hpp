#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kelp {

/// Text completion backend. Failures are reported as ProviderError.
class LLMProvider {
public:
    virtual ~LLMProvider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

struct Demonstration {
    std::string question;
    std::vector<std::string> context;
    std::string answer;
};

struct PromptBundle {
    std::string system_preamble;
    std::vector<Demonstration> few_shot;
    std::vector<std::string> context_block;  // path sentences, selection order
    std::string question;
};

/// Layout (demonstration blocks repeat once per shot, each followed by a
/// blank line; the preamble is omitted when empty):
///
///   <preamble>
///
///   Context:
///   <one line per path>
///   Question: <q>
///   Answer: <a>
///
///   Context:
///   <one line per path, or "None">
///   Question: <q>
///   Answer:
std::string assemble_prompt(const PromptBundle& bundle);

/// Context lines of the final (query) block of a prompt built by
/// assemble_prompt. Empty when that block says "None".
std::vector<std::string> query_context(std::string_view prompt);

/// Question of the final block of a prompt built by assemble_prompt.
std::string query_question(std::string_view prompt);

/// One completion on the assembled prompt.
std::string answer_with_context(LLMProvider& llm, const PromptBundle& bundle);

enum class Verdict { True, False };

/// Case-insensitive search for a standalone "true" or "false" token; the
/// first one found wins.
std::optional<Verdict> parse_verdict(std::string_view reply);

struct ClaimOutcome {
    Verdict verdict = Verdict::False;
    int calls = 0;
    std::vector<std::string> warnings;
};

/// Asks with context; a False (or unparseable) first reply triggers a second
/// query with the context removed, whose verdict is final.
ClaimOutcome verify_claim(LLMProvider& llm, const PromptBundle& bundle);

enum class ContextCondition { Any, Present, Absent };

struct MockRule {
    std::string context_contains;   // empty matches anything
    std::string question_contains;  // empty matches anything
    ContextCondition when = ContextCondition::Any;
    std::string answer;
};

struct MockLLMSpec {
    std::vector<MockRule> rules;
    std::string default_answer = "unknown";
};

/// Deterministic LLM double. Reads the query block of the prompt and answers
/// with the first rule whose conditions all hold. Records every prompt.
class MockLLM : public LLMProvider {
public:
    explicit MockLLM(MockLLMSpec spec);

    std::string complete(const std::string& prompt) override;

    int calls() const { return calls_.load(); }
    std::vector<std::string> prompts() const;

private:
    MockLLMSpec spec_;
    std::atomic<int> calls_{0};
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

/// JSON: {"default": "...", "rules": [{"context": "...", "question": "...",
/// "when": "any"|"present"|"absent", "answer": "..."}]}
MockLLMSpec load_mock_spec(const std::filesystem::path& path);

/// Client for POST /complete {"prompt": ...} -> {"text": ...}.
class RemoteLLM : public LLMProvider {
public:
    explicit RemoteLLM(std::string base_url, std::string token_env = "KELP_LLM_TOKEN", int timeout_seconds = 60);
    std::string complete(const std::string& prompt) override;

private:
    std::string base_url_;
    std::string token_env_;
    int timeout_seconds_;
    std::mutex mutex_;
};

}  // namespace kelp
