#pragma once

#include "gisurv/corpus.hpp"
#include "gisurv/disambiguation.hpp"
#include "gisurv/error.hpp"
#include "gisurv/gi_filter.hpp"
#include "gisurv/taxonomy.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gisurv {

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage &, const ChatMessage &) = default;
};

struct PromptExample {
    std::string input;
    std::string output;
};

/// A prompt template for one task. The template holds exactly one
/// `{review}` placeholder; the first `shots` examples are rendered as
/// user/assistant turns ahead of the review.
class PromptSpec {
public:
    PromptSpec(std::string name, Task task, std::string prompt_template, int shots, std::vector<PromptExample> examples);

    /// JSON object: {name, task, template, shots, examples: [{input, output}]}.
    static PromptSpec parse(std::string_view json_text);
    static PromptSpec load(const std::filesystem::path &path);

    /// Copy with a different shot count (validated).
    PromptSpec with_shots(int shots) const;

    const std::string &name() const noexcept { return name_; }
    Task task() const noexcept { return task_; }
    const std::string &prompt_template() const noexcept { return template_; }
    int shots() const noexcept { return shots_; }
    const std::vector<PromptExample> &examples() const noexcept { return examples_; }

    std::string render(std::string_view review_text) const;
    std::vector<ChatMessage> render_messages(std::string_view review_text) const;

private:
    std::string name_;
    Task task_;
    std::string template_;
    int shots_;
    std::vector<PromptExample> examples_;
};

enum class BackendKind { remote, baseline, replay };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct BackendConfig {
    BackendKind kind = BackendKind::baseline;
    std::string endpoint;  // remote: base URL, e.g. http://localhost:8000
    std::string model;
    double timeout_seconds = 60.0;
    int max_retries = 3;
    double backoff_initial_seconds = 1.0;
    /// replay: cache to read. remote/baseline: cache to append to (optional).
    std::filesystem::path cache_path;
    std::size_t max_in_flight = 4;
    /// Environment variable holding the bearer token for the remote backend.
    std::string api_key_env = "GISURV_API_KEY";

    static constexpr double temperature = 0.0;

    /// Throws ConfigError: remote needs endpoint and model, replay a cache path.
    void validate() const;
    /// Model name used in cache keys ("baseline" for an unnamed baseline).
    std::string effective_model() const;
};

using ParsedOutput = std::variant<bool, std::vector<std::string>>;

struct AnnotationResult {
    std::string review_id;
    Task task = Task::gi_classification;
    std::string raw_generation;
    /// bool for gi_classification, raw mentions for the extraction tasks.
    ParsedOutput parsed = false;
    bool parse_ok = false;
    /// Transport failure after retries; parsed holds the fallback value.
    bool failed = false;
    std::string error;
    /// Disambiguated taxonomy labels for the extraction tasks.
    std::optional<std::vector<std::string>> labels;

    friend bool operator==(const AnnotationResult &, const AnnotationResult &) = default;
};

std::string format_result(const AnnotationResult &result);
AnnotationResult parse_result(std::string_view json_line, std::size_t line = 0);
void write_results(std::ostream &out, const std::vector<AnnotationResult> &results);
void write_results(const std::filesystem::path &path, const std::vector<AnnotationResult> &results);
std::vector<AnnotationResult> load_results(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Output parsing

/// First decisive token wins: "true"/"yes" or "false"/"no", case-insensitive.
/// Undecidable generations give (false, false).
std::pair<bool, bool> parse_boolean(std::string_view generation);

std::string render_boolean(bool value);

/// Accepts bracketed lists, bullet lists, and comma/newline separated text
/// (with an optional "...:" preamble). Items are trimmed and deduplicated in
/// first-occurrence order. "None"-style answers give ({}, true); anything
/// unparseable gives ({}, false).
std::pair<std::vector<std::string>, bool> parse_list(std::string_view generation);

/// "[a, b, c]"
std::string render_list(const std::vector<std::string> &items);

// ---------------------------------------------------------------------------
// Rule-based baseline

/// Lookup tables used by the baseline annotator and by disambiguation.
struct AnnotationTables {
    KeywordList keywords;
    std::vector<std::string> exception_cues;
    StemTable stems;
    FoodLookupTable foods;

    static const AnnotationTables &defaults();
};

/// One lowercase term per line, '#' comments allowed.
std::vector<std::string> parse_term_list(std::string_view content);

/// Deterministic stand-in for a model.
///
/// gi_classification: true iff some keyword match has no exception cue in
/// its own sentence or the sentence before it. symptom_extraction: the
/// matched keyword spans. food_extraction: spans whose words (one or two,
/// optionally singularized) are keys of the food lookup table.
AnnotationResult baseline_annotate(const Review &review, Task task,
                                   const AnnotationTables &tables = AnnotationTables::defaults());

// ---------------------------------------------------------------------------
// Backends

/// A replay cache has no entry for a request. Never retried or downgraded
/// to a per-review failure: replay runs must be complete.
class ReplayMiss : public BackendError {
public:
    using BackendError::BackendError;
};

struct GenerationRequest {
    Task task;
    std::string prompt_name;
    int shots;
    std::string model;
    const Review *review;
    std::vector<ChatMessage> messages;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Returns the raw generation. Throws BackendError on failure.
    virtual std::string generate(const GenerationRequest &request) = 0;
    /// Whether generate() may be called concurrently.
    virtual bool concurrent() const { return false; }
};

/// OpenAI-compatible `POST /v1/chat/completions` client with exponential
/// backoff on transport errors, 429 and 5xx.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(BackendConfig config);
    std::string generate(const GenerationRequest &request) override;
    bool concurrent() const override { return true; }

private:
    BackendConfig config_;
    std::string host_;
    std::string path_;
    std::string token_;
};

class BaselineBackend : public Backend {
public:
    explicit BaselineBackend(const AnnotationTables &tables) : tables_(tables) {}
    std::string generate(const GenerationRequest &request) override;

private:
    const AnnotationTables &tables_;
};

/// sha256 over (task, prompt name, shots, model, review id, review text).
std::string cache_key(Task task, std::string_view prompt_name, int shots, std::string_view model,
                      std::string_view review_id, std::string_view review_text);

/// Append-only JSON Lines store of {key, request, response, timestamp}.
class ResponseCache {
public:
    /// Loads existing entries if the file exists. The last entry for a key wins.
    explicit ResponseCache(std::filesystem::path path);

    std::optional<std::string> lookup(const std::string &key) const;
    /// Thread-safe append; also updates the in-memory index.
    void append(const std::string &key, const GenerationRequest &request, const std::string &generation);

    std::size_t size() const;
    /// Distinct model names seen in the recorded requests.
    std::set<std::string> models() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

struct AnnotationRun {
    std::vector<AnnotationResult> results;  // aligned with the input reviews
    std::size_t failures = 0;
};

/// Annotates every review with one prompt. Results are in input order.
/// Remote calls run with at most `max_in_flight` concurrent requests;
/// transport failures mark the review failed and the run continues. A replay
/// cache miss throws BackendError.
AnnotationRun annotate(const std::vector<Review> &reviews, const PromptSpec &prompt, const BackendConfig &backend,
                       const AnnotationTables &tables = AnnotationTables::defaults());

/// Same, with an already constructed backend (no cache handling).
AnnotationRun annotate_with(const std::vector<Review> &reviews, const PromptSpec &prompt, Backend &backend,
                            const std::string &model, ResponseCache *record = nullptr, std::size_t max_in_flight = 1);

/// Builds a result from a generation: parse, fallback, parse_ok.
AnnotationResult interpret_generation(const std::string &review_id, Task task, std::string generation);

/// Fills `labels` of extraction results by disambiguating their mentions.
void attach_labels(std::vector<AnnotationResult> &results, const AnnotationTables &tables = AnnotationTables::defaults());

}  // namespace gisurv
