#include "gisurv/annotator.hpp"

#include "gisurv/embedded_data.hpp"
#include "gisurv/error.hpp"
#include "gisurv/table_io.hpp"
#include "gisurv/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace gisurv {

using nlohmann::json;

namespace {

constexpr std::string_view placeholder = "{review}";

std::size_t count_occurrences(std::string_view s, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
    return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// PromptSpec

PromptSpec::PromptSpec(std::string name, Task task, std::string prompt_template, int shots,
                       std::vector<PromptExample> examples)
    : name_(std::move(name)), task_(task), template_(std::move(prompt_template)), shots_(shots), examples_(std::move(examples)) {
    if (name_.empty()) throw ConfigError("prompt name must be non-empty");
    if (count_occurrences(template_, placeholder) != 1)
        throw ConfigError("prompt \"" + name_ + "\": template must contain {review} exactly once");
    if (shots_ != 0 && shots_ != 1 && shots_ != 5)
        throw ConfigError("prompt \"" + name_ + "\": shots must be 0, 1 or 5");
    if (static_cast<std::size_t>(shots_) > examples_.size())
        throw ConfigError("prompt \"" + name_ + "\": " + std::to_string(shots_) + " shots requested but only " +
                          std::to_string(examples_.size()) + " examples provided");
}

PromptSpec PromptSpec::parse(std::string_view json_text) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("malformed prompt spec: ") + e.what());
    }
    try {
        const auto task = parse_task(obj.at("task").get<std::string>());
        if (!task) throw ConfigError("unknown task \"" + obj.at("task").get<std::string>() + "\"");
        std::vector<PromptExample> examples;
        if (obj.contains("examples"))
            for (const auto &e : obj.at("examples"))
                examples.push_back({e.at("input").get<std::string>(), e.at("output").get<std::string>()});
        return PromptSpec(obj.at("name").get<std::string>(), *task, obj.at("template").get<std::string>(),
                          obj.value("shots", 0), std::move(examples));
    } catch (const json::exception &e) {
        throw ConfigError(std::string("invalid prompt spec: ") + e.what());
    }
}

PromptSpec PromptSpec::load(const std::filesystem::path &path) {
    try {
        return parse(read_file(path));
    } catch (const ConfigError &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

PromptSpec PromptSpec::with_shots(int shots) const { return PromptSpec(name_, task_, template_, shots, examples_); }

std::string PromptSpec::render(std::string_view review_text) const {
    const auto pos = template_.find(placeholder);
    std::string out = template_.substr(0, pos);
    out.append(review_text);
    out.append(template_, pos + placeholder.size());
    return out;
}

std::vector<ChatMessage> PromptSpec::render_messages(std::string_view review_text) const {
    std::vector<ChatMessage> out;
    for (int i = 0; i < shots_; ++i) {
        out.push_back({"user", render(examples_[static_cast<std::size_t>(i)].input)});
        out.push_back({"assistant", examples_[static_cast<std::size_t>(i)].output});
    }
    out.push_back({"user", render(review_text)});
    return out;
}

// ---------------------------------------------------------------------------
// BackendConfig

std::string_view to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::remote: return "remote";
    case BackendKind::baseline: return "baseline";
    case BackendKind::replay: return "replay";
    }
    return "";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
    for (auto k : {BackendKind::remote, BackendKind::baseline, BackendKind::replay})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

void BackendConfig::validate() const {
    if (kind == BackendKind::remote && (endpoint.empty() || model.empty()))
        throw ConfigError("remote backend requires --endpoint and --model");
    if (kind == BackendKind::replay && cache_path.empty()) throw ConfigError("replay backend requires --cache");
    if (max_retries < 0) throw ConfigError("max retries must be >= 0");
    if (timeout_seconds <= 0) throw ConfigError("timeout must be positive");
    if (max_in_flight == 0) throw ConfigError("max in-flight requests must be >= 1");
}

std::string BackendConfig::effective_model() const {
    if (!model.empty()) return model;
    return kind == BackendKind::baseline ? "baseline" : "";
}

// ---------------------------------------------------------------------------
// Result files

std::string format_result(const AnnotationResult &r) {
    json obj;
    obj["review_id"] = r.review_id;
    obj["task"] = std::string(to_string(r.task));
    obj["raw_generation"] = r.raw_generation;
    json parsed;
    if (const auto *b = std::get_if<bool>(&r.parsed)) {
        parsed["gi"] = *b;
    } else {
        parsed[r.task == Task::food_extraction ? "foods" : "symptoms"] = std::get<std::vector<std::string>>(r.parsed);
    }
    obj["parsed"] = std::move(parsed);
    obj["parse_ok"] = r.parse_ok;
    obj["status"] = r.failed ? "failed" : "ok";
    if (!r.error.empty()) obj["error"] = r.error;
    if (r.labels) obj["labels"] = *r.labels;
    return obj.dump();
}

AnnotationResult parse_result(std::string_view json_line, std::size_t line) {
    try {
        const auto obj = json::parse(json_line);
        AnnotationResult r;
        r.review_id = obj.at("review_id").get<std::string>();
        const auto task = parse_task(obj.at("task").get<std::string>());
        if (!task) throw DataError("unknown task", line);
        r.task = *task;
        r.raw_generation = obj.at("raw_generation").get<std::string>();
        const auto &parsed = obj.at("parsed");
        if (r.task == Task::gi_classification) {
            r.parsed = parsed.at("gi").get<bool>();
        } else {
            r.parsed = parsed.at(r.task == Task::food_extraction ? "foods" : "symptoms").get<std::vector<std::string>>();
        }
        r.parse_ok = obj.at("parse_ok").get<bool>();
        const auto status = obj.at("status").get<std::string>();
        if (status != "ok" && status != "failed") throw DataError("status must be \"ok\" or \"failed\"", line);
        r.failed = status == "failed";
        r.error = obj.value("error", std::string());
        if (obj.contains("labels")) r.labels = obj.at("labels").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception &e) {
        throw DataError(std::string("malformed result record: ") + e.what(), line);
    }
}

void write_results(std::ostream &out, const std::vector<AnnotationResult> &results) {
    for (const auto &r : results) out << format_result(r) << '\n';
}

void write_results(const std::filesystem::path &path, const std::vector<AnnotationResult> &results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    write_results(out, results);
}

std::vector<AnnotationResult> load_results(const std::filesystem::path &path) {
    std::string content;
    try {
        content = read_file(path);
    } catch (const ConfigError &e) {
        throw DataError(e.what());
    }
    std::vector<AnnotationResult> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) nl = content.size();
        const std::string_view line(content.data() + pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (text::trim(line).empty()) continue;
        out.push_back(parse_result(line, line_no));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

std::pair<bool, bool> parse_boolean(std::string_view generation) {
    for (const auto &tok : text::tokenize(generation)) {
        if (tok.norm == "true" || tok.norm == "yes") return {true, true};
        if (tok.norm == "false" || tok.norm == "no") return {false, true};
    }
    return {false, false};
}

std::string render_boolean(bool value) { return value ? "True" : "False"; }

namespace {

bool is_none_answer(std::string_view s) {
    const auto toks = text::tokenize(s);
    if (toks.empty()) return false;
    const auto &w0 = toks[0].norm;
    if (w0 == "none" || w0 == "nothing" || w0 == "n") {
        return w0 != "n" || (toks.size() >= 2 && toks[1].norm == "a");  // "n/a"
    }
    if (w0 == "no" && toks.size() >= 2) {
        static const std::unordered_set<std::string> nouns{"symptom", "symptoms", "food",  "foods",    "items",
                                                           "item",    "mention",  "mentions", "illness", "meal"};
        return nouns.contains(toks[1].norm);
    }
    if (w0 == "not" && toks.size() >= 2) return toks[1].norm == "mentioned" || toks[1].norm == "applicable";
    if (w0 == "there" && toks.size() >= 3) return toks[1].norm == "are" && toks[2].norm == "no";
    return false;
}

std::string clean_item(std::string_view raw) {
    std::string_view s = text::trim(raw);
    auto strip_edges = [&] {
        bool changed = true;
        while (changed && !s.empty()) {
            changed = false;
            if (s.front() == '"' || s.front() == '\'' || s.front() == '`') {
                s.remove_prefix(1);
                changed = true;
            }
            if (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '`' || s.back() == '.' ||
                               s.back() == ';' || s.back() == ':' || s.back() == '!' || s.back() == ',')) {
                s.remove_suffix(1);
                changed = true;
            }
            s = text::trim(s);
        }
    };
    strip_edges();
    return std::string(s);
}

bool has_word(std::string_view s) { return !text::tokenize(s).empty(); }

std::vector<std::string_view> lines_of(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        out.push_back(text::trim(s.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    return out;
}

// Length of a leading bullet or enumeration marker, 0 if none.
std::size_t bullet_marker(std::string_view line) {
    if (line.empty()) return 0;
    if (line.front() == '-' || line.front() == '*' || line.front() == '+') return 1;
    if (line.substr(0, 3) == "•") return 3;
    std::size_t i = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return i + 1;
    return 0;
}

void split_into(std::string_view s, std::string_view delims, std::vector<std::string> &out) {
    std::size_t b = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || delims.find(s[i]) != std::string_view::npos) {
            out.emplace_back(s.substr(b, i - b));
            b = i + 1;
        }
    }
}

constexpr std::size_t max_free_text_item_words = 8;

}  // namespace

std::pair<std::vector<std::string>, bool> parse_list(std::string_view generation) {
    const std::string_view s = text::trim(generation);
    if (s.empty()) return {{}, false};

    std::vector<std::string> raw;
    bool structured = false;

    const auto open = s.find('[');
    const auto close = s.rfind(']');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        split_into(s.substr(open + 1, close - open - 1), ",\n", raw);
        structured = true;
    } else {
        const auto lines = lines_of(s);
        const bool bullets = std::any_of(lines.begin(), lines.end(), [](auto l) { return bullet_marker(l) > 0; });
        if (bullets) {
            for (auto l : lines)
                if (const auto m = bullet_marker(l); m > 0) raw.emplace_back(l.substr(m));
            structured = true;
        } else {
            if (is_none_answer(s)) return {{}, true};
            for (auto l : lines) {
                if (l.empty() || l.back() == ':') continue;  // header line
                if (const auto colon = l.find(':'); colon != std::string_view::npos) l = l.substr(colon + 1);
                split_into(l, ",;", raw);
            }
        }
    }

    std::vector<std::string> items;
    std::unordered_set<std::string> seen;
    for (const auto &r : raw) {
        std::string item = clean_item(r);
        if (!structured) {
            for (std::string_view conj : {"and ", "or "})
                if (text::to_lower(item).rfind(conj, 0) == 0) item = clean_item(item.substr(conj.size()));
            if (text::split_whitespace(item).size() > max_free_text_item_words) continue;  // prose, not a list
        }
        if (item.empty() || !has_word(item)) continue;
        if (is_none_answer(item)) continue;
        if (seen.insert(item).second) items.push_back(std::move(item));
    }
    if (structured) return {std::move(items), true};
    if (items.empty()) return {{}, false};
    return {std::move(items), true};
}

std::string render_list(const std::vector<std::string> &items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += items[i];
    }
    out += "]";
    return out;
}

// ---------------------------------------------------------------------------
// Baseline

std::vector<std::string> parse_term_list(std::string_view content) {
    std::vector<std::string> out;
    for (const auto &row : parse_table(content, '\0')) out.push_back(text::collapse_whitespace(text::to_lower(row.fields[0])));
    return out;
}

const AnnotationTables &AnnotationTables::defaults() {
    static const AnnotationTables tables{KeywordList::defaults(), parse_term_list(data::exceptions()), StemTable::defaults(),
                                         FoodLookupTable::defaults()};
    return tables;
}

namespace {

// Start offsets of sentences: boundaries after '.', '!', '?' and newlines.
std::vector<std::size_t> sentence_starts(std::string_view text) {
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            std::size_t j = i + 1;
            while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
            if (j < text.size() && starts.back() != j) starts.push_back(j);
            i = j - 1;
        }
    }
    return starts;
}

std::size_t sentence_of(const std::vector<std::size_t> &starts, std::size_t offset) {
    const auto it = std::upper_bound(starts.begin(), starts.end(), offset);
    return static_cast<std::size_t>(it - starts.begin()) - 1;
}

bool baseline_gi(const Review &review, const AnnotationTables &tables) {
    const auto match = KeywordMatcher(tables.keywords).match(review.text);
    if (!match.matched()) return false;
    const auto cues = PhraseMatcher(tables.exception_cues).find_all(review.text);
    if (cues.empty()) return true;

    const auto starts = sentence_starts(review.text);
    std::vector<bool> cue_in_sentence(starts.size(), false);
    for (const auto &c : cues) cue_in_sentence[sentence_of(starts, c.begin)] = true;
    return std::any_of(match.spans.begin(), match.spans.end(), [&](const MatchSpan &m) {
        const auto s = sentence_of(starts, m.begin);
        return !cue_in_sentence[s] && !(s > 0 && cue_in_sentence[s - 1]);
    });
}

std::vector<std::string> baseline_symptoms(const Review &review, const AnnotationTables &tables) {
    const auto match = KeywordMatcher(tables.keywords).match(review.text);
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto &s : match.spans) {
        std::string mention = review.text.substr(s.begin, s.end - s.begin);
        if (seen.insert(mention).second) out.push_back(std::move(mention));
    }
    return out;
}

std::vector<std::string> baseline_foods(const Review &review, const AnnotationTables &tables) {
    const auto tokens = text::tokenize(review.text);
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    auto emit = [&](std::size_t b, std::size_t e) {
        std::string span = review.text.substr(b, e - b);
        if (seen.insert(span).second) out.push_back(std::move(span));
    };
    auto known = [&](const std::string &phrase) { return tables.foods.find(phrase) != nullptr; };

    for (std::size_t i = 0; i < tokens.size();) {
        const auto &t = tokens[i];
        if (i + 1 < tokens.size() && text::only_whitespace(review.text, t.end, tokens[i + 1].begin) &&
            t.end < tokens[i + 1].begin) {
            const auto &u = tokens[i + 1];
            if (known(t.norm + " " + u.norm) || known(t.norm + " " + singularize(u.norm))) {
                emit(t.begin, u.end);
                i += 2;
                continue;
            }
        }
        if (known(t.norm) || known(singularize(t.norm))) emit(t.begin, t.end);
        ++i;
    }
    return out;
}

}  // namespace

AnnotationResult baseline_annotate(const Review &review, Task task, const AnnotationTables &tables) {
    AnnotationResult r;
    r.review_id = review.id;
    r.task = task;
    r.parse_ok = true;
    switch (task) {
    case Task::gi_classification: {
        const bool gi = baseline_gi(review, tables);
        r.parsed = gi;
        r.raw_generation = render_boolean(gi);
        break;
    }
    case Task::symptom_extraction:
    case Task::food_extraction: {
        auto items = task == Task::symptom_extraction ? baseline_symptoms(review, tables) : baseline_foods(review, tables);
        r.raw_generation = render_list(items);
        r.parsed = std::move(items);
        break;
    }
    }
    return r;
}

std::string BaselineBackend::generate(const GenerationRequest &request) {
    return baseline_annotate(*request.review, request.task, tables_).raw_generation;
}

// ---------------------------------------------------------------------------
// Annotation driver

AnnotationResult interpret_generation(const std::string &review_id, Task task, std::string generation) {
    AnnotationResult r;
    r.review_id = review_id;
    r.task = task;
    if (task == Task::gi_classification) {
        const auto [value, ok] = parse_boolean(generation);
        r.parsed = value;
        r.parse_ok = ok;
    } else {
        auto [items, ok] = parse_list(generation);
        r.parsed = std::move(items);
        r.parse_ok = ok;
    }
    r.raw_generation = std::move(generation);
    return r;
}

namespace {

AnnotationResult failed_result(const std::string &review_id, Task task, std::string error) {
    AnnotationResult r;
    r.review_id = review_id;
    r.task = task;
    if (task == Task::gi_classification) {
        r.parsed = false;
    } else {
        r.parsed = std::vector<std::string>{};
    }
    r.parse_ok = false;
    r.failed = true;
    r.error = std::move(error);
    return r;
}

class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const ResponseCache &cache) : cache_(cache) {}

    std::string generate(const GenerationRequest &req) override {
        const auto key = cache_key(req.task, req.prompt_name, req.shots, req.model, req.review->id, req.review->text);
        auto hit = cache_.lookup(key);
        if (!hit)
            throw ReplayMiss("replay cache miss for review \"" + req.review->id + "\" (prompt " + req.prompt_name +
                             ", shots " + std::to_string(req.shots) + ", model " + req.model + ")");
        return std::move(*hit);
    }

private:
    const ResponseCache &cache_;
};

}  // namespace

AnnotationRun annotate_with(const std::vector<Review> &reviews, const PromptSpec &prompt, Backend &backend,
                            const std::string &model, ResponseCache *record, std::size_t max_in_flight) {
    AnnotationRun run;
    run.results.resize(reviews.size());

    auto work = [&](std::size_t i) {
        const Review &review = reviews[i];
        GenerationRequest req{prompt.task(), prompt.name(), prompt.shots(), model, &review,
                              prompt.render_messages(review.text)};
        try {
            auto generation = backend.generate(req);
            if (record)
                record->append(cache_key(req.task, req.prompt_name, req.shots, req.model, review.id, review.text), req,
                               generation);
            run.results[i] = interpret_generation(review.id, prompt.task(), std::move(generation));
        } catch (const ReplayMiss &) {
            throw;
        } catch (const BackendError &e) {
            run.results[i] = failed_result(review.id, prompt.task(), e.what());
        }
    };

    const std::size_t workers = backend.concurrent() ? std::min(max_in_flight, reviews.size()) : 1;
    if (workers <= 1) {
        for (std::size_t i = 0; i < reviews.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < reviews.size(); i = next++) {
                        try {
                            work(i);
                        } catch (...) {
                            const std::lock_guard lock(error_mutex);
                            if (!first_error) first_error = std::current_exception();
                            next = reviews.size();
                        }
                    }
                });
            }
        }
        if (first_error) std::rethrow_exception(first_error);
    }
    run.failures = static_cast<std::size_t>(
        std::count_if(run.results.begin(), run.results.end(), [](const AnnotationResult &r) { return r.failed; }));
    return run;
}

AnnotationRun annotate(const std::vector<Review> &reviews, const PromptSpec &prompt, const BackendConfig &config,
                       const AnnotationTables &tables) {
    config.validate();
    const std::string model = config.effective_model();
    switch (config.kind) {
    case BackendKind::replay: {
        const ResponseCache cache(config.cache_path);
        ReplayBackend backend(cache);
        std::string replay_model = model;
        if (replay_model.empty()) {
            // no --model: use the only model the cache was recorded with
            const auto models = cache.models();
            if (models.size() > 1)
                throw ConfigError("cache " + config.cache_path.string() + " holds several models; pass --model");
            if (models.size() == 1) replay_model = *models.begin();
        }
        return annotate_with(reviews, prompt, backend, replay_model, nullptr, 1);
    }
    case BackendKind::baseline: {
        BaselineBackend backend(tables);
        std::optional<ResponseCache> cache;
        if (!config.cache_path.empty()) cache.emplace(config.cache_path);
        return annotate_with(reviews, prompt, backend, model, cache ? &*cache : nullptr, 1);
    }
    case BackendKind::remote: {
        RemoteBackend backend(config);
        std::optional<ResponseCache> cache;
        if (!config.cache_path.empty()) cache.emplace(config.cache_path);
        return annotate_with(reviews, prompt, backend, model, cache ? &*cache : nullptr, config.max_in_flight);
    }
    }
    return {};
}

void attach_labels(std::vector<AnnotationResult> &results, const AnnotationTables &tables) {
    for (auto &r : results) {
        if (r.task == Task::gi_classification) {
            r.labels.reset();
            continue;
        }
        const auto &mentions = std::get<std::vector<std::string>>(r.parsed);
        std::vector<std::string> labels;
        if (r.task == Task::symptom_extraction) {
            for (auto l : disambiguate_symptoms(mentions, tables.stems)) labels.emplace_back(to_string(l));
        } else {
            for (auto l : disambiguate_foods(mentions, tables.foods)) labels.emplace_back(to_string(l));
        }
        r.labels = std::move(labels);
    }
}

}  // namespace gisurv
