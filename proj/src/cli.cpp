#include "gisurv/cli.hpp"

#include "gisurv/bias_probe.hpp"
#include "gisurv/corpus.hpp"
#include "gisurv/embedded_data.hpp"
#include "gisurv/error.hpp"
#include "gisurv/gi_filter.hpp"
#include "gisurv/table_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <ostream>
#include <sstream>
#include <unordered_set>

#ifndef GISURV_VERSION
#define GISURV_VERSION "0.0.0"
#endif

namespace gisurv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, std::string_view (*)(), std::less<>> &bundled_prompts() {
    static const std::map<std::string, std::string_view (*)(), std::less<>> prompts{
        {"gi_classification", &data::gi_classification},
        {"gi_classification_terse", &data::gi_classification_terse},
        {"symptom_extraction", &data::symptom_extraction},
        {"food_extraction", &data::food_extraction},
    };
    return prompts;
}

const std::map<std::string, std::string_view (*)(), std::less<>> &bundled_maps() {
    static const std::map<std::string, std::string_view (*)(), std::less<>> maps{
        {"gender", &data::gender_map},
        {"marital", &data::marital_map},
    };
    return maps;
}

const std::set<std::string> known_subcommands{"filter", "split", "annotate", "evaluate", "sweep", "bias", "summarize"};

void require_file(const fs::path &path, std::string_view flag) {
    if (!path.empty() && !fs::is_regular_file(path))
        throw ConfigError(fmt::format("{}: no such file: {}", flag, path.string()));
}

void require_set(const fs::path &path, std::string_view flag, std::string_view sub) {
    if (path.empty()) throw ConfigError(fmt::format("{} requires {}", sub, flag));
}

// A bundled resource if `ref` names one and is not an existing file.
template <class Map>
std::optional<std::string_view> bundled(const Map &map, const std::string &ref) {
    if (fs::is_regular_file(ref)) return std::nullopt;
    const auto it = map.find(ref);
    if (it == map.end()) return std::nullopt;
    return it->second();
}

template <class Map>
std::string resource_text(const Map &map, const std::string &ref, std::string_view flag) {
    if (const auto text = bundled(map, ref)) return std::string(*text);
    if (!fs::is_regular_file(ref)) throw ConfigError(fmt::format("{}: no such file or bundled name: {}", flag, ref));
    return read_file(ref);
}

PromptSpec load_prompt(const std::string &ref) {
    return PromptSpec::parse(resource_text(bundled_prompts(), ref, "--prompt"));
}

TermMap load_term_map(const std::string &ref, std::string_view flag) {
    return TermMap::parse(resource_text(bundled_maps(), ref, flag));
}

AnnotationTables load_tables(const RunConfig &c) {
    AnnotationTables t = AnnotationTables::defaults();
    if (!c.keywords.empty()) t.keywords = KeywordList::load(c.keywords);
    if (!c.exceptions.empty()) t.exception_cues = parse_term_list(read_file(c.exceptions));
    if (!c.stems.empty()) t.stems = StemTable::load(c.stems);
    if (!c.food_table.empty()) t.foods = FoodLookupTable::load(c.food_table);
    return t;
}

BackendConfig backend_config(const RunConfig &c) {
    BackendConfig b;
    b.kind = c.backend;
    b.endpoint = c.endpoint;
    b.model = c.model;
    b.cache_path = c.cache;
    return b;
}

void write_text(const fs::path &path, const std::string &content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << content;
}

json table_entry(const std::string &ref, std::string_view content, bool is_builtin) {
    return {{"source", is_builtin ? "bundled:" + ref : ref}, {"sha256", sha256_hex(content)}};
}

json table_entry(const fs::path &path, std::string_view name, std::string_view builtin) {
    if (path.empty()) return table_entry(std::string(name), builtin, true);
    return table_entry(path.string(), read_file(path), false);
}

template <class Map>
json resource_entry(const Map &map, const std::string &ref) {
    if (const auto text = bundled(map, ref)) return table_entry(ref, *text, true);
    return table_entry(ref, read_file(ref), false);
}

json manifest_tables(const RunConfig &c) {
    json t = json::object();
    t["input"] = table_entry(c.input.string(), read_file(c.input), false);
    if (!c.results.empty()) t["results"] = table_entry(c.results.string(), read_file(c.results), false);
    if (c.backend == BackendKind::replay && !c.cache.empty() && c.subcommand != "filter" && c.subcommand != "split")
        t["cache"] = table_entry(c.cache.string(), read_file(c.cache), false);
    const bool uses_tables = c.subcommand != "split" && c.subcommand != "summarize";
    if (uses_tables) {
        t["keywords"] = table_entry(c.keywords, "keywords", data::keywords());
        if (c.subcommand != "filter") {
            t["exceptions"] = table_entry(c.exceptions, "exceptions", data::exceptions());
            t["stems"] = table_entry(c.stems, "stems", data::stems());
            t["food_table"] = table_entry(c.food_table, "food_lookup", data::food_lookup());
        }
    }
    if (c.subcommand == "annotate" || c.subcommand == "sweep" || (c.subcommand == "bias" && c.experiment == "substitution")) {
        json prompts = json::array();
        if (c.prompts.empty())
            prompts.push_back(resource_entry(bundled_prompts(), "gi_classification"));
        for (const auto &p : c.prompts) prompts.push_back(resource_entry(bundled_prompts(), p));
        t["prompts"] = std::move(prompts);
    }
    if (c.subcommand == "bias" && c.experiment == "substitution") {
        t["term_map"] = resource_entry(bundled_maps(), c.term_map);
        if (!c.pre_map.empty()) t["pre_map"] = resource_entry(bundled_maps(), c.pre_map);
    }
    return t;
}

MacroPolicy parse_macro(std::string_view s) {
    if (s == "exclude_zero_support") return MacroPolicy::exclude_zero_support;
    if (s == "include_zero_support") return MacroPolicy::include_zero_support;
    throw ConfigError("unknown macro policy: " + std::string(s));
}

std::pair<std::string, std::string> resolve_side_names(const RunConfig &c) {
    std::string names = c.side_names;
    if (names.empty()) {
        if (c.term_map == "gender")
            names = "Male,Female";
        else if (c.term_map == "marital")
            names = "Married,Unmarried";
        else
            names = "Side A,Side B";
    }
    const auto comma = names.find(',');
    if (comma == std::string::npos || names.find(',', comma + 1) != std::string::npos)
        throw ConfigError("--side-names takes two comma-separated names");
    return {std::string(text::trim(names.substr(0, comma))), std::string(text::trim(names.substr(comma + 1)))};
}

template <class F>
int guarded(std::ostream &err, F &&body) {
    try {
        return body();
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const DataError &e) {
        err << "error: " << e.what() << '\n';
        return exit_data_error;
    } catch (const BackendError &e) {
        err << "error: " << e.what() << '\n';
        return exit_backend_error;
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const nlohmann::json::exception &e) {
        err << "error: malformed JSON: " << e.what() << '\n';
        return exit_data_error;
    }
}

void finish_manifest(const RunConfig &c, std::ostream &out) {
    out << "manifest: " << write_manifest(c).string() << '\n';
}

}  // namespace

std::string_view version() { return GISURV_VERSION; }

void RunConfig::validate() const {
    if (!known_subcommands.contains(subcommand)) throw ConfigError("unknown subcommand: " + subcommand);
    require_set(input, "--input", subcommand);
    require_file(input, "--input");
    if (subcommand == "filter" || subcommand == "split" || subcommand == "annotate") require_set(output, "--output", subcommand);
    require_file(results, "--results");
    require_file(keywords, "--keywords");
    require_file(stems, "--stems");
    require_file(food_table, "--food-table");
    require_file(exceptions, "--exceptions");
    for (const int s : shots)
        if (s != 0 && s != 1 && s != 5) throw ConfigError(fmt::format("--shots must be 0, 1 or 5, got {}", s));
    if (format != "text" && format != "json") throw ConfigError("--format must be text or json");
    for (const auto &p : prompts)
        if (!fs::is_regular_file(p) && !bundled_prompts().contains(p))
            throw ConfigError("--prompt: no such file or bundled prompt: " + p);

    if (subcommand == "annotate" || subcommand == "sweep" || subcommand == "bias") {
        backend_config(*this).validate();
        if (backend == BackendKind::replay) require_file(cache, "--cache");
    }
    if (subcommand == "annotate") {
        if (prompts.size() != 1) throw ConfigError("annotate takes exactly one --prompt");
        if (shots.size() > 1) throw ConfigError("annotate takes at most one --shots value");
    }
    if (subcommand == "evaluate") require_set(results, "--results", subcommand);
    if (subcommand == "sweep") {
        if (prompts.empty()) throw ConfigError("sweep requires --prompt");
        if (prompts.size() * std::max<std::size_t>(1, shots.size()) < 2)
            throw ConfigError("sweep needs at least two prompt/shot combinations");
    }
    if (subcommand == "bias") {
        if (experiment == "substitution") {
            if (prompts.size() > 1) throw ConfigError("bias takes at most one --prompt");
            if (!fs::is_regular_file(term_map) && !bundled_maps().contains(term_map))
                throw ConfigError("--term-map: no such file or bundled map: " + term_map);
            if (!pre_map.empty() && !fs::is_regular_file(pre_map) && !bundled_maps().contains(pre_map))
                throw ConfigError("--pre-map: no such file or bundled map: " + pre_map);
            resolve_side_names(*this);
        } else if (experiment == "meta") {
            require_set(results, "--results", "bias --experiment meta");
            if (meta_key.empty()) throw ConfigError("bias --experiment meta requires --meta-key");
        } else {
            throw ConfigError("--experiment must be substitution or meta");
        }
    }
    if (subcommand == "summarize" && view != "gi" && view != "symptoms" && view != "foods")
        throw ConfigError("--view must be gi, symptoms or foods");
}

std::string config_to_json(const RunConfig &c) {
    json j{
        {"subcommand", c.subcommand},
        {"input", c.input.string()},
        {"output", c.output.string()},
        {"results", c.results.string()},
        {"seed", c.seed},
        {"fractions", c.fractions},
        {"split_name", c.split_name},
        {"keywords", c.keywords.string()},
        {"stems", c.stems.string()},
        {"food_table", c.food_table.string()},
        {"exceptions", c.exceptions.string()},
        {"prompts", c.prompts},
        {"shots", c.shots},
        {"backend", std::string(to_string(c.backend))},
        {"endpoint", c.endpoint},
        {"model", c.model},
        {"cache", c.cache.string()},
        {"format", c.format},
        {"macro", std::string(to_string(c.macro))},
        {"experiment", c.experiment},
        {"term_map", c.term_map},
        {"pre_map", c.pre_map},
        {"side_names", c.side_names},
        {"meta_key", c.meta_key},
        {"view", c.view},
    };
    return j.dump(2);
}

RunConfig config_from_json(std::string_view json_text) {
    const json j = json::parse(json_text);
    RunConfig c;
    c.subcommand = j.at("subcommand").get<std::string>();
    c.input = j.at("input").get<std::string>();
    c.output = j.at("output").get<std::string>();
    c.results = j.at("results").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.fractions = j.at("fractions").get<std::string>();
    c.split_name = j.at("split_name").get<std::string>();
    c.keywords = j.at("keywords").get<std::string>();
    c.stems = j.at("stems").get<std::string>();
    c.food_table = j.at("food_table").get<std::string>();
    c.exceptions = j.at("exceptions").get<std::string>();
    c.prompts = j.at("prompts").get<std::vector<std::string>>();
    c.shots = j.at("shots").get<std::vector<int>>();
    const auto kind = parse_backend_kind(j.at("backend").get<std::string>());
    if (!kind) throw ConfigError("unknown backend in manifest");
    c.backend = *kind;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.cache = j.at("cache").get<std::string>();
    c.format = j.at("format").get<std::string>();
    c.macro = parse_macro(j.at("macro").get<std::string>());
    c.experiment = j.at("experiment").get<std::string>();
    c.term_map = j.at("term_map").get<std::string>();
    c.pre_map = j.at("pre_map").get<std::string>();
    c.side_names = j.at("side_names").get<std::string>();
    c.meta_key = j.at("meta_key").get<std::string>();
    c.view = j.at("view").get<std::string>();
    return c;
}

fs::path manifest_path(const RunConfig &c) {
    if (c.subcommand == "split") return c.output / "manifest.json";
    return fs::path(c.output.string() + ".manifest.json");
}

fs::path write_manifest(const RunConfig &c) {
    const std::string config = config_to_json(c);
    json m{
        {"tool", "gisurv"},
        {"version", std::string(version())},
        {"subcommand", c.subcommand},
        {"seed", c.seed},
        {"config", json::parse(config)},
        {"config_sha256", sha256_hex(config)},
        {"tables", manifest_tables(c)},
    };
    const auto path = manifest_path(c);
    write_text(path, m.dump(2) + "\n");
    return path;
}

// ---------------------------------------------------------------------------

int cmd_filter(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        const auto records = load_records(c.input);
        const auto keywords = c.keywords.empty() ? KeywordList::defaults() : KeywordList::load(c.keywords);
        std::vector<Review> reviews;
        for (const auto &r : records) reviews.push_back(r.review);
        const auto result = filter_corpus(reviews, keywords);

        std::unordered_set<std::string_view> kept_ids;
        std::string matches;
        for (const auto &k : result.kept) {
            kept_ids.insert(k.review.id);
            json spans = json::array();
            for (const auto &s : k.match.spans) spans.push_back({{"begin", s.begin}, {"end", s.end}, {"term", s.term}});
            matches += json{{"review_id", k.review.id}, {"matched_terms", k.match.matched_terms}, {"spans", spans}}.dump() + "\n";
        }
        std::vector<CorpusRecord> kept;
        for (const auto &r : records)
            if (kept_ids.contains(r.review.id)) kept.push_back(r);
        if (c.output.has_parent_path()) fs::create_directories(c.output.parent_path());
        write_records(c.output, kept);
        write_text(c.output.string() + ".matches.jsonl", matches);
        out << fmt::format("kept {} of {} reviews, dropped {}\n", kept.size(), records.size(), result.dropped_count);
        finish_manifest(c, out);
        return int(exit_ok);
    });
}

int cmd_split(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        const auto spec = SplitSpec::parse(c.seed, c.fractions);
        const auto records = load_records(c.input);
        std::map<std::string, const CorpusRecord *, std::less<>> by_id;
        std::vector<Review> reviews;
        for (const auto &r : records) {
            by_id.emplace(r.review.id, &r);
            reviews.push_back(r.review);
        }
        fs::create_directories(c.output);
        for (const auto &[name, part] : split_corpus(reviews, spec)) {
            std::vector<CorpusRecord> rows;
            for (const auto &r : part) rows.push_back(*by_id.at(r.id));
            write_records(c.output / (name + ".jsonl"), rows);
            out << fmt::format("{}: {} reviews\n", name, rows.size());
        }
        finish_manifest(c, out);
        return int(exit_ok);
    });
}

int cmd_annotate(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        auto prompt = load_prompt(c.prompts.front());
        if (!c.shots.empty()) prompt = prompt.with_shots(c.shots.front());
        const auto tables = load_tables(c);
        std::vector<Review> reviews;
        for (auto &r : load_records(c.input)) reviews.push_back(std::move(r.review));

        auto run = annotate(reviews, prompt, backend_config(c), tables);
        attach_labels(run.results, tables);
        if (c.output.has_parent_path()) fs::create_directories(c.output.parent_path());
        write_results(c.output, run.results);
        std::size_t parse_failures = 0;
        for (const auto &r : run.results)
            if (!r.parse_ok && !r.failed) ++parse_failures;
        out << fmt::format("annotated {} reviews with {} ({} shots): {} parse failures, {} failed requests\n",
                           run.results.size(), prompt.name(), prompt.shots(), parse_failures, run.failures);
        finish_manifest(c, out);
        if (run.failures > 0) {
            err << fmt::format("error: {} of {} requests failed; fallback values were written\n", run.failures,
                               run.results.size());
            return int(exit_partial_failure);
        }
        return int(exit_ok);
    });
}

int cmd_evaluate(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        const auto corpus = load_corpus(c.input, true);
        auto results = load_results(c.results);
        bool missing_labels = false;
        for (const auto &r : results) missing_labels |= r.task != Task::gi_classification && !r.labels;
        if (missing_labels) attach_labels(results, load_tables(c));
        const auto report = score(results, *corpus.gold, c.macro);
        const auto text = format_report_text(report);
        out << text;
        if (!c.output.empty()) {
            write_text(c.output, c.format == "json" ? format_report_json(report) : text);
            finish_manifest(c, out);
        }
        return int(exit_ok);
    });
}

int cmd_sweep(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        std::vector<PromptSpec> specs;
        for (const auto &ref : c.prompts) {
            const auto base = load_prompt(ref);
            if (c.shots.empty())
                specs.push_back(base);
            else
                for (const int s : c.shots) specs.push_back(base.with_shots(s));
        }
        const auto corpus = load_corpus(c.input, true);
        const auto tables = load_tables(c);
        const auto report = c.split_name.empty()
                                ? sweep_prompts(corpus.reviews, *corpus.gold, specs, backend_config(c), tables, c.macro)
                                : sweep_prompts(corpus, SplitSpec::parse(c.seed, c.fractions), c.split_name, specs,
                                                backend_config(c), tables, c.macro);
        const auto text = format_fragility_text(report);
        out << text;
        if (!c.output.empty()) {
            write_text(c.output, c.format == "json" ? format_fragility_json(report) : text);
            finish_manifest(c, out);
        }
        return int(report.total_failures > 0 ? exit_partial_failure : exit_ok);
    });
}

int cmd_bias(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        const auto corpus = load_corpus(c.input, true);
        BiasReport report;
        if (c.experiment == "meta") {
            report = stratify_by_meta(corpus.reviews, *corpus.gold, load_results(c.results), c.meta_key, c.macro);
        } else {
            const auto map = load_term_map(c.term_map, "--term-map");
            SubstitutionOptions opts;
            std::tie(opts.side_a_name, opts.side_b_name) = resolve_side_names(c);
            if (!c.pre_map.empty()) opts.pre_map = load_term_map(c.pre_map, "--pre-map");
            opts.policy = c.macro;
            auto prompt = load_prompt(c.prompts.empty() ? "gi_classification" : c.prompts.front());
            if (!c.shots.empty()) prompt = prompt.with_shots(c.shots.front());
            report = run_substitution_experiment(corpus.reviews, *corpus.gold, map, prompt, backend_config(c), opts,
                                                 load_tables(c));
            report.experiment = fs::path(c.term_map).stem().string();
        }
        const auto text = format_bias_text(report);
        out << text;
        if (!c.output.empty()) {
            write_text(c.output, c.format == "json" ? format_bias_json(report) : text);
            finish_manifest(c, out);
        }
        return int(exit_ok);
    });
}

int cmd_summarize(const RunConfig &c, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        c.validate();
        const auto records = load_records(c.input);
        std::vector<Review> reviews;
        std::vector<GoldAnnotation> gold;
        for (const auto &r : records) {
            reviews.push_back(r.review);
            if (r.gold) gold.push_back(*r.gold);
        }
        if (!gold.empty() && gold.size() != reviews.size())
            throw DataError("summaries need gold annotations on every record or on none");
        const LabelView view = c.view == "symptoms" ? LabelView::symptoms : c.view == "foods" ? LabelView::foods : LabelView::gi;
        const auto s = summarize(reviews, gold, view);
        std::string content;
        if (c.format == "json") {
            json counts = json::array();
            for (const auto &[label, n] : s.label_counts) counts.push_back({{"label", label}, {"count", n}});
            content = json{{"total_samples", s.total_samples},
                           {"unique_labels", s.unique_labels},
                           {"mean_words", s.mean_words},
                           {"median_words", s.median_words},
                           {"min_words", s.min_words},
                           {"max_words", s.max_words},
                           {"label_counts", counts}}
                          .dump(2) +
                      "\n";
        } else {
            content = format_summary(s);
        }
        out << content;
        if (!c.output.empty()) {
            write_text(c.output, content);
            finish_manifest(c, out);
        }
        return int(exit_ok);
    });
}

int run(const RunConfig &c, std::ostream &out, std::ostream &err) {
    if (c.subcommand == "filter") return cmd_filter(c, out, err);
    if (c.subcommand == "split") return cmd_split(c, out, err);
    if (c.subcommand == "annotate") return cmd_annotate(c, out, err);
    if (c.subcommand == "evaluate") return cmd_evaluate(c, out, err);
    if (c.subcommand == "sweep") return cmd_sweep(c, out, err);
    if (c.subcommand == "bias") return cmd_bias(c, out, err);
    if (c.subcommand == "summarize") return cmd_summarize(c, out, err);
    err << "error: unknown subcommand: " << c.subcommand << '\n';
    return exit_config_error;
}

int rerun(const fs::path &manifest, const std::optional<fs::path> &output, std::ostream &out, std::ostream &err) {
    RunConfig c;
    json recorded;
    const int status = guarded(err, [&] {
        const json m = json::parse(read_file(manifest));
        c = config_from_json(m.at("config").dump());
        recorded = m.at("tables");
        if (output) c.output = *output;
        c.validate();
        const json current = manifest_tables(c);
        for (const auto &[name, entry] : recorded.items())
            if (!current.contains(name) || current.at(name) != entry)
                err << fmt::format("warning: {} differs from the manifest\n", name);
        return int(exit_ok);
    });
    if (status != exit_ok) return status;
    return run(c, out, err);
}

int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"GI illness surveillance over restaurant reviews", "gisurv"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    RunConfig c;
    std::string backend = "baseline";
    std::string macro = "exclude_zero_support";
    fs::path manifest;
    fs::path rerun_output;

    auto add_input = [&](CLI::App *s) { s->add_option("--input", c.input, "Input corpus (JSON Lines)")->required(); };
    auto add_output = [&](CLI::App *s, bool required) {
        auto *o = s->add_option("--output", c.output, "Output path");
        if (required) o->required();
    };
    auto add_tables = [&](CLI::App *s) {
        s->add_option("--keywords", c.keywords, "Keyword list");
        s->add_option("--stems", c.stems, "Symptom stem table");
        s->add_option("--food-table", c.food_table, "Food lookup table");
        s->add_option("--exceptions", c.exceptions, "Non-GI cue list for the baseline backend");
    };
    auto add_backend = [&](CLI::App *s) {
        s->add_option("--backend", backend, "Annotation backend")->check(CLI::IsMember({"remote", "baseline", "replay"}));
        s->add_option("--endpoint", c.endpoint, "Base URL of an OpenAI-compatible server");
        s->add_option("--model", c.model, "Model name");
        s->add_option("--cache", c.cache, "Response cache (JSON Lines)");
    };
    auto add_prompt = [&](CLI::App *s, bool many) {
        s->add_option("--prompt", c.prompts, "Prompt spec file or bundled prompt name")->expected(1, many ? -1 : 1);
        s->add_option("--shots", c.shots, "Number of examples (0, 1 or 5)")
            ->expected(1, many ? -1 : 1)
            ->check(CLI::IsMember({0, 1, 5}));
    };
    auto add_format = [&](CLI::App *s) {
        s->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"text", "json"}));
    };
    auto add_macro = [&](CLI::App *s) {
        s->add_option("--macro", macro, "Macro-F1 label set")
            ->check(CLI::IsMember({"exclude_zero_support", "include_zero_support"}));
    };

    auto *filter = app.add_subcommand("filter", "Keep reviews matching a GI keyword");
    add_input(filter);
    add_output(filter, true);
    filter->add_option("--keywords", c.keywords, "Keyword list");

    auto *split = app.add_subcommand("split", "Seeded split into named parts");
    add_input(split);
    add_output(split, true);
    split->add_option("--seed", c.seed, "Random seed");
    split->add_option("--fractions", c.fractions, "name=fraction,...");

    auto *ann = app.add_subcommand("annotate", "Annotate reviews with a prompt and backend");
    add_input(ann);
    add_output(ann, true);
    add_prompt(ann, false);
    add_backend(ann);
    add_tables(ann);

    auto *eval = app.add_subcommand("evaluate", "Score annotation results against gold labels");
    add_input(eval);
    add_output(eval, false);
    eval->add_option("--results", c.results, "Annotation results")->required();
    add_format(eval);
    add_macro(eval);
    add_tables(eval);

    auto *sweep = app.add_subcommand("sweep", "Score every prompt and shot combination");
    add_input(sweep);
    add_output(sweep, false);
    add_prompt(sweep, true);
    add_backend(sweep);
    add_tables(sweep);
    add_format(sweep);
    add_macro(sweep);
    sweep->add_option("--seed", c.seed, "Random seed for --split-name");
    sweep->add_option("--fractions", c.fractions, "name=fraction,...");
    sweep->add_option("--split-name", c.split_name, "Sweep on this split only");

    auto *bias = app.add_subcommand("bias", "Substitution and stratification experiments");
    add_input(bias);
    add_output(bias, false);
    add_prompt(bias, false);
    add_backend(bias);
    add_tables(bias);
    add_format(bias);
    add_macro(bias);
    bias->add_option("--experiment", c.experiment, "substitution or meta")->check(CLI::IsMember({"substitution", "meta"}));
    bias->add_option("--term-map", c.term_map, "Term map file or bundled name (gender, marital)");
    bias->add_option("--pre-map", c.pre_map, "Map applied first to enlarge the pool");
    bias->add_option("--side-names", c.side_names, "Names of the two sides, comma-separated");
    bias->add_option("--results", c.results, "Annotation results (meta experiment)");
    bias->add_option("--meta-key", c.meta_key, "Review meta field to stratify by");

    auto *summ = app.add_subcommand("summarize", "Descriptive statistics of a corpus");
    add_input(summ);
    add_output(summ, false);
    add_format(summ);
    summ->add_option("--view", c.view, "Labels to count")->check(CLI::IsMember({"gi", "symptoms", "foods"}));

    auto *re = app.add_subcommand("rerun", "Re-run the configuration recorded in a manifest");
    re->add_option("--manifest", manifest, "Manifest file")->required()->check(CLI::ExistingFile);
    re->add_option("--output", rerun_output, "Write outputs here instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? int(exit_ok) : int(exit_config_error);
    }

    if (re->parsed())
        return rerun(manifest, rerun_output.empty() ? std::nullopt : std::optional<fs::path>(rerun_output), out, err);

    c.subcommand = app.get_subcommands().front()->get_name();
    c.backend = *parse_backend_kind(backend);
    c.macro = parse_macro(macro);
    if (c.subcommand == "annotate" && c.prompts.empty()) {
        err << "error: annotate requires --prompt\n";
        return exit_config_error;
    }
    return run(c, out, err);
}

}  // namespace gisurv::cli
