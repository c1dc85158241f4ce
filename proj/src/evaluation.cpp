#include "gisurv/evaluation.hpp"

#include "gisurv/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace gisurv {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den, bool &zero) {
    if (den == 0) {
        zero = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

std::unordered_map<std::string_view, const GoldAnnotation *> index_gold(const std::vector<GoldAnnotation> &gold) {
    std::unordered_map<std::string_view, const GoldAnnotation *> out;
    for (const auto &g : gold) out.emplace(g.review_id, &g);
    return out;
}

void check_unique_ids(const std::vector<AnnotationResult> &results) {
    std::unordered_set<std::string_view> seen;
    for (const auto &r : results)
        if (!seen.insert(r.review_id).second) throw DataError("duplicate result for review \"" + r.review_id + "\"");
}

// Rows ordered by descending support, ties in taxonomy order.
std::vector<const LabelReport *> display_order(const LabelScores &s) {
    std::vector<const LabelReport *> rows;
    for (const auto &l : s.labels) rows.push_back(&l);
    std::stable_sort(rows.begin(), rows.end(), [](auto *a, auto *b) { return a->support > b->support; });
    return rows;
}

EvalReport finish(Task task, MacroPolicy policy, const std::vector<LabelSets> &items, const std::vector<bool> &parse_ok,
                  std::size_t failed, std::size_t unannotated) {
    const auto taxonomy = taxonomy_for(task);
    EvalReport rep;
    rep.task = task;
    rep.macro_policy = policy;
    rep.scores = score_label_sets(items, taxonomy);
    std::vector<LabelSets> ok_items;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (parse_ok[i]) ok_items.push_back(items[i]);
    rep.excluding_parse_failures = score_label_sets(ok_items, taxonomy);
    rep.n_evaluated = items.size();
    rep.n_parse_failures = items.size() - ok_items.size();
    rep.n_failed = failed;
    rep.n_unannotated = unannotated;
    return rep;
}

}  // namespace

std::string_view to_string(MacroPolicy policy) {
    return policy == MacroPolicy::include_zero_support ? "include_zero_support" : "exclude_zero_support";
}

LabelReport label_report(std::string label, const ConfusionCounts &c) {
    LabelReport r;
    r.label = std::move(label);
    r.counts = c;
    r.support = c.support();
    r.precision = ratio(c.tp, c.tp + c.fp, r.zero_division);
    r.recall = ratio(c.tp, c.tp + c.fn, r.zero_division);
    // 2PR/(P+R) written over counts; identical in exact arithmetic and free
    // of the rounding of the intermediate ratios.
    r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, r.zero_division);
    return r;
}

LabelScores score_label_sets(const std::vector<LabelSets> &items, const std::vector<std::string> &taxonomy) {
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < taxonomy.size(); ++i) index.emplace(taxonomy[i], i);
    std::vector<ConfusionCounts> counts(taxonomy.size());

    auto lookup = [&](const std::string &label) {
        const auto it = index.find(label);
        if (it == index.end()) throw DataError("label \"" + label + "\" is not in the taxonomy");
        return it->second;
    };
    for (const auto &item : items) {
        for (const auto &g : item.gold) {
            auto &c = counts[lookup(g)];
            if (item.predicted.contains(g))
                ++c.tp;
            else
                ++c.fn;
        }
        for (const auto &p : item.predicted) {
            const auto i = lookup(p);
            if (!item.gold.contains(p)) ++counts[i].fp;
        }
    }

    LabelScores s;
    s.n_items = items.size();
    ConfusionCounts total;
    double sum_all = 0;
    double sum_nonzero = 0;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        s.labels.push_back(label_report(taxonomy[i], counts[i]));
        total.tp += counts[i].tp;
        total.fp += counts[i].fp;
        total.fn += counts[i].fn;
        sum_all += s.labels.back().f1;
        if (s.labels.back().support > 0) {
            sum_nonzero += s.labels.back().f1;
            ++nonzero;
        }
    }
    const auto micro = label_report("micro", total);
    s.micro_precision = micro.precision;
    s.micro_recall = micro.recall;
    s.micro_f1 = micro.f1;
    s.macro_f1_all_labels = taxonomy.empty() ? 0.0 : sum_all / static_cast<double>(taxonomy.size());
    s.macro_f1_nonzero_support = nonzero == 0 ? 0.0 : sum_nonzero / static_cast<double>(nonzero);
    return s;
}

EvalReport score_binary(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold,
                        MacroPolicy policy) {
    check_unique_ids(results);
    const auto by_id = index_gold(gold);
    std::vector<LabelSets> items;
    std::vector<bool> parse_ok;
    std::size_t failed = 0;
    for (const auto &r : results) {
        if (r.task != Task::gi_classification) throw DataError("score_binary needs gi_classification results");
        const auto it = by_id.find(r.review_id);
        if (it == by_id.end()) throw DataError("no gold annotation for review \"" + r.review_id + "\"");
        const bool predicted = std::get<bool>(r.parsed);
        const auto label = [](bool v) { return std::string(v ? gi_label : not_gi_label); };
        items.push_back({{label(it->second->gi)}, {label(predicted)}});
        parse_ok.push_back(r.parse_ok);
        if (r.failed) ++failed;
    }
    return finish(Task::gi_classification, policy, items, parse_ok, failed, 0);
}

EvalReport score_multilabel(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold,
                            Task task, MacroPolicy policy) {
    if (task == Task::gi_classification) throw DataError("score_multilabel needs an extraction task");
    check_unique_ids(results);
    const auto by_id = index_gold(gold);
    std::vector<LabelSets> items;
    std::vector<bool> parse_ok;
    std::size_t failed = 0;
    std::size_t unannotated = 0;
    for (const auto &r : results) {
        if (r.task != task) throw DataError("result for review \"" + r.review_id + "\" has a different task");
        const auto it = by_id.find(r.review_id);
        if (it == by_id.end()) throw DataError("no gold annotation for review \"" + r.review_id + "\"");
        const GoldAnnotation &g = *it->second;
        LabelSets item;
        if (task == Task::symptom_extraction) {
            if (!g.symptoms) {
                ++unannotated;
                continue;
            }
            for (auto l : *g.symptoms) item.gold.emplace(to_string(l));
        } else {
            if (!g.foods) {
                ++unannotated;
                continue;
            }
            for (auto l : *g.foods) item.gold.emplace(to_string(l));
        }
        if (!r.labels) throw DataError("result for review \"" + r.review_id + "\" has not been disambiguated");
        item.predicted.insert(r.labels->begin(), r.labels->end());
        items.push_back(std::move(item));
        parse_ok.push_back(r.parse_ok);
        if (r.failed) ++failed;
    }
    return finish(task, policy, items, parse_ok, failed, unannotated);
}

EvalReport score(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold, MacroPolicy policy) {
    if (results.empty()) throw DataError("no results to score");
    const Task task = results.front().task;
    if (task == Task::gi_classification) return score_binary(results, gold, policy);
    return score_multilabel(results, gold, task, policy);
}

std::string format_report_text(const EvalReport &rep) {
    const auto rows = display_order(rep.scores);
    std::size_t w = std::string_view("Label").size();
    for (const auto *r : rows) w = std::max(w, r->label.size());

    std::string out = fmt::format("Task: {}\n", to_string(rep.task));
    out += fmt::format("{:<{}}  {:>9}  {:>9}  {:>9}  {:>7}\n", "Label", w, "Precision", "Recall", "F1-Score", "Support");
    for (const auto *r : rows)
        out += fmt::format("{:<{}}  {:>9.3f}  {:>9.3f}  {:>9.3f}  {:>7}\n", r->label, w, r->precision, r->recall, r->f1,
                           r->support);
    out += "\n";
    out += fmt::format("Micro F1: {:.3f} (precision {:.3f}, recall {:.3f})\n", rep.scores.micro_f1,
                       rep.scores.micro_precision, rep.scores.micro_recall);
    out += fmt::format("Macro F1: {:.3f} ({}; all labels {:.3f}, non-zero support {:.3f})\n", rep.macro_f1(),
                       to_string(rep.macro_policy), rep.scores.macro_f1_all_labels, rep.scores.macro_f1_nonzero_support);
    out += fmt::format("Evaluated: {}  parse failures: {}  failed requests: {}", rep.n_evaluated, rep.n_parse_failures,
                       rep.n_failed);
    if (rep.n_unannotated > 0) out += fmt::format("  not annotated: {}", rep.n_unannotated);
    out += "\n";
    const auto &ex = rep.excluding_parse_failures;
    out += fmt::format("Excluding parse failures: micro F1 {:.3f}, macro F1 {:.3f} over {} items\n", ex.micro_f1,
                       ex.macro_f1(rep.macro_policy), ex.n_items);
    return out;
}

std::string format_report_json(const EvalReport &rep) {
    json labels = json::array();
    for (const auto *r : display_order(rep.scores)) {
        labels.push_back({{"label", r->label},
                          {"precision", r->precision},
                          {"recall", r->recall},
                          {"f1-score", r->f1},
                          {"support", r->support},
                          {"tp", r->counts.tp},
                          {"fp", r->counts.fp},
                          {"fn", r->counts.fn},
                          {"zero_division", r->zero_division}});
    }
    const auto &ex = rep.excluding_parse_failures;
    json obj{
        {"task", std::string(to_string(rep.task))},
        {"columns", {"label", "precision", "recall", "f1-score", "support"}},
        {"labels", std::move(labels)},
        {"micro", {{"precision", rep.scores.micro_precision}, {"recall", rep.scores.micro_recall}, {"f1", rep.scores.micro_f1}}},
        {"macro_policy", std::string(to_string(rep.macro_policy))},
        {"macro_f1", rep.macro_f1()},
        {"macro_f1_all_labels", rep.scores.macro_f1_all_labels},
        {"macro_f1_nonzero_support", rep.scores.macro_f1_nonzero_support},
        {"n_evaluated", rep.n_evaluated},
        {"n_parse_failures", rep.n_parse_failures},
        {"n_failed", rep.n_failed},
        {"n_unannotated", rep.n_unannotated},
        {"excluding_parse_failures",
         {{"micro_f1", ex.micro_f1}, {"macro_f1", ex.macro_f1(rep.macro_policy)}, {"n_evaluated", ex.n_items}}},
    };
    return obj.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

FragilityReport sweep_prompts(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                              const std::vector<PromptSpec> &prompts, const BackendConfig &backend,
                              const AnnotationTables &tables, MacroPolicy policy) {
    if (prompts.size() < 2) throw ConfigError("a prompt sweep needs at least two prompt/shot combinations");
    backend.validate();
    const std::string model = backend.effective_model();

    FragilityReport report;
    for (const auto &prompt : prompts) {
        auto run = annotate(reviews, prompt, backend, tables);
        attach_labels(run.results, tables);
        const auto rep = prompt.task() == Task::gi_classification ? score_binary(run.results, gold, policy)
                                                                  : score_multilabel(run.results, gold, prompt.task(), policy);
        report.total_failures += run.failures;

        auto group = std::find_if(report.groups.begin(), report.groups.end(),
                                  [&](const FragilityGroup &g) { return g.model == model && g.task == prompt.task(); });
        if (group == report.groups.end()) {
            report.groups.push_back({model, prompt.task(), {}, 0, 0.0});
            group = std::prev(report.groups.end());
        }
        group->entries.push_back({prompt.name(), prompt.shots(), rep.micro_f1(), rep.macro_f1(), rep.n_evaluated,
                                  rep.n_parse_failures, rep.n_failed});
    }
    for (auto &g : report.groups) {
        double lo = g.entries.front().micro_f1;
        double hi = lo;
        g.best = 0;
        for (std::size_t i = 1; i < g.entries.size(); ++i) {
            const double f = g.entries[i].micro_f1;
            if (f > hi) {
                hi = f;
                g.best = i;
            }
            lo = std::min(lo, f);
        }
        g.fragility = hi - lo;
    }
    return report;
}

FragilityReport sweep_prompts(const Corpus &corpus, const SplitSpec &split, const std::string &split_name,
                              const std::vector<PromptSpec> &prompts, const BackendConfig &backend,
                              const AnnotationTables &tables, MacroPolicy policy) {
    if (!corpus.gold) throw DataError("prompt sweeps need a corpus with gold annotations");
    const auto splits = split_corpus(corpus.reviews, split);
    const auto it = std::find_if(splits.begin(), splits.end(), [&](const auto &s) { return s.first == split_name; });
    if (it == splits.end()) throw ConfigError("split spec has no split named \"" + split_name + "\"");
    return sweep_prompts(it->second, *corpus.gold, prompts, backend, tables, policy);
}

std::string format_fragility_text(const FragilityReport &report) {
    std::string out;
    for (const auto &g : report.groups) {
        std::size_t w = std::string_view("Prompt").size();
        for (const auto &e : g.entries) w = std::max(w, e.prompt.size());
        out += fmt::format("Model: {}  Task: {}\n", g.model, to_string(g.task));
        out += fmt::format("{:<{}}  {:>5}  {:>8}  {:>8}  {:>14}\n", "Prompt", w, "Shots", "Micro F1", "Macro F1",
                           "Parse failures");
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
            const auto &e = g.entries[i];
            out += fmt::format("{:<{}}  {:>5}  {:>8.3f}  {:>8.3f}  {:>14}{}\n", e.prompt, w, e.shots, e.micro_f1, e.macro_f1,
                               e.n_parse_failures, i == g.best ? "  *best" : "");
        }
        out += fmt::format("Fragility (max - min micro F1): {:.3f}\n\n", g.fragility);
    }
    if (report.total_failures > 0) out += fmt::format("Failed requests: {}\n", report.total_failures);
    return out;
}

std::string format_fragility_json(const FragilityReport &report) {
    json groups = json::array();
    for (const auto &g : report.groups) {
        json entries = json::array();
        for (const auto &e : g.entries)
            entries.push_back({{"prompt", e.prompt},
                               {"shots", e.shots},
                               {"micro_f1", e.micro_f1},
                               {"macro_f1", e.macro_f1},
                               {"n_evaluated", e.n_evaluated},
                               {"n_parse_failures", e.n_parse_failures},
                               {"n_failed", e.n_failed}});
        groups.push_back({{"model", g.model},
                          {"task", std::string(to_string(g.task))},
                          {"entries", std::move(entries)},
                          {"best", {{"prompt", g.entries[g.best].prompt}, {"shots", g.entries[g.best].shots}}},
                          {"fragility", g.fragility}});
    }
    return json{{"groups", std::move(groups)}, {"total_failures", report.total_failures}}.dump(2) + "\n";
}

}  // namespace gisurv
