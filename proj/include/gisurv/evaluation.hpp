#pragma once

#include "gisurv/annotator.hpp"
#include "gisurv/corpus.hpp"
#include "gisurv/taxonomy.hpp"

#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace gisurv {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t support() const noexcept { return tp + fn; }
    friend bool operator==(const ConfusionCounts &, const ConfusionCounts &) = default;
};

/// Precision, recall and F1 for one label. Any ratio with a zero
/// denominator is reported as 0 and sets `zero_division`.
struct LabelReport {
    std::string label;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t support = 0;
    ConfusionCounts counts;
    bool zero_division = false;
};

LabelReport label_report(std::string label, const ConfusionCounts &counts);

/// Gold and predicted label sets of one evaluated item.
struct LabelSets {
    std::set<std::string> gold;
    std::set<std::string> predicted;
};

enum class MacroPolicy { exclude_zero_support, include_zero_support };

std::string_view to_string(MacroPolicy policy);

/// Scores over a fixed taxonomy. Micro figures pool counts across all
/// labels; macro figures are unweighted means of per-label F1.
struct LabelScores {
    std::vector<LabelReport> labels;  // taxonomy order
    double micro_precision = 0;
    double micro_recall = 0;
    double micro_f1 = 0;
    double macro_f1_all_labels = 0;
    double macro_f1_nonzero_support = 0;
    std::size_t n_items = 0;

    double macro_f1(MacroPolicy policy) const noexcept {
        return policy == MacroPolicy::include_zero_support ? macro_f1_all_labels : macro_f1_nonzero_support;
    }
};

/// Throws DataError if an item holds a label outside the taxonomy.
LabelScores score_label_sets(const std::vector<LabelSets> &items, const std::vector<std::string> &taxonomy);

struct EvalReport {
    Task task = Task::gi_classification;
    MacroPolicy macro_policy = MacroPolicy::exclude_zero_support;
    /// Parse failures scored with their fallback predictions.
    LabelScores scores;
    /// Same figures with parse failures left out.
    LabelScores excluding_parse_failures;
    std::size_t n_evaluated = 0;
    std::size_t n_parse_failures = 0;
    std::size_t n_failed = 0;
    /// Reviews skipped because gold has no annotation for the task.
    std::size_t n_unannotated = 0;

    double micro_f1() const noexcept { return scores.micro_f1; }
    double macro_f1() const noexcept { return scores.macro_f1(macro_policy); }
};

/// Binary GI scoring with two labels, "Not-GI" and "GI". Throws DataError if
/// a result has no gold record or the results are not gi_classification.
EvalReport score_binary(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold,
                        MacroPolicy policy = MacroPolicy::exclude_zero_support);

/// Multi-label scoring of disambiguated results (their `labels`) against the
/// gold symptom or food sets. Reviews not annotated for the task are skipped.
EvalReport score_multilabel(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold,
                            Task task, MacroPolicy policy = MacroPolicy::exclude_zero_support);

/// Dispatches on the task of the results.
EvalReport score(const std::vector<AnnotationResult> &results, const std::vector<GoldAnnotation> &gold,
                 MacroPolicy policy = MacroPolicy::exclude_zero_support);

/// Aligned-column table: Label, Precision, Recall, F1-Score, Support
/// (rows by descending support), followed by the aggregate figures.
std::string format_report_text(const EvalReport &report);
std::string format_report_json(const EvalReport &report);

// ---------------------------------------------------------------------------
// Prompt sweeps

struct SweepEntry {
    std::string prompt;
    int shots = 0;
    double micro_f1 = 0;
    double macro_f1 = 0;
    std::size_t n_evaluated = 0;
    std::size_t n_parse_failures = 0;
    std::size_t n_failed = 0;
};

/// All (prompt, shots) combinations for one model and task.
struct FragilityGroup {
    std::string model;
    Task task = Task::gi_classification;
    std::vector<SweepEntry> entries;
    std::size_t best = 0;   // index into entries, first maximum of micro F1
    double fragility = 0;  // max - min micro F1
};

struct FragilityReport {
    std::vector<FragilityGroup> groups;
    std::size_t total_failures = 0;
};

/// Annotates and scores `reviews` with every prompt spec. Needs at least two
/// specs. Transport failures are counted, not fatal.
FragilityReport sweep_prompts(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                              const std::vector<PromptSpec> &prompts, const BackendConfig &backend,
                              const AnnotationTables &tables = AnnotationTables::defaults(),
                              MacroPolicy policy = MacroPolicy::exclude_zero_support);

/// Splits the corpus and sweeps on the named split only.
FragilityReport sweep_prompts(const Corpus &corpus, const SplitSpec &split, const std::string &split_name,
                              const std::vector<PromptSpec> &prompts, const BackendConfig &backend,
                              const AnnotationTables &tables = AnnotationTables::defaults(),
                              MacroPolicy policy = MacroPolicy::exclude_zero_support);

std::string format_fragility_text(const FragilityReport &report);
std::string format_fragility_json(const FragilityReport &report);

}  // namespace gisurv
