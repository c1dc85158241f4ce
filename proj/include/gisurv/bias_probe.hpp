#pragma once

#include "gisurv/annotator.hpp"
#include "gisurv/corpus.hpp"
#include "gisurv/evaluation.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gisurv {

/// One-to-one pairs of lowercase words or phrases (side a, side b).
class TermMap {
public:
    /// Throws DataError if a term repeats across pairs, a pair maps a term
    /// to itself, or a term has no word tokens.
    explicit TermMap(std::vector<std::pair<std::string, std::string>> pairs);

    /// Two tab-separated columns per line, '#' comments allowed.
    static TermMap parse(std::string_view content);
    static TermMap load(const std::filesystem::path &path);
    static const TermMap &gender();
    static const TermMap &marital();

    const std::vector<std::pair<std::string, std::string>> &pairs() const noexcept { return pairs_; }
    std::vector<std::string> side_a() const;
    std::vector<std::string> side_b() const;

private:
    std::vector<std::pair<std::string, std::string>> pairs_;
};

enum class Direction { a_to_b, b_to_a };

/// Replaces whole-token occurrences of source-side terms by their partners.
/// Apostrophes split tokens, so "he's" becomes "she's". Longer terms win at
/// the same position. A capitalized source gives a capitalized target,
/// otherwise the target is written as in the map. Everything else is copied
/// byte for byte.
std::string apply_substitution(std::string_view text, const TermMap &map, Direction direction);

struct ExclusiveSelection {
    std::vector<Review> side_a;
    std::vector<Review> side_b;
    std::vector<Review> excluded;  // terms from both sides, or none
};

ExclusiveSelection select_exclusive(const std::vector<Review> &reviews, const TermMap &map);

enum class TestKind { pairwise, vs_pooled };

std::string_view to_string(TestKind kind);

struct ProportionTest {
    TestKind kind = TestKind::pairwise;
    std::string group1;
    std::string group2;  // "pooled" for vs_pooled tests
    std::size_t x1 = 0;
    std::size_t n1 = 0;
    std::size_t x2 = 0;
    std::size_t n2 = 0;
    double z = 0;
    double p = 1;
};

/// Pooled two-sample z-test for equal proportions x1/n1 and x2/n2 with a
/// two-sided p-value. A pooled proportion of 0 or 1 gives z = 0, p = 1.
/// Throws std::invalid_argument unless n1, n2 >= 1 and x1 <= n1, x2 <= n2.
ProportionTest two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

/// One-sample z-test of x/n against a known proportion p0, two-sided.
/// p0 of 0 or 1 gives z = 0, p = 1.
ProportionTest one_proportion_z_test(std::size_t x, std::size_t n, double p0);

struct StratumReport {
    std::string name;
    double micro_f1 = 0;
    double macro_f1 = 0;
    std::size_t n = 0;
    std::size_t n_correct = 0;
    /// Reviews in the stratum rewritten by both the pre-map and the map.
    std::size_t n_doubly_synthetic = 0;
};

/// Scores GI predictions of one group of reviews. `results` and `gold` are
/// looked up by review id.
StratumReport score_stratum(std::string name, const std::vector<AnnotationResult> &results,
                            const std::vector<GoldAnnotation> &gold, MacroPolicy policy = MacroPolicy::exclude_zero_support);

struct BiasReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> map_pairs;
    std::vector<std::pair<std::string, std::string>> pre_map_pairs;
    std::vector<StratumReport> strata;
    std::vector<std::string> empty_strata;
    std::vector<ProportionTest> tests;
};

struct SubstitutionOptions {
    std::string side_a_name = "Side A";
    std::string side_b_name = "Side B";
    /// Marital-style experiments: reviews exclusive under this map are also
    /// rewritten to its other side first, and those variants join the pool.
    std::optional<TermMap> pre_map;
    MacroPolicy policy = MacroPolicy::exclude_zero_support;
};

/// Builds four strata from the reviews exclusive to one side of `map`:
/// side a unadjusted, side a synthetic (rewritten from b), side b
/// unadjusted, side b synthetic (rewritten from a). Synthetic reviews keep
/// their source's gold label. Each stratum is annotated with the GI prompt
/// and scored; pairwise and vs-pooled tests are run on the counts of
/// correct classifications. Empty strata are listed and left out of tests.
BiasReport run_substitution_experiment(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                                       const TermMap &map, const PromptSpec &prompt, const BackendConfig &backend,
                                       const SubstitutionOptions &options = {},
                                       const AnnotationTables &tables = AnnotationTables::defaults());

/// One stratum per distinct value of `meta[key]` (sorted), plus pairwise
/// tests between strata. Throws DataError if a review lacks the key.
BiasReport stratify_by_meta(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                            const std::vector<AnnotationResult> &results, const std::string &key,
                            MacroPolicy policy = MacroPolicy::exclude_zero_support);

/// Data Grouping / Micro-F1 / Macro-F1 / Sample Size table, then the tests.
std::string format_bias_text(const BiasReport &report);
std::string format_bias_json(const BiasReport &report);

}  // namespace gisurv
