#include "gisurv/error.hpp"
#include "gisurv/evaluation.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace gisurv;
using Items = std::vector<std::string>;

namespace {

AnnotationResult gi_result(std::string id, bool value, bool parse_ok = true) {
    return {std::move(id), Task::gi_classification, value ? "True" : "False", value, parse_ok, false, "", std::nullopt};
}

AnnotationResult sym_result(std::string id, Items labels, bool parse_ok = true) {
    return {std::move(id), Task::symptom_extraction, "", labels, parse_ok, false, "", labels};
}

}  // namespace

TEST_CASE("hand-computed multi-label scores") {
    const std::vector<LabelSets> items{{{"a"}, {"a", "b"}}, {{"b"}, {}}, {{"a", "c"}, {"c"}}};
    const auto s = score_label_sets(items, {"a", "b", "c", "d"});
    REQUIRE(s.labels.size() == 4);
    CHECK(s.labels[0].precision == 1.0);
    CHECK(s.labels[0].recall == 0.5);
    CHECK(s.labels[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.labels[1].f1 == 0.0);
    CHECK_FALSE(s.labels[1].zero_division);
    CHECK(s.labels[1].support == 1);
    CHECK(s.labels[2].f1 == 1.0);
    CHECK(s.labels[3].support == 0);
    CHECK(s.labels[3].zero_division);
    CHECK(s.micro_precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.micro_recall == 0.5);
    CHECK(s.micro_f1 == doctest::Approx(4.0 / 7.0));
    CHECK(s.macro_f1_nonzero_support == doctest::Approx(5.0 / 9.0));
    CHECK(s.macro_f1_all_labels == doctest::Approx(5.0 / 12.0));
    CHECK(s.macro_f1(MacroPolicy::include_zero_support) == s.macro_f1_all_labels);

    CHECK_THROWS_AS(score_label_sets({{{"z"}, {}}}, {"a"}), DataError);
}

TEST_CASE("empty input scores zero without dividing by zero") {
    const auto s = score_label_sets({}, {"a", "b"});
    CHECK(s.micro_f1 == 0.0);
    CHECK(s.macro_f1_nonzero_support == 0.0);
    CHECK(s.labels[0].zero_division);
}

TEST_CASE("binary scoring") {
    const std::vector<GoldAnnotation> gold{{"1", true, {}, {}}, {"2", false, {}, {}}, {"3", true, {}, {}}, {"4", false, {}, {}}};
    const std::vector<AnnotationResult> results{gi_result("1", true), gi_result("2", true), gi_result("3", false, false),
                                                gi_result("4", false)};
    const auto rep = score_binary(results, gold);
    CHECK(rep.micro_f1() == 0.5);
    CHECK(rep.n_evaluated == 4);
    CHECK(rep.n_parse_failures == 1);
    CHECK(rep.excluding_parse_failures.n_items == 3);
    CHECK(rep.excluding_parse_failures.micro_f1 == doctest::Approx(2.0 / 3.0));
    CHECK(rep.scores.labels[0].label == "Not-GI");
    CHECK(rep.scores.labels[1].label == "GI");

    CHECK_THROWS_AS(score_binary({gi_result("9", true)}, gold), DataError);
    CHECK_THROWS_AS(score_binary({gi_result("1", true), gi_result("1", true)}, gold), DataError);
    CHECK_THROWS_AS(score_binary({sym_result("1", {})}, gold), DataError);
}

TEST_CASE("multi-label scoring skips reviews without annotations") {
    const std::vector<GoldAnnotation> gold{{"1", true, SymptomSet{SymptomLabel::vomiting}, std::nullopt},
                                           {"2", false, std::nullopt, std::nullopt},
                                           {"3", true, SymptomSet{SymptomLabel::nausea}, std::nullopt}};
    const std::vector<AnnotationResult> results{sym_result("1", {"vomiting"}), sym_result("2", {"nausea"}),
                                                sym_result("3", {"vomiting"})};
    const auto rep = score(results, gold);
    CHECK(rep.task == Task::symptom_extraction);
    CHECK(rep.n_evaluated == 2);
    CHECK(rep.n_unannotated == 1);
    CHECK(rep.micro_f1() == 0.5);

    auto unlabeled = results;
    unlabeled[0].labels.reset();
    CHECK_THROWS_AS(score(unlabeled, gold), DataError);
    CHECK_THROWS_AS(score({}, gold), DataError);
}

TEST_CASE("report layout") {
    const std::vector<GoldAnnotation> gold{{"1", true, {}, {}}, {"2", false, {}, {}}, {"3", true, {}, {}}};
    const auto rep = score_binary({gi_result("1", true), gi_result("2", false), gi_result("3", true)}, gold);
    const auto text = format_report_text(rep);
    const auto header = text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n') - 1);
    CHECK(header.find("Label") == 0);
    CHECK(header.find("Precision") < header.find("Recall"));
    CHECK(header.find("Recall") < header.find("F1-Score"));
    CHECK(header.find("F1-Score") < header.find("Support"));
    // rows by support, descending
    CHECK(text.find("GI ") < text.find("Not-GI"));

    const auto j = nlohmann::json::parse(format_report_json(rep));
    CHECK(j["columns"] == nlohmann::json{"label", "precision", "recall", "f1-score", "support"});
    CHECK(j["labels"][0]["label"] == "GI");
    CHECK(j["micro"]["f1"] == 1.0);
}

TEST_CASE("prompt sweep reports fragility per model and task") {
    const std::vector<Review> reviews{{"1", "I was sick after the fish", {}},
                                      {"2", "Lovely meal", {}},
                                      {"3", "he is allergic and was vomiting", {}},
                                      {"4", "we had diarrhoea", {}}};
    const std::vector<GoldAnnotation> gold{{"1", true, {}, {}}, {"2", false, {}, {}}, {"3", false, {}, {}}, {"4", true, {}, {}}};
    const PromptSpec a("a", Task::gi_classification, "{review}", 0, {{"x", "True"}});
    BackendConfig baseline;
    const auto rep = sweep_prompts(reviews, gold, {a, a.with_shots(1)}, baseline);
    REQUIRE(rep.groups.size() == 1);
    CHECK(rep.groups[0].model == "baseline");
    CHECK(rep.groups[0].entries.size() == 2);
    CHECK(rep.groups[0].entries[0].micro_f1 == 1.0);
    CHECK(rep.groups[0].fragility == 0.0);
    CHECK(rep.groups[0].best == 0);
    CHECK(format_fragility_text(rep).find("Fragility") != std::string::npos);
    CHECK_THROWS_AS(sweep_prompts(reviews, gold, {a}, baseline), ConfigError);

    const Corpus corpus{reviews, gold};
    const auto on_split = sweep_prompts(corpus, SplitSpec(1, {{"validation", 0.5}, {"test", 0.5}}), "validation",
                                        {a, a.with_shots(1)}, baseline);
    CHECK(on_split.groups[0].entries[0].n_evaluated == 2);
    CHECK_THROWS_AS(sweep_prompts(corpus, SplitSpec(1, {{"all", 1.0}}), "nope", {a, a.with_shots(1)}, baseline),
                    ConfigError);
}
