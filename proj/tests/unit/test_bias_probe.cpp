#include "gisurv/bias_probe.hpp"
#include "gisurv/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <random>
#include <stdexcept>

using namespace gisurv;

namespace {
using Pairs = std::vector<std::pair<std::string, std::string>>;

// Textbook pooled two-proportion test, p-value from Boost's normal CDF.
std::pair<double, double> reference_test(double x1, double n1, double x2, double n2) {
    const double p1 = x1 / n1;
    const double p2 = x2 / n2;
    const double pooled = (x1 + x2) / (n1 + n2);
    if (pooled <= 0.0 || pooled >= 1.0) return {0.0, 1.0};
    const double z = (p1 - p2) / std::sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2));
    const boost::math::normal nd;
    return {z, 2 * boost::math::cdf(boost::math::complement(nd, std::fabs(z)))};
}

}  // namespace

TEST_CASE("term map validation") {
    CHECK_THROWS_AS(TermMap(Pairs{{"he", "he"}}), DataError);
    CHECK_THROWS_AS(TermMap(Pairs{{"he", "she"}, {"she", "her"}}), DataError);
    CHECK_THROWS_AS(TermMap(Pairs{}), DataError);
    CHECK_THROWS_AS(TermMap::parse("he\tshe\thers\n"), DataError);
    CHECK(TermMap::parse("# c\nHe\tShe\n").pairs().front() == std::pair<std::string, std::string>{"he", "she"});
    CHECK(TermMap::gender().pairs().size() >= 5);
    CHECK(TermMap::marital().pairs().size() == 4);
}

TEST_CASE("substitution examples") {
    CHECK(apply_substitution("He took his wife", TermMap(Pairs{{"he", "she"}, {"his", "her"}}), Direction::a_to_b) ==
          "She took her wife");
    CHECK(apply_substitution("wife", TermMap::marital(), Direction::a_to_b) == "girlfriend");
    CHECK(apply_substitution("my Girlfriend", TermMap::marital(), Direction::b_to_a) == "my Wife");
    CHECK(apply_substitution("he's here, isn't he?", TermMap::gender(), Direction::a_to_b) == "she's here, isn't she?");
    CHECK(apply_substitution("the theme was heavy", TermMap::gender(), Direction::a_to_b) == "the theme was heavy");
    CHECK(apply_substitution("", TermMap::gender(), Direction::a_to_b).empty());
    const std::string plain = "Nothing to see\n  here.";
    CHECK(apply_substitution(plain, TermMap::gender(), Direction::a_to_b) == plain);
}

TEST_CASE("longest phrase wins and separators survive") {
    const TermMap m({{"young man", "young woman"}, {"man", "woman"}, {"best man", "maid of honour"}});
    CHECK(apply_substitution("a young  man and a man", m, Direction::a_to_b) == "a young  woman and a woman");
    CHECK(apply_substitution("the Best man", m, Direction::a_to_b) == "the Maid of honour");
}

TEST_CASE("single-word maps keep the token count") {
    std::mt19937 rng(3);
    const std::vector<std::string> words{"he", "his", "The", "food", "Husband", "was", "sick", "Dad", "and", "me"};
    for (int i = 0; i < 200; ++i) {
        std::string text;
        for (int k = 0; k < 12; ++k) text += words[rng() % words.size()] + (rng() % 3 ? " " : ", ");
        const auto out = apply_substitution(text, TermMap::gender(), Direction::a_to_b);
        CHECK(text::tokenize(out).size() == text::tokenize(text).size());
    }
}

TEST_CASE("select_exclusive") {
    const std::vector<Review> reviews{{"1", "my husband loved it", {}},
                                      {"2", "he and she both ate", {}},
                                      {"3", "no people here", {}},
                                      {"4", "She's the best", {}}};
    const auto sel = select_exclusive(reviews, TermMap::gender());
    REQUIRE(sel.side_a.size() == 1);
    CHECK(sel.side_a[0].id == "1");
    REQUIRE(sel.side_b.size() == 1);
    CHECK(sel.side_b[0].id == "4");
    CHECK(sel.excluded.size() == 2);
}

TEST_CASE("two-proportion z-test") {
    const auto equal = two_proportion_z_test(50, 100, 50, 100);
    CHECK(equal.z == 0.0);
    CHECK(equal.p == 1.0);
    CHECK(two_proportion_z_test(0, 10, 0, 10).p == 1.0);
    CHECK(two_proportion_z_test(10, 10, 7, 7).p == 1.0);

    const auto t = two_proportion_z_test(90, 100, 80, 100);
    CHECK(t.z == doctest::Approx(1.980295).epsilon(1e-6));
    CHECK(t.p == doctest::Approx(0.047670).epsilon(1e-5));
    const auto [rz, rp] = reference_test(90, 100, 80, 100);
    CHECK(std::fabs(t.z - rz) < 1e-9);
    CHECK(std::fabs(t.p - rp) < 1e-9);

    const auto u = two_proportion_z_test(390, 429, 363, 395);
    const auto [uz, up] = reference_test(390, 429, 363, 395);
    CHECK(std::fabs(u.p - up) < 1e-6);
    CHECK(std::fabs(u.z - uz) < 1e-9);

    CHECK_THROWS_AS(two_proportion_z_test(1, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(two_proportion_z_test(3, 2, 1, 1), std::invalid_argument);
}

TEST_CASE("z-test symmetry and range") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n1 = 1 + rng() % 500;
        const std::size_t n2 = 1 + rng() % 500;
        const std::size_t x1 = rng() % (n1 + 1);
        const std::size_t x2 = rng() % (n2 + 1);
        const auto a = two_proportion_z_test(x1, n1, x2, n2);
        const auto b = two_proportion_z_test(x2, n2, x1, n1);
        CHECK(a.p == b.p);
        CHECK(a.z == -b.z);
        CHECK(a.p >= 0.0);
        CHECK(a.p <= 1.0);
    }
}

TEST_CASE("one-sample test against the pooled proportion") {
    const auto t = one_proportion_z_test(45, 50, 0.8);
    const double z = (0.9 - 0.8) / std::sqrt(0.8 * 0.2 / 50);
    CHECK(t.z == doctest::Approx(z));
    CHECK(t.p == doctest::Approx(std::erfc(z / std::sqrt(2.0))));
    CHECK(one_proportion_z_test(5, 5, 1.0).p == 1.0);
    CHECK_THROWS_AS(one_proportion_z_test(1, 0, 0.5), std::invalid_argument);
}

TEST_CASE("substitution experiment with the baseline") {
    const std::vector<Review> reviews{
        {"m1", "My husband was sick after the fish", {}}, {"m2", "He loved the steak", {}},
        {"m3", "His burger made him vomit", {}},          {"f1", "My wife threw up all night", {}},
        {"f2", "She enjoyed the cake", {}},              {"x1", "We had a lovely meal", {}},
        {"x2", "He and she were sick", {}}};
    const std::vector<GoldAnnotation> gold{{"m1", true, {}, {}},  {"m2", false, {}, {}}, {"m3", true, {}, {}},
                                           {"f1", true, {}, {}},  {"f2", false, {}, {}}, {"x1", false, {}, {}},
                                           {"x2", true, {}, {}}};
    const PromptSpec prompt("gi", Task::gi_classification, "{review}", 0, {});
    SubstitutionOptions opts;
    opts.side_a_name = "Male";
    opts.side_b_name = "Female";
    const auto rep = run_substitution_experiment(reviews, gold, TermMap::gender(), prompt, BackendConfig{}, opts);
    REQUIRE(rep.strata.size() == 4);
    CHECK(rep.strata[0].name == "Male unadjusted");
    CHECK(rep.strata[0].n == 3);
    CHECK(rep.strata[1].name == "Male synthetic");
    CHECK(rep.strata[1].n == 2);
    CHECK(rep.strata[2].n == 2);
    CHECK(rep.strata[3].n == 3);
    // the baseline ignores gendered words, so every stratum is perfectly classified
    for (const auto &s : rep.strata) CHECK(s.n_correct == s.n);
    CHECK(rep.tests.size() == 6 + 4);
    for (const auto &t : rep.tests) CHECK(t.p == 1.0);
    CHECK(rep.empty_strata.empty());
    CHECK(format_bias_text(rep).find("Data Grouping") != std::string::npos);

    // no female reviews at all: two strata are empty and skipped
    const std::vector<Review> only_male(reviews.begin(), reviews.begin() + 3);
    const auto partial = run_substitution_experiment(only_male, gold, TermMap::gender(), prompt, BackendConfig{}, opts);
    CHECK(partial.strata.size() == 2);
    CHECK(partial.empty_strata == std::vector<std::string>{"Male synthetic", "Female unadjusted"});
    CHECK(partial.tests.size() == 1 + 2);

    const std::vector<GoldAnnotation> missing(gold.begin() + 1, gold.end());
    CHECK_THROWS_AS(run_substitution_experiment(reviews, missing, TermMap::gender(), prompt, BackendConfig{}, opts),
                    DataError);
}

TEST_CASE("marital experiment pools gender-swapped variants") {
    // 2 married and 1 unmarried review, all gender-exclusive
    const std::vector<Review> reviews{{"a", "My wife was sick", {}},
                                      {"b", "My husband loved it", {}},
                                      {"c", "My boyfriend threw up", {}}};
    const std::vector<GoldAnnotation> gold{{"a", true, {}, {}}, {"b", false, {}, {}}, {"c", true, {}, {}}};
    const PromptSpec prompt("gi", Task::gi_classification, "{review}", 0, {});
    SubstitutionOptions opts;
    opts.side_a_name = "Married";
    opts.side_b_name = "Unmarried";
    opts.pre_map = TermMap::gender();
    const auto rep = run_substitution_experiment(reviews, gold, TermMap::marital(), prompt, BackendConfig{}, opts);
    REQUIRE(rep.strata.size() == 4);
    // married: 2 unadjusted; synthetic = 2 swapped + 1 mapped + 1 swapped-and-mapped
    CHECK(rep.strata[0].n == 2);
    CHECK(rep.strata[1].n == 4);
    CHECK(rep.strata[1].n_doubly_synthetic == 1);
    CHECK(rep.strata[2].n == 1);
    CHECK(rep.strata[3].n == 1 + 2 + 2);
    CHECK(rep.strata[3].n_doubly_synthetic == 2);
    CHECK(rep.strata[0].n + rep.strata[1].n == rep.strata[2].n + rep.strata[3].n);
    CHECK(format_bias_json(rep).find("\"doubly_synthetic\": true") != std::string::npos);
}

TEST_CASE("stratify_by_meta") {
    const std::vector<Review> reviews{{"1", "x", {{"spelling", "traditional"}}},
                                      {"2", "x", {{"spelling", "non-traditional"}}},
                                      {"3", "x", {{"spelling", "traditional"}}},
                                      {"4", "x", {{"spelling", "non-traditional"}}}};
    const std::vector<GoldAnnotation> gold{{"1", true, {}, {}}, {"2", true, {}, {}}, {"3", false, {}, {}}, {"4", false, {}, {}}};
    auto res = [](std::string id, bool v) {
        return AnnotationResult{std::move(id), Task::gi_classification, "", v, true, false, "", std::nullopt};
    };
    const std::vector<AnnotationResult> results{res("1", true), res("2", true), res("3", true), res("4", true)};
    const auto rep = stratify_by_meta(reviews, gold, results, "spelling");
    REQUIRE(rep.strata.size() == 2);
    CHECK(rep.strata[0].name == "non-traditional");
    CHECK(rep.strata[0].n_correct == 1);
    REQUIRE(rep.tests.size() == 1);
    CHECK(rep.tests[0].p == 1.0);

    const std::vector<Review> single(reviews.begin(), reviews.begin() + 1);
    const auto one = stratify_by_meta(single, gold, results, "spelling");
    CHECK(one.strata.size() == 1);
    CHECK(one.tests.empty());
    CHECK_THROWS_AS(stratify_by_meta(reviews, gold, results, "age"), DataError);
}
