#include "gisurv/corpus.hpp"
#include "gisurv/error.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace gisurv;

namespace {

std::vector<Review> make_reviews(std::size_t n) {
    std::vector<Review> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"r" + std::to_string(1000 + i), "text " + std::to_string(i), {}});
    return out;
}

std::vector<std::string> ids(const std::vector<Review> &rs) {
    std::vector<std::string> out;
    for (const auto &r : rs) out.push_back(r.id);
    return out;
}

}  // namespace

TEST_CASE("records round-trip") {
    const std::string line =
        R"({"gold":{"foods":["poultry","other"],"gi":true,"symptoms":["vomiting"]},"id":"a1","meta":{"spelling":"traditional"},"text":"Sick after the chicken taco"})";
    const auto rec = parse_record(line);
    CHECK(rec.review.id == "a1");
    REQUIRE(rec.gold);
    CHECK(rec.gold->gi);
    CHECK(rec.gold->symptoms->contains(SymptomLabel::vomiting));
    CHECK(rec.gold->foods->size() == 2);
    CHECK(format_record(rec) ==
          R"({"gold":{"foods":["poultry","other"],"gi":true,"symptoms":["vomiting"]},"id":"a1","meta":{"spelling":"traditional"},"text":"Sick after the chicken taco"})");
    CHECK(parse_record(format_record(rec)) == rec);
}

TEST_CASE("record validation") {
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":"t","extra":1})"), DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"","text":"t"})"), DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":""})"), DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":"t","gold":{"gi":true,"symptoms":["coughing"]}})"), DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":"t","gold":{"gi":true,"symptoms":["vomiting","general sickness"]}})"),
                    DataError);
    CHECK_THROWS_AS(parse_record(R"({"id":"a","text":"t","gold":{"gi":false,"foods":["beef"]}})"), DataError);
    CHECK_THROWS_AS(parse_record("not json"), DataError);
    CHECK_NOTHROW(parse_record(R"({"id":"a","text":"t","gold":{"gi":true,"symptoms":["general sickness"]}})"));
}

TEST_CASE("duplicate ids are rejected with their line") {
    try {
        parse_records("{\"id\":\"a\",\"text\":\"x\"}\n\n{\"id\":\"a\",\"text\":\"y\"}\n");
        FAIL("expected DataError");
    } catch (const DataError &e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("load_corpus with gold requires gold everywhere") {
    test_support::TempDir dir;
    test_support::spit(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"x\",\"gold\":{\"gi\":false}}\n{\"id\":\"b\",\"text\":\"y\"}\n");
    CHECK(load_corpus(dir / "c.jsonl", false).reviews.size() == 2);
    CHECK_THROWS_AS(load_corpus(dir / "c.jsonl", true), DataError);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", false), DataError);
}

TEST_CASE("split spec validation") {
    CHECK_THROWS_AS(SplitSpec(1, {}), ConfigError);
    CHECK_THROWS_AS(SplitSpec(1, {{"a", 0.5}, {"b", 0.4}}), ConfigError);
    CHECK_THROWS_AS(SplitSpec(1, {{"a", 0.5}, {"a", 0.5}}), ConfigError);
    CHECK_THROWS_AS(SplitSpec(1, {{"a", 0.0}, {"b", 1.0}}), ConfigError);
    CHECK_THROWS_AS(SplitSpec::parse(1, "a=0.5,b"), ConfigError);
    const auto s = SplitSpec::parse(3, "validation=0.2, test=0.8");
    CHECK(s.fractions().size() == 2);
    CHECK(SplitSpec::parse(3, s.to_string()).fractions() == s.fractions());
}

TEST_CASE("split sizes") {
    CHECK(SplitSpec(0, {{"validation", 0.2}, {"test", 0.8}}).sizes(3069) == std::vector<std::size_t>{614, 2455});
    CHECK(SplitSpec(0, {{"train", 0.7}, {"dev", 0.1}, {"test", 0.2}}).sizes(10) == std::vector<std::size_t>{7, 1, 2});
    CHECK(SplitSpec(0, {{"a", 0.5}, {"b", 0.5}}).sizes(5) == std::vector<std::size_t>{3, 2});
}

TEST_CASE("split_corpus partitions deterministically") {
    const auto reviews = make_reviews(97);
    const SplitSpec spec(11, {{"validation", 0.2}, {"test", 0.8}});
    const auto a = split_corpus(reviews, spec);
    const auto b = split_corpus(reviews, spec);
    REQUIRE(a.size() == 2);
    CHECK(ids(a[0].second) == ids(b[0].second));
    CHECK(a[0].second.size() == 19);
    CHECK(a[1].second.size() == 78);

    std::set<std::string> all;
    for (const auto &[name, part] : a) {
        CHECK(std::is_sorted(part.begin(), part.end(), [](auto &x, auto &y) { return x.id < y.id; }));
        for (const auto &r : part) CHECK(all.insert(r.id).second);
    }
    CHECK(all.size() == reviews.size());

    // input order does not matter, the seed does
    auto shuffled = reviews;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(ids(split_corpus(shuffled, spec)[0].second) == ids(a[0].second));
    CHECK(ids(split_corpus(reviews, SplitSpec(12, spec.fractions()))[0].second) != ids(a[0].second));
    CHECK_THROWS_AS(split_corpus({}, spec), DataError);
}

TEST_CASE("summaries") {
    std::vector<Review> reviews{{"a", "one two three", {}}, {"b", "one", {}}, {"c", "a b c d e", {}}};
    std::vector<GoldAnnotation> gold{{"a", true, SymptomSet{SymptomLabel::vomiting}, FoodSet{FoodLabel::beef}},
                                     {"b", false, std::nullopt, std::nullopt},
                                     {"c", true, SymptomSet{SymptomLabel::vomiting, SymptomLabel::nausea}, std::nullopt}};
    const auto gi = summarize(reviews, gold);
    CHECK(gi.total_samples == 3);
    CHECK(gi.min_words == 1);
    CHECK(gi.max_words == 5);
    CHECK(gi.median_words == doctest::Approx(3.0));
    CHECK(gi.mean_words == doctest::Approx(3.0));
    CHECK(gi.label_counts == std::vector<std::pair<std::string, std::size_t>>{{"True", 2}, {"False", 1}});

    const auto sym = summarize(reviews, gold, LabelView::symptoms);
    CHECK(sym.total_samples == 2);
    CHECK(sym.label_counts == std::vector<std::pair<std::string, std::size_t>>{{"vomiting", 2}, {"nausea", 1}});
    CHECK(format_summary(sym).find("Statistic") != std::string::npos);
}
