#include "gisurv/annotator.hpp"
#include "gisurv/error.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>

using namespace gisurv;
using Items = std::vector<std::string>;

namespace {

PromptSpec small_prompt(Task task = Task::gi_classification, int shots = 0) {
    return PromptSpec("p", task, "Review: {review}\nAnswer:", shots,
                      {{"I threw up", "True"}, {"Lovely", "False"}, {"a", "b"}, {"c", "d"}, {"e", "f"}});
}

class CountingBackend : public Backend {
public:
    std::string generate(const GenerationRequest &req) override {
        ++calls;
        if (req.review->text.find("boom") != std::string::npos) throw BackendError("boom");
        return req.review->text.find("sick") != std::string::npos ? "True" : "False";
    }
    std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("prompt spec validation and rendering") {
    CHECK_THROWS_AS(PromptSpec("p", Task::gi_classification, "no placeholder", 0, {}), ConfigError);
    CHECK_THROWS_AS(PromptSpec("p", Task::gi_classification, "{review} {review}", 0, {}), ConfigError);
    CHECK_THROWS_AS(PromptSpec("p", Task::gi_classification, "{review}", 2, {{"a", "b"}, {"c", "d"}}), ConfigError);
    CHECK_THROWS_AS(PromptSpec("p", Task::gi_classification, "{review}", 1, {}), ConfigError);

    const auto p = small_prompt();
    CHECK(p.render("tasty") == "Review: tasty\nAnswer:");
    CHECK(p.render_messages("tasty") == std::vector<ChatMessage>{{"user", "Review: tasty\nAnswer:"}});

    const auto one = p.with_shots(1).render_messages("tasty");
    REQUIRE(one.size() == 3);
    CHECK(one[0] == ChatMessage{"user", "Review: I threw up\nAnswer:"});
    CHECK(one[1] == ChatMessage{"assistant", "True"});
    CHECK(p.with_shots(5).render_messages("x").size() == 11);
    CHECK_THROWS_AS(p.with_shots(3), ConfigError);
}

TEST_CASE("bundled prompt specs parse") {
    for (const char *name : {"gi_classification", "gi_classification_terse", "symptom_extraction", "food_extraction"}) {
        const auto p = PromptSpec::load(test_support::source_dir() / "data" / "prompts" / (std::string(name) + ".json"));
        CHECK(p.examples().size() == 5);
        CHECK_NOTHROW(p.with_shots(5));
    }
    CHECK_THROWS_AS(PromptSpec::parse(R"({"name":"x","task":"nope","template":"{review}","shots":0,"examples":[]})"),
                    ConfigError);
}

TEST_CASE("boolean parsing") {
    CHECK(parse_boolean("True") == std::pair{true, true});
    CHECK(parse_boolean("  false.") == std::pair{false, true});
    CHECK(parse_boolean("Answer: YES, the review") == std::pair{true, true});
    CHECK(parse_boolean("No. Although it is true that") == std::pair{false, true});
    CHECK(parse_boolean("I cannot tell") == std::pair{false, false});
    CHECK(parse_boolean("") == std::pair{false, false});
    CHECK(parse_boolean("untrue") == std::pair{false, false});
    CHECK(render_boolean(true) == "True");
}

TEST_CASE("list parsing") {
    CHECK(parse_list("[vomiting, diarrhea]") == std::pair{Items{"vomiting", "diarrhea"}, true});
    CHECK(parse_list("[]") == std::pair{Items{}, true});
    CHECK(parse_list("['chicken (fresh meat)', \"rice\"]") == std::pair{Items{"chicken (fresh meat)", "rice"}, true});
    CHECK(parse_list("- vomiting\n- nausea\n- vomiting") == std::pair{Items{"vomiting", "nausea"}, true});
    CHECK(parse_list("1. beef\n2) rice") == std::pair{Items{"beef", "rice"}, true});
    CHECK(parse_list("Symptoms: vomiting, nausea; cramps.") == std::pair{Items{"vomiting", "nausea", "cramps"}, true});
    CHECK(parse_list("None") == std::pair{Items{}, true});
    CHECK(parse_list("No symptoms mentioned.") == std::pair{Items{}, true});
    CHECK(parse_list("").second == false);
    CHECK(parse_list("!!!").second == false);
    CHECK(render_list({"a", "b"}) == "[a, b]");
    CHECK(parse_list(render_list({"x y", "z"})).first == Items{"x y", "z"});
}

TEST_CASE("results round-trip through JSON lines") {
    AnnotationResult r{"r1", Task::symptom_extraction, "[puking]", Items{"puking"}, true, false, "", Items{"vomiting"}};
    CHECK(parse_result(format_result(r)) == r);
    AnnotationResult g{"r2", Task::gi_classification, "hmm", false, false, true, "HTTP 500", std::nullopt};
    CHECK(parse_result(format_result(g)) == g);
    CHECK_THROWS_AS(parse_result(R"({"review_id":"x"})"), DataError);

    std::ostringstream out;
    write_results(out, {r, g});
    test_support::TempDir dir;
    test_support::spit(dir / "r.jsonl", out.str());
    CHECK(load_results(dir / "r.jsonl") == std::vector<AnnotationResult>{r, g});
}

TEST_CASE("baseline annotator") {
    const Review allergy{"a",
                         "A friend ordered the soup, but the waiter didn't say it contained shrimp and he's allergic. "
                         "Before we even left the restaurant he was vomiting and having vile bowl movements as his face "
                         "turned completely red with hives.",
                         {}};
    CHECK(baseline_annotate(allergy, Task::gi_classification).raw_generation == "False");

    const Review gi{"b", "Food was horrible. We suffered with vomiting and diarrhea.", {}};
    CHECK(baseline_annotate(gi, Task::gi_classification).raw_generation == "True");
    CHECK(baseline_annotate({"c", "Lovely meal", {}}, Task::gi_classification).raw_generation == "False");

    const auto sym = baseline_annotate(gi, Task::symptom_extraction);
    CHECK(sym.raw_generation == "[vomiting, diarrhea]");
    CHECK(std::get<Items>(sym.parsed) == Items{"vomiting", "diarrhea"});

    const auto food = baseline_annotate({"d", "The fried prawns and two chicken wings", {}}, Task::food_extraction);
    CHECK(std::get<Items>(food.parsed) == Items{"prawns", "chicken", "wings"});
}

TEST_CASE("interpret_generation and attach_labels") {
    auto r = interpret_generation("x", Task::symptom_extraction, "[puking, got sick]");
    CHECK(r.parse_ok);
    std::vector<AnnotationResult> rs{r, interpret_generation("y", Task::gi_classification, "yes")};
    attach_labels(rs);
    CHECK(rs[0].labels == Items{"vomiting"});
    CHECK_FALSE(rs[1].labels);
    CHECK(std::get<bool>(rs[1].parsed));

    auto bad = interpret_generation("z", Task::food_extraction, "???");
    CHECK_FALSE(bad.parse_ok);
    CHECK(std::get<Items>(bad.parsed).empty());
}

TEST_CASE("cache keys separate their fields") {
    const auto k = cache_key(Task::gi_classification, "p", 0, "m", "id", "text");
    CHECK(k.size() == 64);
    CHECK(k == cache_key(Task::gi_classification, "p", 0, "m", "id", "text"));
    CHECK(k != cache_key(Task::gi_classification, "p", 1, "m", "id", "text"));
    CHECK(cache_key(Task::gi_classification, "p", 0, "m", "ab", "c") !=
          cache_key(Task::gi_classification, "p", 0, "m", "a", "bc"));
}

TEST_CASE("annotate_with keeps order, records and survives failures") {
    test_support::TempDir dir;
    std::vector<Review> reviews;
    for (int i = 0; i < 40; ++i)
        reviews.push_back({"r" + std::to_string(i), i % 7 == 3 ? "boom" : (i % 2 ? "felt sick" : "fine"), {}});
    CountingBackend backend;
    ResponseCache cache(dir / "cache.jsonl");
    const auto run = annotate_with(reviews, small_prompt(), backend, "m", &cache, 4);
    REQUIRE(run.results.size() == reviews.size());
    CHECK(run.failures == 6);
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        CHECK(run.results[i].review_id == reviews[i].id);
        CHECK(run.results[i].failed == (i % 7 == 3));
    }
    CHECK(cache.size() == 34);

    // replay reproduces the recorded generations and misses are fatal
    BackendConfig replay;
    replay.kind = BackendKind::replay;
    replay.model = "m";
    replay.cache_path = dir / "cache.jsonl";
    std::vector<Review> ok;
    for (const auto &r : reviews)
        if (r.text != "boom") ok.push_back(r);
    const auto again = annotate(ok, small_prompt(), replay);
    for (std::size_t i = 0, j = 0; i < reviews.size(); ++i)
        if (reviews[i].text != "boom") CHECK(again.results[j++] == run.results[i]);
    CHECK_THROWS_AS(annotate(reviews, small_prompt(), replay), ReplayMiss);
    CHECK_THROWS_AS(annotate(ok, small_prompt().with_shots(1), replay), ReplayMiss);

    // without --model the single recorded model is used
    replay.model.clear();
    CHECK(annotate(ok, small_prompt(), replay).results == again.results);
    annotate_with({ok.front()}, small_prompt(), backend, "other", &cache, 1);
    CHECK(ResponseCache(dir / "cache.jsonl").models() == std::set<std::string>{"m", "other"});
    CHECK_THROWS_AS(annotate(ok, small_prompt(), replay), ConfigError);
}

TEST_CASE("backend config validation") {
    BackendConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.effective_model() == "baseline");
    c.kind = BackendKind::remote;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.endpoint = "http://localhost:1";
    c.model = "m";
    CHECK_NOTHROW(c.validate());
    c.kind = BackendKind::replay;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_backend_kind("remote") == BackendKind::remote);
    CHECK_FALSE(parse_backend_kind("local"));
}
