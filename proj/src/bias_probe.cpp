#include "gisurv/bias_probe.hpp"

#include "gisurv/embedded_data.hpp"
#include "gisurv/error.hpp"
#include "gisurv/gi_filter.hpp"
#include "gisurv/table_io.hpp"
#include "gisurv/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace gisurv {

using nlohmann::json;

namespace {

constexpr auto split_mode = text::Apostrophes::split;

bool ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

// Non-overlapping matches, leftmost first and longest at each start.
std::vector<MatchSpan> select_longest(std::vector<MatchSpan> spans) {
    std::sort(spans.begin(), spans.end(), [](const MatchSpan &a, const MatchSpan &b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
    });
    std::vector<MatchSpan> out;
    std::size_t pos = 0;
    for (auto &s : spans) {
        if (s.begin < pos) continue;
        pos = s.end;
        out.push_back(std::move(s));
    }
    return out;
}

// Writes `target` in place of the source span. When both sides have the
// same number of words the source's separators are kept.
std::string rewrite(std::string_view text, const MatchSpan &span, const std::string &target) {
    const std::string_view source = text.substr(span.begin, span.end - span.begin);
    const auto src_tokens = text::tokenize(source, split_mode);
    const auto tgt_words = text::split_whitespace(target);
    std::string out;
    if (src_tokens.size() == tgt_words.size() && src_tokens.size() > 1) {
        for (std::size_t i = 0; i < tgt_words.size(); ++i) {
            out += tgt_words[i];
            if (i + 1 < src_tokens.size()) out += source.substr(src_tokens[i].end, src_tokens[i + 1].begin - src_tokens[i].end);
        }
    } else {
        out = target;
    }
    return ascii_upper(source.front()) ? capitalize(std::move(out)) : out;
}

struct Variant {
    Review review;
    std::string source_id;
    bool doubly = false;
};

}  // namespace

TermMap::TermMap(std::vector<std::pair<std::string, std::string>> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw DataError("term map is empty");
    std::unordered_set<std::string> seen;
    for (auto &[a, b] : pairs_) {
        a = text::collapse_whitespace(text::to_lower(a));
        b = text::collapse_whitespace(text::to_lower(b));
        for (const auto *t : {&a, &b}) {
            if (text::tokenize(*t, split_mode).empty()) throw DataError("term \"" + *t + "\" contains no word characters");
        }
        if (a == b) throw DataError("term \"" + a + "\" is mapped to itself");
        for (const auto *t : {&a, &b})
            if (!seen.insert(*t).second) throw DataError("term \"" + *t + "\" appears in more than one pair");
    }
}

TermMap TermMap::parse(std::string_view content) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (auto &row : parse_table(content)) {
        if (row.fields.size() != 2) throw DataError("expected two tab-separated terms", row.line);
        try {
            pairs.emplace_back(std::move(row.fields[0]), std::move(row.fields[1]));
            TermMap check({pairs.back()});
        } catch (const DataError &e) {
            throw DataError(e.what(), row.line);
        }
    }
    return TermMap(std::move(pairs));
}

TermMap TermMap::load(const std::filesystem::path &path) { return parse(read_file(path)); }

const TermMap &TermMap::gender() {
    static const TermMap map = parse(data::gender_map());
    return map;
}

const TermMap &TermMap::marital() {
    static const TermMap map = parse(data::marital_map());
    return map;
}

std::vector<std::string> TermMap::side_a() const {
    std::vector<std::string> out;
    for (const auto &p : pairs_) out.push_back(p.first);
    return out;
}

std::vector<std::string> TermMap::side_b() const {
    std::vector<std::string> out;
    for (const auto &p : pairs_) out.push_back(p.second);
    return out;
}

std::string apply_substitution(std::string_view text, const TermMap &map, Direction direction) {
    const bool forward = direction == Direction::a_to_b;
    std::unordered_map<std::string, const std::string *> target;
    for (const auto &[a, b] : map.pairs()) target.emplace(forward ? a : b, forward ? &b : &a);
    const PhraseMatcher matcher(forward ? map.side_a() : map.side_b(), split_mode);

    std::string out;
    std::size_t pos = 0;
    for (const auto &span : select_longest(matcher.find_all(text))) {
        out.append(text.substr(pos, span.begin - pos));
        out += rewrite(text, span, *target.at(span.term));
        pos = span.end;
    }
    out.append(text.substr(pos));
    return out;
}

ExclusiveSelection select_exclusive(const std::vector<Review> &reviews, const TermMap &map) {
    const PhraseMatcher a(map.side_a(), split_mode);
    const PhraseMatcher b(map.side_b(), split_mode);
    ExclusiveSelection sel;
    for (const auto &r : reviews) {
        const auto tokens = text::tokenize(r.text, split_mode);
        const bool has_a = !a.find_all(r.text, tokens).empty();
        const bool has_b = !b.find_all(r.text, tokens).empty();
        if (has_a && !has_b)
            sel.side_a.push_back(r);
        else if (has_b && !has_a)
            sel.side_b.push_back(r);
        else
            sel.excluded.push_back(r);
    }
    return sel;
}

std::string_view to_string(TestKind kind) { return kind == TestKind::pairwise ? "pairwise" : "vs-pooled"; }

ProportionTest two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("two_proportion_z_test: sample sizes must be at least 1");
    if (x1 > n1 || x2 > n2) throw std::invalid_argument("two_proportion_z_test: successes exceed trials");
    ProportionTest t{TestKind::pairwise, "", "", x1, n1, x2, n2, 0.0, 1.0};
    const double n1d = static_cast<double>(n1);
    const double n2d = static_cast<double>(n2);
    const double pooled = static_cast<double>(x1 + x2) / (n1d + n2d);
    if (x1 + x2 == 0 || x1 + x2 == n1 + n2) return t;
    // Exact integer numerator, so equal proportions give z = 0 exactly.
    const double diff = (static_cast<double>(x1) * n2d - static_cast<double>(x2) * n1d) / (n1d * n2d);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1d + 1.0 / n2d));
    t.z = diff / se;
    t.p = std::min(1.0, std::erfc(std::fabs(t.z) / std::sqrt(2.0)));
    return t;
}

ProportionTest one_proportion_z_test(std::size_t x, std::size_t n, double p0) {
    if (n == 0) throw std::invalid_argument("one_proportion_z_test: sample size must be at least 1");
    if (x > n) throw std::invalid_argument("one_proportion_z_test: successes exceed trials");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("one_proportion_z_test: p0 must lie in [0, 1]");
    ProportionTest t{TestKind::vs_pooled, "", "pooled", x, n, 0, 0, 0.0, 1.0};
    if (p0 == 0.0 || p0 == 1.0) return t;
    const double nd = static_cast<double>(n);
    t.z = (static_cast<double>(x) / nd - p0) / std::sqrt(p0 * (1.0 - p0) / nd);
    t.p = std::min(1.0, std::erfc(std::fabs(t.z) / std::sqrt(2.0)));
    return t;
}

StratumReport score_stratum(std::string name, const std::vector<AnnotationResult> &results,
                            const std::vector<GoldAnnotation> &gold, MacroPolicy policy) {
    if (results.empty()) throw DataError("stratum \"" + name + "\" is empty");
    const auto rep = score_binary(results, gold, policy);
    std::unordered_map<std::string_view, bool> truth;
    for (const auto &g : gold) truth.emplace(g.review_id, g.gi);
    StratumReport s;
    s.name = std::move(name);
    s.micro_f1 = rep.micro_f1();
    s.macro_f1 = rep.macro_f1();
    s.n = results.size();
    for (const auto &r : results)
        if (std::get<bool>(r.parsed) == truth.at(r.review_id)) ++s.n_correct;
    return s;
}

namespace {

void add_tests(BiasReport &report, bool vs_pooled) {
    const auto &st = report.strata;
    for (std::size_t i = 0; i < st.size(); ++i)
        for (std::size_t j = i + 1; j < st.size(); ++j) {
            auto t = two_proportion_z_test(st[i].n_correct, st[i].n, st[j].n_correct, st[j].n);
            t.group1 = st[i].name;
            t.group2 = st[j].name;
            report.tests.push_back(std::move(t));
        }
    if (!vs_pooled || st.size() < 2) return;
    std::size_t x = 0;
    std::size_t n = 0;
    for (const auto &s : st) {
        x += s.n_correct;
        n += s.n;
    }
    const double pooled = static_cast<double>(x) / static_cast<double>(n);
    for (const auto &s : st) {
        auto t = one_proportion_z_test(s.n_correct, s.n, pooled);
        t.group1 = s.name;
        t.x2 = x;
        t.n2 = n;
        report.tests.push_back(std::move(t));
    }
}

std::string suffix(Direction d) { return d == Direction::a_to_b ? "#to_b" : "#to_a"; }

}  // namespace

BiasReport run_substitution_experiment(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                                       const TermMap &map, const PromptSpec &prompt, const BackendConfig &backend,
                                       const SubstitutionOptions &options, const AnnotationTables &tables) {
    if (prompt.task() != Task::gi_classification)
        throw ConfigError("substitution experiments need a gi_classification prompt");
    std::unordered_map<std::string_view, const GoldAnnotation *> gold_by_id;
    for (const auto &g : gold) gold_by_id.emplace(g.review_id, &g);

    const auto sel = select_exclusive(reviews, map);
    for (const auto *side : {&sel.side_a, &sel.side_b})
        for (const auto &r : *side)
            if (!gold_by_id.contains(r.id)) throw DataError("no gold annotation for review \"" + r.id + "\"");

    // Pre-map variants: each exclusive review rewritten to the other side of
    // the pre-map. Reviews that are not exclusive under it get none.
    std::unordered_map<std::string, Review> pre_variant;
    if (options.pre_map) {
        std::vector<Review> selected(sel.side_a);
        selected.insert(selected.end(), sel.side_b.begin(), sel.side_b.end());
        const auto pre = select_exclusive(selected, *options.pre_map);
        for (const auto &[side, dir] : {std::pair{&pre.side_a, Direction::a_to_b}, std::pair{&pre.side_b, Direction::b_to_a}})
            for (const auto &r : *side) {
                Review v = r;
                v.id = r.id + "#pre";
                v.text = apply_substitution(r.text, *options.pre_map, dir);
                pre_variant.emplace(r.id, std::move(v));
            }
    }

    auto build = [&](const std::vector<Review> &own, const std::vector<Review> &other, Direction to_own) {
        std::vector<Variant> unadjusted;
        std::vector<Variant> synthetic;
        for (const auto &r : own) {
            unadjusted.push_back({r, r.id, false});
            if (const auto it = pre_variant.find(r.id); it != pre_variant.end()) synthetic.push_back({it->second, r.id, false});
        }
        for (const auto &r : other) {
            Review v = r;
            v.id = r.id + suffix(to_own);
            v.text = apply_substitution(r.text, map, to_own);
            synthetic.push_back({std::move(v), r.id, false});
            if (const auto it = pre_variant.find(r.id); it != pre_variant.end()) {
                Review w = it->second;
                w.id = it->second.id + suffix(to_own);
                w.text = apply_substitution(it->second.text, map, to_own);
                synthetic.push_back({std::move(w), r.id, true});
            }
        }
        return std::pair{std::move(unadjusted), std::move(synthetic)};
    };
    auto [a_unadj, a_syn] = build(sel.side_a, sel.side_b, Direction::b_to_a);
    auto [b_unadj, b_syn] = build(sel.side_b, sel.side_a, Direction::a_to_b);

    const std::vector<std::pair<std::string, const std::vector<Variant> *>> strata{
        {options.side_a_name + " unadjusted", &a_unadj},
        {options.side_a_name + " synthetic", &a_syn},
        {options.side_b_name + " unadjusted", &b_unadj},
        {options.side_b_name + " synthetic", &b_syn},
    };

    std::vector<Review> pool;
    std::vector<GoldAnnotation> pool_gold;
    for (const auto &[name, variants] : strata)
        for (const auto &v : *variants) {
            pool.push_back(v.review);
            GoldAnnotation g = *gold_by_id.at(v.source_id);
            g.review_id = v.review.id;
            pool_gold.push_back(std::move(g));
        }
    auto run = annotate(pool, prompt, backend, tables);
    std::unordered_map<std::string_view, const AnnotationResult *> result_by_id;
    for (const auto &r : run.results) result_by_id.emplace(r.review_id, &r);

    BiasReport report;
    report.experiment = options.pre_map ? "substitution+pre-map" : "substitution";
    report.map_pairs = map.pairs();
    if (options.pre_map) report.pre_map_pairs = options.pre_map->pairs();
    for (const auto &[name, variants] : strata) {
        if (variants->empty()) {
            report.empty_strata.push_back(name);
            continue;
        }
        std::vector<AnnotationResult> results;
        std::size_t doubly = 0;
        for (const auto &v : *variants) {
            results.push_back(*result_by_id.at(v.review.id));
            if (v.doubly) ++doubly;
        }
        auto s = score_stratum(name, results, pool_gold, options.policy);
        s.n_doubly_synthetic = doubly;
        report.strata.push_back(std::move(s));
    }
    add_tests(report, true);
    return report;
}

BiasReport stratify_by_meta(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                            const std::vector<AnnotationResult> &results, const std::string &key, MacroPolicy policy) {
    std::unordered_map<std::string_view, const AnnotationResult *> by_id;
    for (const auto &r : results) by_id.emplace(r.review_id, &r);
    std::map<std::string, std::vector<AnnotationResult>> groups;
    for (const auto &r : reviews) {
        const auto m = r.meta.find(key);
        if (m == r.meta.end()) throw DataError("review \"" + r.id + "\" has no meta field \"" + key + "\"");
        const auto it = by_id.find(r.id);
        if (it == by_id.end()) throw DataError("no result for review \"" + r.id + "\"");
        groups[m->second].push_back(*it->second);
    }
    BiasReport report;
    report.experiment = "meta:" + key;
    for (const auto &[value, rs] : groups) report.strata.push_back(score_stratum(value, rs, gold, policy));
    add_tests(report, false);
    return report;
}

std::string format_bias_text(const BiasReport &report) {
    std::size_t w = std::string_view("Data Grouping").size();
    for (const auto &s : report.strata) w = std::max(w, s.name.size());
    std::string out = fmt::format("Experiment: {}\n", report.experiment);
    out += fmt::format("{:<{}}  {:>8}  {:>8}  {:>11}\n", "Data Grouping", w, "Micro-F1", "Macro-F1", "Sample Size");
    for (const auto &s : report.strata)
        out += fmt::format("{:<{}}  {:>8.3f}  {:>8.3f}  {:>11}\n", s.name, w, s.micro_f1, s.macro_f1, s.n);
    for (const auto &s : report.strata)
        if (s.n_doubly_synthetic > 0)
            out += fmt::format("note: {} holds {} doubly-synthetic reviews (gold labels propagated unchanged)\n", s.name,
                               s.n_doubly_synthetic);
    for (const auto &name : report.empty_strata) out += fmt::format("note: {} is empty; its tests are skipped\n", name);
    if (report.tests.empty()) return out;

    std::size_t g1 = std::string_view("Group 1").size();
    std::size_t g2 = std::string_view("Group 2").size();
    for (const auto &t : report.tests) {
        g1 = std::max(g1, t.group1.size());
        g2 = std::max(g2, t.group2.size());
    }
    out += "\nProportion of correct classifications\n";
    out += fmt::format("{:<9}  {:<{}}  {:<{}}  {:>8}  {:>8}\n", "Test", "Group 1", g1, "Group 2", g2, "z", "p-value");
    for (const auto &t : report.tests)
        out += fmt::format("{:<9}  {:<{}}  {:<{}}  {:>8.4f}  {:>8.4f}\n", to_string(t.kind), t.group1, g1, t.group2, g2,
                           t.z, t.p);
    return out;
}

std::string format_bias_json(const BiasReport &report) {
    auto pairs = [](const auto &ps) {
        json arr = json::array();
        for (const auto &[a, b] : ps) arr.push_back({a, b});
        return arr;
    };
    json strata = json::array();
    for (const auto &s : report.strata)
        strata.push_back({{"name", s.name},
                          {"micro_f1", s.micro_f1},
                          {"macro_f1", s.macro_f1},
                          {"sample_size", s.n},
                          {"n_correct", s.n_correct},
                          {"n_doubly_synthetic", s.n_doubly_synthetic},
                          {"doubly_synthetic", s.n_doubly_synthetic > 0}});
    json tests = json::array();
    for (const auto &t : report.tests)
        tests.push_back({{"kind", std::string(to_string(t.kind))},
                         {"groups", {t.group1, t.group2}},
                         {"x1", t.x1},
                         {"n1", t.n1},
                         {"x2", t.x2},
                         {"n2", t.n2},
                         {"z", t.z},
                         {"p", t.p}});
    json obj{{"experiment", report.experiment},
             {"map", pairs(report.map_pairs)},
             {"strata", std::move(strata)},
             {"empty_strata", report.empty_strata},
             {"tests", std::move(tests)}};
    if (!report.pre_map_pairs.empty()) obj["pre_map"] = pairs(report.pre_map_pairs);
    return obj.dump(2) + "\n";
}

}  // namespace gisurv
