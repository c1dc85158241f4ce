#include "gisurv/corpus.hpp"

#include "gisurv/error.hpp"
#include "gisurv/table_io.hpp"
#include "gisurv/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace gisurv {

using nlohmann::json;

namespace {

template <typename Label, typename Parse>
std::set<Label> parse_labels(const json &arr, const char *field, Parse parse, std::size_t line) {
    if (!arr.is_array()) throw DataError(fmt::format("gold.{} must be an array of strings", field), line);
    std::set<Label> out;
    for (const auto &item : arr) {
        if (!item.is_string()) throw DataError(fmt::format("gold.{} must be an array of strings", field), line);
        const auto &s = item.get_ref<const std::string &>();
        auto label = parse(s);
        if (!label) throw DataError(fmt::format("unknown {} label \"{}\"", field == std::string_view("symptoms") ? "symptom" : "food", s), line);
        out.insert(*label);
    }
    return out;
}

void check_gold(const GoldAnnotation &gold, std::size_t line) {
    if (gold.symptoms && !symptoms_exclusive(*gold.symptoms))
        throw DataError("exclusivity violated: \"general sickness\" cannot be combined with other symptom labels", line);
    if (!gold.gi && ((gold.symptoms && !gold.symptoms->empty()) || (gold.foods && !gold.foods->empty())))
        throw DataError("symptom/food labels are only allowed on GI-positive reviews", line);
}

}  // namespace

void validate_gold(const GoldAnnotation &gold) { check_gold(gold, 0); }

CorpusRecord parse_record(std::string_view json_line, std::size_t line) {
    json obj;
    try {
        obj = json::parse(json_line);
    } catch (const json::parse_error &e) {
        throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw DataError("record must be a JSON object", line);

    for (const auto &[key, _] : obj.items())
        if (key != "id" && key != "text" && key != "meta" && key != "gold")
            throw DataError("unknown field \"" + key + "\"", line);

    CorpusRecord rec;
    const auto id = obj.find("id");
    if (id == obj.end() || !id->is_string() || id->get_ref<const std::string &>().empty())
        throw DataError("\"id\" must be a non-empty string", line);
    rec.review.id = id->get<std::string>();

    const auto txt = obj.find("text");
    if (txt == obj.end() || !txt->is_string() || txt->get_ref<const std::string &>().empty())
        throw DataError("\"text\" must be a non-empty string", line);
    rec.review.text = txt->get<std::string>();

    if (const auto meta = obj.find("meta"); meta != obj.end()) {
        if (!meta->is_object()) throw DataError("\"meta\" must be an object of strings", line);
        for (const auto &[k, v] : meta->items()) {
            if (!v.is_string()) throw DataError("\"meta\" must be an object of strings", line);
            rec.review.meta.emplace(k, v.get<std::string>());
        }
    }

    if (const auto g = obj.find("gold"); g != obj.end()) {
        if (!g->is_object()) throw DataError("\"gold\" must be an object", line);
        for (const auto &[key, _] : g->items())
            if (key != "gi" && key != "symptoms" && key != "foods")
                throw DataError("unknown gold field \"" + key + "\"", line);
        GoldAnnotation gold;
        gold.review_id = rec.review.id;
        const auto gi = g->find("gi");
        if (gi == g->end() || !gi->is_boolean()) throw DataError("gold.gi must be a boolean", line);
        gold.gi = gi->get<bool>();
        if (const auto s = g->find("symptoms"); s != g->end())
            gold.symptoms = parse_labels<SymptomLabel>(*s, "symptoms", parse_symptom_label, line);
        if (const auto f = g->find("foods"); f != g->end())
            gold.foods = parse_labels<FoodLabel>(*f, "foods", parse_food_label, line);
        check_gold(gold, line);
        rec.gold = std::move(gold);
    }
    return rec;
}

std::string format_record(const CorpusRecord &record) {
    json obj;
    obj["id"] = record.review.id;
    obj["text"] = record.review.text;
    if (!record.review.meta.empty()) obj["meta"] = record.review.meta;
    if (record.gold) {
        json g;
        g["gi"] = record.gold->gi;
        if (record.gold->symptoms) {
            json arr = json::array();
            for (auto l : *record.gold->symptoms) arr.push_back(std::string(to_string(l)));
            g["symptoms"] = std::move(arr);
        }
        if (record.gold->foods) {
            json arr = json::array();
            for (auto l : *record.gold->foods) arr.push_back(std::string(to_string(l)));
            g["foods"] = std::move(arr);
        }
        obj["gold"] = std::move(g);
    }
    return obj.dump();
}

std::vector<CorpusRecord> parse_records(std::string_view content) {
    std::vector<CorpusRecord> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;
        auto rec = parse_record(line, line_no);
        if (!seen.insert(rec.review.id).second) throw DataError("duplicate id \"" + rec.review.id + "\"", line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<CorpusRecord> load_records(const std::filesystem::path &path) {
    std::string content;
    try {
        content = read_file(path);
    } catch (const ConfigError &e) {
        throw DataError(e.what());
    }
    try {
        return parse_records(content);
    } catch (const DataError &e) {
        throw e.within(path.string());
    }
}

Corpus load_corpus(const std::filesystem::path &path, bool with_gold) {
    auto records = load_records(path);
    Corpus corpus;
    corpus.reviews.reserve(records.size());
    if (with_gold) corpus.gold.emplace();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (with_gold) {
            if (!records[i].gold)
                throw DataError(path.string() + ": record \"" + records[i].review.id + "\" has no gold annotation");
            corpus.gold->push_back(std::move(*records[i].gold));
        }
        corpus.reviews.push_back(std::move(records[i].review));
    }
    return corpus;
}

void write_records(std::ostream &out, const std::vector<CorpusRecord> &records) {
    for (const auto &r : records) out << format_record(r) << '\n';
}

void write_records(const std::filesystem::path &path, const std::vector<CorpusRecord> &records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    write_records(out, records);
}

// ---------------------------------------------------------------------------

SplitSpec::SplitSpec(std::uint64_t seed, std::vector<std::pair<std::string, double>> fractions)
    : seed_(seed), fractions_(std::move(fractions)) {
    if (fractions_.empty()) throw ConfigError("split spec needs at least one split");
    std::set<std::string> names;
    double sum = 0;
    for (const auto &[name, f] : fractions_) {
        if (name.empty()) throw ConfigError("split name must be non-empty");
        if (!names.insert(name).second) throw ConfigError("duplicate split name \"" + name + "\"");
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError(fmt::format("split fraction for \"{}\" must lie in (0, 1]", name));
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(fmt::format("split fractions sum to {}, expected 1", sum));
}

SplitSpec SplitSpec::parse(std::uint64_t seed, std::string_view fractions) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto &row : parse_table(fractions, ',')) {
        for (const auto &field : row.fields) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw ConfigError("expected name=fraction, got \"" + field + "\"");
            const std::string name(text::trim(std::string_view(field).substr(0, eq)));
            const std::string value(text::trim(std::string_view(field).substr(eq + 1)));
            std::size_t used = 0;
            double f = 0;
            try {
                f = std::stod(value, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used == 0 || used != value.size()) throw ConfigError("bad fraction \"" + value + "\"");
            out.emplace_back(name, f);
        }
    }
    return SplitSpec(seed, std::move(out));
}

std::string SplitSpec::to_string() const {
    std::string s;
    for (const auto &[name, f] : fractions_) {
        if (!s.empty()) s += ',';
        s += fmt::format("{}={}", name, f);
    }
    return s;
}

std::vector<std::size_t> SplitSpec::sizes(std::size_t n) const {
    std::vector<std::size_t> out;
    std::size_t remaining = n;
    for (std::size_t i = 0; i + 1 < fractions_.size(); ++i) {
        auto k = static_cast<std::size_t>(std::floor(fractions_[i].second * static_cast<double>(n) + 0.5));
        k = std::min(k, remaining);
        out.push_back(k);
        remaining -= k;
    }
    out.push_back(remaining);
    return out;
}

namespace {

// Unbiased draw in [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would make splits differ across standard libraries.
std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

Splits split_corpus(const std::vector<Review> &reviews, const SplitSpec &spec) {
    if (reviews.empty()) throw DataError("cannot split an empty corpus");

    std::vector<const Review *> order;
    order.reserve(reviews.size());
    for (const auto &r : reviews) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const Review *a, const Review *b) { return a->id < b->id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i]->id == order[i - 1]->id) throw DataError("duplicate id \"" + order[i]->id + "\"");

    std::mt19937_64 rng(spec.seed());
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i + 1));
        std::swap(order[i], order[j]);
    }

    Splits out;
    const auto sizes = spec.sizes(reviews.size());
    std::size_t pos = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        std::vector<const Review *> part(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                         order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[s]));
        pos += sizes[s];
        std::sort(part.begin(), part.end(), [](const Review *a, const Review *b) { return a->id < b->id; });
        std::vector<Review> items;
        items.reserve(part.size());
        for (const auto *r : part) items.push_back(*r);
        out.emplace_back(spec.fractions()[s].first, std::move(items));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t word_count(std::string_view text) { return text::split_whitespace(text).size(); }

CorpusSummary summarize(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold, LabelView view) {
    std::unordered_map<std::string_view, const GoldAnnotation *> by_id;
    for (const auto &g : gold) by_id.emplace(g.review_id, &g);

    std::vector<std::string> taxonomy;
    switch (view) {
    case LabelView::gi: taxonomy = {"False", "True"}; break;
    case LabelView::symptoms: taxonomy = taxonomy_for(Task::symptom_extraction); break;
    case LabelView::foods: taxonomy = taxonomy_for(Task::food_extraction); break;
    }
    std::vector<std::size_t> counts(taxonomy.size(), 0);
    auto bump = [&](std::string_view label) {
        for (std::size_t i = 0; i < taxonomy.size(); ++i)
            if (taxonomy[i] == label) ++counts[i];
    };

    std::vector<std::size_t> lengths;
    for (const auto &r : reviews) {
        const auto it = by_id.find(r.id);
        const GoldAnnotation *g = it == by_id.end() ? nullptr : it->second;
        if (view == LabelView::symptoms && !gold.empty() && !(g && g->symptoms)) continue;
        if (view == LabelView::foods && !gold.empty() && !(g && g->foods)) continue;
        lengths.push_back(word_count(r.text));
        if (!g) continue;
        switch (view) {
        case LabelView::gi: bump(g->gi ? "True" : "False"); break;
        case LabelView::symptoms:
            for (auto l : *g->symptoms) bump(to_string(l));
            break;
        case LabelView::foods:
            for (auto l : *g->foods) bump(to_string(l));
            break;
        }
    }

    CorpusSummary s;
    s.total_samples = lengths.size();
    if (!lengths.empty()) {
        std::sort(lengths.begin(), lengths.end());
        s.min_words = lengths.front();
        s.max_words = lengths.back();
        double total = 0;
        for (auto l : lengths) total += static_cast<double>(l);
        s.mean_words = total / static_cast<double>(lengths.size());
        const std::size_t mid = lengths.size() / 2;
        s.median_words = lengths.size() % 2 == 1 ? static_cast<double>(lengths[mid])
                                                 : (static_cast<double>(lengths[mid - 1]) + static_cast<double>(lengths[mid])) / 2.0;
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < taxonomy.size(); ++i)
        if (counts[i] > 0) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    for (auto i : idx) s.label_counts.emplace_back(taxonomy[i], counts[i]);
    s.unique_labels = idx.size();
    return s;
}

std::string format_summary(const CorpusSummary &s) {
    std::vector<std::pair<std::string, std::string>> rows{
        {"Total Samples", std::to_string(s.total_samples)},
        {"Unique Labels", std::to_string(s.unique_labels)},
        {"Mean Text Length (words)", fmt::format("{:.0f}", s.mean_words)},
        {"Median Text Length (words)", fmt::format("{:.0f}", s.median_words)},
        {"Min Text Length (words)", std::to_string(s.min_words)},
        {"Max Text Length (words)", std::to_string(s.max_words)},
    };
    for (const auto &[label, n] : s.label_counts) rows.emplace_back("Label: " + label, std::to_string(n));

    std::size_t w0 = std::string_view("Statistic").size();
    std::size_t w1 = std::string_view("Value").size();
    for (const auto &[a, b] : rows) {
        w0 = std::max(w0, a.size());
        w1 = std::max(w1, b.size());
    }
    std::string out = fmt::format("{:>{}}  {:>{}}\n", "Statistic", w0, "Value", w1);
    for (const auto &[a, b] : rows) out += fmt::format("{:>{}}  {:>{}}\n", a, w0, b, w1);
    return out;
}

}  // namespace gisurv
