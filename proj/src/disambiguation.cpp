#include "gisurv/disambiguation.hpp"

#include "gisurv/embedded_data.hpp"
#include "gisurv/error.hpp"
#include "gisurv/table_io.hpp"
#include "gisurv/text.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>
#include <utility>

namespace gisurv {

namespace {

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }
bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> words_of(std::string_view s) {
    std::vector<std::string> out;
    for (auto &t : text::tokenize(s))
        if (t.norm != "&") out.push_back(std::move(t.norm));
    return out;
}

}  // namespace

StemTable::StemTable(std::map<SymptomLabel, std::vector<StemFragment>> fragments) : fragments_(std::move(fragments)) {
    if (auto it = fragments_.find(SymptomLabel::general_sickness); it != fragments_.end() && !it->second.empty())
        throw DataError("\"general sickness\" is the fallback label and cannot have fragments");
    fragments_.erase(SymptomLabel::general_sickness);
    for (auto label : all_symptom_labels) {
        if (label == SymptomLabel::general_sickness) continue;
        if (!fragments_.contains(label) || fragments_.at(label).empty())
            throw DataError("stem table has no fragment for \"" + std::string(to_string(label)) + "\"");
    }
}

StemTable StemTable::parse(std::string_view content) {
    std::map<SymptomLabel, std::vector<StemFragment>> fragments;
    for (const auto &row : parse_table(content)) {
        if (row.fields.size() != 2) throw DataError("expected <label> TAB <fragment>", row.line);
        const auto label = parse_symptom_label(text::to_lower(row.fields[0]));
        if (!label) throw DataError("unknown symptom label \"" + row.fields[0] + "\"", row.line);
        if (*label == SymptomLabel::general_sickness)
            throw DataError("\"general sickness\" is the fallback label and cannot have fragments", row.line);

        std::string frag = text::collapse_whitespace(text::to_lower(row.fields[1]));
        StemFragment f{StemFragment::Kind::prefix, {}, {}};
        if (starts_with(frag, "=")) {
            f.kind = StemFragment::Kind::exact;
            frag.erase(0, 1);
        } else if (frag.find(' ') != std::string::npos) {
            f.kind = StemFragment::Kind::phrase;
        }
        f.words = words_of(frag);
        if (f.words.empty()) throw DataError("empty fragment", row.line);
        if (f.kind != StemFragment::Kind::phrase && f.words.size() != 1)
            throw DataError("fragment \"" + frag + "\" must be a single word", row.line);
        f.text = std::move(frag);
        fragments[*label].push_back(std::move(f));
    }
    return StemTable(std::move(fragments));
}

StemTable StemTable::load(const std::filesystem::path &path) { return parse(read_file(path)); }

const StemTable &StemTable::defaults() {
    static const StemTable table = parse(data::stems());
    return table;
}

SymptomSet StemTable::match(std::string_view mention) const {
    const auto words = words_of(mention);
    SymptomSet out;
    for (const auto &[label, frags] : fragments_) {
        const bool hit = std::any_of(frags.begin(), frags.end(), [&](const StemFragment &f) {
            switch (f.kind) {
            case StemFragment::Kind::prefix:
                return std::any_of(words.begin(), words.end(), [&](const std::string &w) { return starts_with(w, f.words[0]); });
            case StemFragment::Kind::exact:
                return std::find(words.begin(), words.end(), f.words[0]) != words.end();
            case StemFragment::Kind::phrase:
                return std::search(words.begin(), words.end(), f.words.begin(), f.words.end()) != words.end();
            }
            return false;
        });
        if (hit) out.insert(label);
    }
    return out;
}

SymptomSet disambiguate_symptoms(const std::vector<std::string> &mentions, const StemTable &table) {
    SymptomSet out;
    for (const auto &m : mentions) {
        const auto labels = table.match(m);
        out.insert(labels.begin(), labels.end());
    }
    if (out.empty() && !mentions.empty()) out.insert(SymptomLabel::general_sickness);
    return out;
}

// ---------------------------------------------------------------------------

void FoodLookupTable::add(std::string term, FoodLabel label, std::string provenance) {
    if (term.empty()) throw DataError("empty food term");
    if (term != text::to_lower(term)) throw DataError("food term \"" + term + "\" must be lowercase");
    if (term.find_first_of("()") != std::string::npos)
        throw DataError("food term \"" + term + "\" must not contain clarifiers");
    if (term != text::collapse_whitespace(term))
        throw DataError("food term \"" + term + "\" has irregular whitespace");
    const auto [it, inserted] = entries_.emplace(std::move(term), FoodEntry{label, std::move(provenance)});
    if (!inserted) throw DataError("duplicate food term \"" + it->first + "\"");
}

FoodLookupTable FoodLookupTable::parse(std::string_view content) {
    FoodLookupTable table;
    for (const auto &row : parse_table(content)) {
        if (row.fields.size() < 2 || row.fields.size() > 3)
            throw DataError("expected <term> TAB <label> [TAB <provenance>]", row.line);
        const auto label = parse_food_label(row.fields[1]);
        if (!label) throw DataError("unknown food label \"" + row.fields[1] + "\"", row.line);
        try {
            table.add(row.fields[0], *label, row.fields.size() == 3 ? row.fields[2] : "supplementary");
        } catch (const DataError &e) {
            throw DataError(e.what(), row.line);
        }
    }
    return table;
}

FoodLookupTable FoodLookupTable::load(const std::filesystem::path &path) { return parse(read_file(path)); }

const FoodLookupTable &FoodLookupTable::defaults() {
    static const FoodLookupTable table = parse(data::food_lookup());
    return table;
}

const FoodEntry *FoodLookupTable::find(std::string_view term) const {
    const auto it = entries_.find(term);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string singularize(std::string_view word) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 22> irregular{{
        {"leaves", "leaf"},       {"loaves", "loaf"},         {"halves", "half"},       {"knives", "knife"},
        {"potatoes", "potato"},   {"tomatoes", "tomato"},     {"mangoes", "mango"},     {"cheeses", "cheese"},
        {"cookies", "cookie"},    {"brownies", "brownie"},    {"pies", "pie"},          {"smoothies", "smoothie"},
        {"veggies", "veggie"},    {"calories", "calorie"},    {"children", "child"},    {"geese", "goose"},
        {"mice", "mouse"},        {"teeth", "tooth"},         {"oxen", "ox"},           {"sauces", "sauce"},
        {"quiches", "quiche"},    {"nachos", "nacho"},
    }};
    for (const auto &[plural, singular] : irregular)
        if (word == plural) return std::string(singular);

    if (word.size() <= 3 || !ends_with(word, "s")) return std::string(word);
    if (ends_with(word, "ss") || ends_with(word, "us") || ends_with(word, "is")) return std::string(word);
    if (ends_with(word, "ies")) return std::string(word.substr(0, word.size() - 3)) + "y";
    for (std::string_view suffix : {"ses", "xes", "zes", "ches", "shes"})
        if (ends_with(word, suffix)) return std::string(word.substr(0, word.size() - 2));
    return std::string(word.substr(0, word.size() - 1));
}

std::string strip_clarifiers(std::string_view s) {
    std::string out;
    int depth = 0;
    for (char c : s) {
        if (c == '(') {
            ++depth;
            out.push_back(' ');
        } else if (c == ')' && depth > 0) {
            --depth;
        } else if (depth == 0) {
            out.push_back(c);
        }
    }
    return text::collapse_whitespace(out);
}

std::vector<std::string> normalize_food_term(std::string_view term) {
    const std::string cleaned = strip_clarifiers(text::to_lower(term));
    const auto tokens = text::tokenize(cleaned);
    std::vector<std::string> out;
    if (tokens.empty()) return out;

    std::unordered_set<std::string> seen;
    auto emit = [&](std::string s) {
        if (!s.empty() && seen.insert(s).second) out.push_back(std::move(s));
    };
    emit(cleaned.substr(tokens.front().begin, tokens.back().end - tokens.front().begin));
    for (const auto &t : tokens) {
        if (t.norm == "&") continue;
        emit(t.norm);
        emit(singularize(t.norm));
    }
    return out;
}

FoodSet disambiguate_foods(const std::vector<std::string> &spans, const FoodLookupTable &table) {
    FoodSet out;
    for (const auto &span : spans)
        for (const auto &candidate : normalize_food_term(span))
            if (const auto *e = table.find(candidate)) out.insert(e->label);
    return out;
}

}  // namespace gisurv
