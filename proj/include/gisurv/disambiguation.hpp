#pragma once

#include "gisurv/taxonomy.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gisurv {

/// A symptom match fragment.
struct StemFragment {
    enum class Kind {
        prefix,  // any word of the mention starts with it ("vom")
        exact,   // a word of the mention equals it ("run")
        phrase,  // consecutive whole words ("upset stomach")
    };
    Kind kind;
    std::string text;                // as written, without the '=' marker
    std::vector<std::string> words;  // phrase words (single entry otherwise)
};

/// Fragments per symptom label. Every label except `general sickness` has at
/// least one fragment; `general sickness` has none because it is the
/// fallback assigned when nothing matches.
class StemTable {
public:
    explicit StemTable(std::map<SymptomLabel, std::vector<StemFragment>> fragments);

    /// "<label> TAB <fragment>" lines. A fragment with a space is a phrase,
    /// one starting with '=' is an exact word, anything else a word prefix.
    static StemTable parse(std::string_view content);
    static StemTable load(const std::filesystem::path &path);
    static const StemTable &defaults();

    const std::map<SymptomLabel, std::vector<StemFragment>> &fragments() const noexcept { return fragments_; }

    /// Labels whose fragments match a single mention (no fallback applied).
    SymptomSet match(std::string_view mention) const;

private:
    std::map<SymptomLabel, std::vector<StemFragment>> fragments_;
};

/// Maps raw symptom mentions to labels. Empty input gives the empty set;
/// non-empty input with no fragment match gives {general sickness}.
SymptomSet disambiguate_symptoms(const std::vector<std::string> &mentions,
                                 const StemTable &table = StemTable::defaults());

struct FoodEntry {
    FoodLabel label;
    std::string provenance;
};

/// Exact-match lookup from normalized food terms to labels.
class FoodLookupTable {
public:
    FoodLookupTable() = default;

    /// Throws DataError on a key that is not lowercase and clarifier-free,
    /// or on a duplicate key.
    void add(std::string term, FoodLabel label, std::string provenance);

    /// "<term> TAB <label> [TAB <provenance>]" lines.
    static FoodLookupTable parse(std::string_view content);
    static FoodLookupTable load(const std::filesystem::path &path);
    static const FoodLookupTable &defaults();

    const FoodEntry *find(std::string_view term) const;
    const std::map<std::string, FoodEntry, std::less<>> &entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, FoodEntry, std::less<>> entries_;
};

/// Rule-based singular form of one lowercase word.
std::string singularize(std::string_view word);

/// Removes every parenthesized group (nesting aware) and collapses whitespace.
std::string strip_clarifiers(std::string_view s);

/// Lookup candidates for one extracted food span: the full clarifier-free
/// phrase first, then each word left to right followed by its singular.
/// Duplicates are dropped, keeping the first occurrence.
std::vector<std::string> normalize_food_term(std::string_view term);

/// Union of the labels of every candidate of every span found in the table.
FoodSet disambiguate_foods(const std::vector<std::string> &spans,
                           const FoodLookupTable &table = FoodLookupTable::defaults());

}  // namespace gisurv
