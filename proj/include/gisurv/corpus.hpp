#pragma once

#include "gisurv/taxonomy.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gisurv {

struct Review {
    std::string id;
    std::string text;
    std::map<std::string, std::string> meta;

    friend bool operator==(const Review &, const Review &) = default;
};

/// Expert labels for one review. Absent symptom/food sets mean the review
/// was not annotated for that task, which is distinct from an empty set.
struct GoldAnnotation {
    std::string review_id;
    bool gi = false;
    std::optional<SymptomSet> symptoms;
    std::optional<FoodSet> foods;

    friend bool operator==(const GoldAnnotation &, const GoldAnnotation &) = default;
};

/// A review together with its gold annotation, if the file carried one.
struct CorpusRecord {
    Review review;
    std::optional<GoldAnnotation> gold;

    friend bool operator==(const CorpusRecord &, const CorpusRecord &) = default;
};

struct Corpus {
    std::vector<Review> reviews;
    /// Aligned 1:1 with `reviews` when loaded with gold.
    std::optional<std::vector<GoldAnnotation>> gold;
};

/// Parses one JSON Lines record. `line` is used only for error messages.
CorpusRecord parse_record(std::string_view json_line, std::size_t line = 0);

/// Serializes one record as a single JSON line (no trailing newline).
/// Keys are emitted in sorted order, labels in taxonomy order.
std::string format_record(const CorpusRecord &record);

/// Reads every record of a JSON Lines corpus. Rejects malformed lines,
/// duplicate ids, unknown labels and exclusivity violations (DataError
/// with the offending line number).
std::vector<CorpusRecord> load_records(const std::filesystem::path &path);
std::vector<CorpusRecord> parse_records(std::string_view content);

/// With `with_gold`, every record must carry a gold object.
Corpus load_corpus(const std::filesystem::path &path, bool with_gold);

void write_records(std::ostream &out, const std::vector<CorpusRecord> &records);
void write_records(const std::filesystem::path &path, const std::vector<CorpusRecord> &records);

/// Checks a gold annotation against the taxonomies and the exclusivity
/// rule. Throws DataError.
void validate_gold(const GoldAnnotation &gold);

// ---------------------------------------------------------------------------
// Splitting

/// Ordered (name, fraction) pairs. Fractions lie in (0, 1] and sum to 1
/// within 1e-9; names are unique and non-empty.
class SplitSpec {
public:
    SplitSpec(std::uint64_t seed, std::vector<std::pair<std::string, double>> fractions);

    /// Parses "validation=0.2,test=0.8".
    static SplitSpec parse(std::uint64_t seed, std::string_view fractions);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::pair<std::string, double>> &fractions() const noexcept { return fractions_; }
    std::string to_string() const;

    /// Split sizes for a corpus of n items: round-half-up per split, the
    /// last split takes the remainder.
    std::vector<std::size_t> sizes(std::size_t n) const;

private:
    std::uint64_t seed_;
    std::vector<std::pair<std::string, double>> fractions_;
};

using Splits = std::vector<std::pair<std::string, std::vector<Review>>>;

/// Deterministic partition. Ids are sorted, shuffled with a seeded
/// mt19937_64 Fisher-Yates pass and cut by SplitSpec::sizes; each split is
/// returned sorted by id. Throws DataError on an empty corpus.
Splits split_corpus(const std::vector<Review> &reviews, const SplitSpec &spec);

// ---------------------------------------------------------------------------
// Summary statistics

enum class LabelView { gi, symptoms, foods };

struct CorpusSummary {
    std::size_t total_samples = 0;
    std::size_t unique_labels = 0;
    double mean_words = 0;
    double median_words = 0;
    std::size_t min_words = 0;
    std::size_t max_words = 0;
    /// Labels with a non-zero count, by descending count then taxonomy order.
    std::vector<std::pair<std::string, std::size_t>> label_counts;
};

/// Number of whitespace-delimited words.
std::size_t word_count(std::string_view text);

/// Length statistics and label counts. With a label view other than `gi`,
/// only reviews annotated for that task are counted. `gold` may be empty,
/// in which case no labels are counted.
CorpusSummary summarize(const std::vector<Review> &reviews, const std::vector<GoldAnnotation> &gold,
                        LabelView view = LabelView::gi);

/// "Statistic / Value" table in the layout of the descriptive-statistics tables.
std::string format_summary(const CorpusSummary &summary);

}  // namespace gisurv
