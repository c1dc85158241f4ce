#pragma once

#include "gisurv/corpus.hpp"
#include "gisurv/text.hpp"

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gisurv {

/// Ordered, duplicate-free list of lowercase search terms. Terms may span
/// several words ("threw up", "stomach bug").
class KeywordList {
public:
    /// Throws DataError on an empty list, a duplicate, or a term with no
    /// word tokens. Terms are lowercased.
    explicit KeywordList(std::vector<std::string> terms);

    /// One term per line, '#' comments allowed.
    static KeywordList parse(std::string_view content);
    static KeywordList load(const std::filesystem::path &path);
    /// The bundled GI search terms.
    static const KeywordList &defaults();

    const std::vector<std::string> &terms() const noexcept { return terms_; }

private:
    std::vector<std::string> terms_;
};

struct MatchSpan {
    std::size_t begin;  // byte offsets into the matched text
    std::size_t end;
    std::string term;
};

struct FilterMatch {
    std::string review_id;
    std::set<std::string> matched_terms;
    std::vector<MatchSpan> spans;  // in text order

    bool matched() const noexcept { return !spans.empty(); }
};

/// Token-boundary phrase matcher over a fixed term list.
///
/// A term matches where each of its words equals a whole token of the text
/// (case-insensitive) and consecutive words are separated only by
/// whitespace. Terms written without spaces between tokens ("a&e") only
/// match where the text tokens are also adjacent. Overlapping matches are
/// all reported.
class PhraseMatcher {
public:
    explicit PhraseMatcher(const std::vector<std::string> &terms,
                           text::Apostrophes mode = text::Apostrophes::join);

    std::vector<MatchSpan> find_all(std::string_view text) const;
    std::vector<MatchSpan> find_all(std::string_view text, const std::vector<text::Token> &tokens) const;

    text::Apostrophes apostrophes() const noexcept { return mode_; }

private:
    struct Pattern {
        std::string term;
        std::vector<std::string> words;
        std::vector<bool> adjacent;  // adjacent[i]: no gap between words[i] and words[i+1]
    };
    std::vector<Pattern> patterns_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_first_word_;
    text::Apostrophes mode_;
};

class KeywordMatcher {
public:
    explicit KeywordMatcher(const KeywordList &keywords);

    FilterMatch match(std::string_view text) const;

private:
    PhraseMatcher phrases_;
};

FilterMatch match_keywords(std::string_view text, const KeywordList &keywords);

struct KeptReview {
    Review review;
    FilterMatch match;
};

struct FilterResult {
    std::vector<KeptReview> kept;  // input order preserved
    std::size_t dropped_count = 0;
};

FilterResult filter_corpus(const std::vector<Review> &reviews, const KeywordList &keywords);

}  // namespace gisurv
