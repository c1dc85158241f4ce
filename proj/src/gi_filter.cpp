#include "gisurv/gi_filter.hpp"

#include "gisurv/embedded_data.hpp"
#include "gisurv/error.hpp"
#include "gisurv/table_io.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_set>

namespace gisurv {

KeywordList::KeywordList(std::vector<std::string> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw DataError("keyword list is empty");
    std::unordered_set<std::string> seen;
    for (auto &t : terms_) {
        t = text::collapse_whitespace(text::to_lower(t));
        if (text::tokenize(t).empty()) throw DataError("keyword \"" + t + "\" contains no word characters");
        if (!seen.insert(t).second) throw DataError("duplicate keyword \"" + t + "\"");
    }
}

KeywordList KeywordList::parse(std::string_view content) {
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (const auto &row : parse_table(content, '\0')) {
        auto term = text::collapse_whitespace(text::to_lower(row.fields.front()));
        if (!seen.insert(term).second) throw DataError("duplicate keyword \"" + term + "\"", row.line);
        terms.push_back(std::move(term));
    }
    return KeywordList(std::move(terms));
}

KeywordList KeywordList::load(const std::filesystem::path &path) { return parse(read_file(path)); }

const KeywordList &KeywordList::defaults() {
    static const KeywordList list = parse(data::keywords());
    return list;
}

// ---------------------------------------------------------------------------

PhraseMatcher::PhraseMatcher(const std::vector<std::string> &terms, text::Apostrophes mode) : mode_(mode) {
    for (const auto &term : terms) {
        const auto toks = text::tokenize(term, mode);
        if (toks.empty()) continue;
        Pattern p{term, {}, {}};
        for (std::size_t i = 0; i < toks.size(); ++i) {
            p.words.push_back(toks[i].norm);
            if (i + 1 < toks.size()) p.adjacent.push_back(toks[i].end == toks[i + 1].begin);
        }
        by_first_word_[p.words.front()].push_back(patterns_.size());
        patterns_.push_back(std::move(p));
    }
}

std::vector<MatchSpan> PhraseMatcher::find_all(std::string_view text) const {
    return find_all(text, text::tokenize(text, mode_));
}

std::vector<MatchSpan> PhraseMatcher::find_all(std::string_view text, const std::vector<text::Token> &tokens) const {
    std::vector<MatchSpan> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto it = by_first_word_.find(tokens[i].norm);
        if (it == by_first_word_.end()) continue;
        for (const auto idx : it->second) {
            const Pattern &p = patterns_[idx];
            if (i + p.words.size() > tokens.size()) continue;
            bool ok = true;
            for (std::size_t k = 1; k < p.words.size() && ok; ++k) {
                const auto &prev = tokens[i + k - 1];
                const auto &cur = tokens[i + k];
                if (cur.norm != p.words[k]) {
                    ok = false;
                } else if (p.adjacent[k - 1]) {
                    ok = prev.end == cur.begin;
                } else {
                    ok = prev.end < cur.begin && text::only_whitespace(text, prev.end, cur.begin);
                }
            }
            if (ok) out.push_back({tokens[i].begin, tokens[i + p.words.size() - 1].end, p.term});
        }
    }
    std::sort(out.begin(), out.end(), [](const MatchSpan &a, const MatchSpan &b) {
        return std::tie(a.begin, a.end, a.term) < std::tie(b.begin, b.end, b.term);
    });
    return out;
}

KeywordMatcher::KeywordMatcher(const KeywordList &keywords) : phrases_(keywords.terms()) {}

FilterMatch KeywordMatcher::match(std::string_view text) const {
    FilterMatch m;
    m.spans = phrases_.find_all(text);
    for (const auto &s : m.spans) m.matched_terms.insert(s.term);
    return m;
}

FilterMatch match_keywords(std::string_view text, const KeywordList &keywords) {
    return KeywordMatcher(keywords).match(text);
}

FilterResult filter_corpus(const std::vector<Review> &reviews, const KeywordList &keywords) {
    const KeywordMatcher matcher(keywords);
    FilterResult result;
    for (const auto &r : reviews) {
        auto m = matcher.match(r.text);
        if (m.matched()) {
            m.review_id = r.id;
            result.kept.push_back({r, std::move(m)});
        } else {
            ++result.dropped_count;
        }
    }
    return result;
}

}  // namespace gisurv
