#ifndef ALIGNRU_SEGMENTATION_HPP
#define ALIGNRU_SEGMENTATION_HPP

#include "alignru/error.hpp"
#include "alignru/tokenizer.hpp"
#include "alignru/unicode.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace alignru {

// A sentence with byte offsets [start, end) into the source text.
struct SentenceSpan {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct TokenBudget {
    std::size_t budget = 350;
    std::size_t overlap_sentences = 1;

    void validate() const {
        if (budget < 1) {
            throw Error(ErrorCode::InvalidArgument, "chunk budget must be >= 1");
        }
    }
};

// Sentence-index plan for one chunk. `overlap` is the number of leading
// sentences re-included from the predecessor.
struct ChunkPlan {
    std::size_t first = 0;
    std::size_t count = 0;
    std::size_t token_count = 0;
    std::size_t overlap = 0;

    std::size_t last() const { return first + count - 1; }

    friend bool operator==(const ChunkPlan&, const ChunkPlan&) = default;
};

struct Chunk {
    std::size_t first_sentence = 0;
    std::vector<SentenceSpan> sentences;
    std::size_t token_count = 0;
    std::size_t overlap = 0;

    std::size_t last_sentence() const { return first_sentence + sentences.size() - 1; }

    std::string text() const {
        std::string out;
        for (const auto& s : sentences) {
            if (!out.empty()) {
                out.push_back(' ');
            }
            out += s.text;
        }
        return out;
    }

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

inline const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> abbreviations = {
        // Russian
        "г.", "гг.", "т.е.", "т.д.", "т.п.", "т.к.", "т.н.", "др.", "пр.", "им.", "ул.", "д.", "кв.",
        "пер.", "просп.", "обл.", "стр.", "рис.", "табл.", "гл.", "см.", "ср.", "напр.", "тыс.",
        "млн.", "млрд.", "руб.", "коп.", "проф.", "акад.", "доц.", "ген.", "св.", "в.", "вв.",
        "н.э.", "до н.э.", "ок.", "прим.", "ред.", "изд.", "с.",
        // English
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "vs.", "e.g.", "i.e.", "etc.", "no.", "jr.", "sr.",
    };
    return abbreviations;
}

// Rule-based splitter. A boundary is a run of terminal punctuation (. ! ? …),
// optionally followed by closing quotes/brackets, then whitespace, then an
// uppercase letter or digit (opening quotes/brackets may precede it). A lone
// period closing a stop-listed abbreviation never terminates a sentence.
class SentenceSplitter {
public:
    SentenceSplitter() : SentenceSplitter(default_abbreviations()) {}

    explicit SentenceSplitter(const std::vector<std::string>& abbreviations) {
        for (const auto& a : abbreviations) {
            std::string key = unicode::to_lower(a);
            while (!key.empty() && key.back() == '.') {
                key.pop_back();
            }
            if (!key.empty()) {
                abbreviations_.insert(std::move(key));
            }
        }
    }

    std::vector<SentenceSpan> split(std::string_view text) const {
        std::vector<SentenceSpan> spans;
        std::size_t pos = skip_space(text, 0);
        std::size_t sentence_start = pos;

        while (pos < text.size()) {
            const std::size_t here = pos;
            const auto cp = unicode::next_code_point(text, pos);
            if (!is_terminal(cp)) {
                continue;
            }
            std::size_t run_end = pos;
            bool lone_period = cp == U'.';
            while (run_end < text.size()) {
                std::size_t probe = run_end;
                if (!is_terminal(unicode::next_code_point(text, probe))) {
                    break;
                }
                lone_period = false;
                run_end = probe;
            }
            pos = run_end;

            std::size_t close_end = run_end;
            while (close_end < text.size()) {
                std::size_t probe = close_end;
                if (!unicode::is_closing_punct(unicode::next_code_point(text, probe))) {
                    break;
                }
                close_end = probe;
            }
            const std::size_t next_start = skip_space(text, close_end);
            if (next_start == close_end || next_start >= text.size()) {
                continue;
            }
            if (!starts_sentence(text, next_start)) {
                continue;
            }
            if (lone_period && is_abbreviation(text, sentence_start, here)) {
                continue;
            }
            spans.push_back(make_span(text, sentence_start, close_end));
            sentence_start = next_start;
            pos = next_start;
        }

        if (sentence_start < text.size()) {
            const std::size_t end = trim_end(text, sentence_start);
            if (end > sentence_start) {
                spans.push_back(make_span(text, sentence_start, end));
            }
        }
        return spans;
    }

private:
    static bool is_terminal(unicode::CodePoint cp) {
        return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…';
    }

    static std::size_t skip_space(std::string_view text, std::size_t pos) {
        while (pos < text.size()) {
            std::size_t probe = pos;
            if (!unicode::is_space(unicode::next_code_point(text, probe))) {
                break;
            }
            pos = probe;
        }
        return pos;
    }

    static std::size_t trim_end(std::string_view text, std::size_t floor) {
        std::size_t end = text.size();
        while (end > floor) {
            std::size_t probe = end;
            if (!unicode::is_space(unicode::prev_code_point(text, probe))) {
                break;
            }
            end = probe;
        }
        return end;
    }

    static bool starts_sentence(std::string_view text, std::size_t pos) {
        while (pos < text.size()) {
            const auto cp = unicode::next_code_point(text, pos);
            if (unicode::is_upper(cp) || unicode::is_digit(cp)) {
                return true;
            }
            if (!unicode::is_opening_punct(cp)) {
                return false;
            }
        }
        return false;
    }

    // `period` is the byte offset of the period; the candidate abbreviation is
    // the non-space run right before it, minus leading opening punctuation.
    bool is_abbreviation(std::string_view text, std::size_t floor, std::size_t period) const {
        std::size_t word_start = period;
        while (word_start > floor) {
            std::size_t probe = word_start;
            if (unicode::is_space(unicode::prev_code_point(text, probe))) {
                break;
            }
            word_start = probe;
        }
        while (word_start < period) {
            std::size_t probe = word_start;
            if (!unicode::is_opening_punct(unicode::next_code_point(text, probe))) {
                break;
            }
            word_start = probe;
        }
        if (word_start == period) {
            return false;
        }
        return abbreviations_.count(unicode::to_lower(text.substr(word_start, period - word_start))) != 0;
    }

    static SentenceSpan make_span(std::string_view text, std::size_t start, std::size_t end) {
        return SentenceSpan{std::string(text.substr(start, end - start)), start, end};
    }

    std::unordered_set<std::string> abbreviations_;
};

inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
    static const SentenceSplitter splitter;
    return splitter.split(text);
}

// Greedy sentence-aligned chunk planning over per-sentence token counts.
// Each chunk re-includes up to `overlap_sentences` trailing sentences of its
// predecessor, fewer when the re-included sentences plus the first new one
// would not fit the budget. A single sentence over budget is its own chunk.
inline std::vector<ChunkPlan> plan_chunks(std::span<const std::size_t> token_counts, const TokenBudget& budget) {
    budget.validate();
    if (token_counts.empty()) {
        throw Error(ErrorCode::EmptyContext, "context has no sentences");
    }
    const std::size_t n = token_counts.size();
    std::vector<ChunkPlan> plans;
    std::size_t next_uncovered = 0;

    while (next_uncovered < n) {
        std::size_t overlap = 0;
        if (!plans.empty()) {
            overlap = std::min(budget.overlap_sentences, plans.back().count);
            while (overlap > 0) {
                std::size_t tokens = 0;
                for (std::size_t i = next_uncovered - overlap; i <= next_uncovered; ++i) {
                    tokens += token_counts[i];
                }
                if (tokens <= budget.budget) {
                    break;
                }
                --overlap;
            }
        }

        ChunkPlan plan;
        plan.first = next_uncovered - overlap;
        plan.overlap = overlap;
        for (std::size_t i = plan.first; i <= next_uncovered; ++i) {
            plan.token_count += token_counts[i];
        }
        plan.count = overlap + 1;
        std::size_t cursor = next_uncovered + 1;
        if (plan.token_count <= budget.budget) {
            while (cursor < n && plan.token_count + token_counts[cursor] <= budget.budget) {
                plan.token_count += token_counts[cursor];
                ++plan.count;
                ++cursor;
            }
        }
        next_uncovered = cursor;
        plans.push_back(plan);
    }
    return plans;
}

inline std::vector<Chunk> chunk_context(std::span<const SentenceSpan> sentences, const TokenBudget& budget,
                                        const Tokenizer& tokenizer) {
    if (sentences.empty()) {
        throw Error(ErrorCode::EmptyContext, "context has no sentences");
    }
    std::vector<std::size_t> counts;
    counts.reserve(sentences.size());
    for (const auto& s : sentences) {
        counts.push_back(count_tokens(s.text, &tokenizer));
    }
    std::vector<Chunk> chunks;
    for (const auto& plan : plan_chunks(counts, budget)) {
        Chunk chunk;
        chunk.first_sentence = plan.first;
        chunk.token_count = plan.token_count;
        chunk.overlap = plan.overlap;
        chunk.sentences.assign(sentences.begin() + static_cast<std::ptrdiff_t>(plan.first),
                               sentences.begin() + static_cast<std::ptrdiff_t>(plan.first + plan.count));
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

// Re-derives the chunker contract from the plan and returns every violation
// as a human-readable line. Used by the chunk debugging command.
inline std::vector<std::string> check_chunk_plan(std::span<const std::size_t> token_counts,
                                                 std::span<const ChunkPlan> plans, const TokenBudget& budget) {
    std::vector<std::string> violations;
    const std::size_t n = token_counts.size();
    auto report = [&](std::size_t index, const std::string& what) {
        violations.push_back("chunk " + std::to_string(index) + ": " + what);
    };
    if (plans.empty()) {
        if (n != 0) {
            violations.emplace_back("no chunks for a nonempty context");
        }
        return violations;
    }
    for (std::size_t c = 0; c < plans.size(); ++c) {
        const auto& p = plans[c];
        if (p.count == 0 || p.first + p.count > n) {
            report(c, "sentence range out of bounds");
            continue;
        }
        const std::size_t sum = std::accumulate(token_counts.begin() + static_cast<std::ptrdiff_t>(p.first),
                                                token_counts.begin() + static_cast<std::ptrdiff_t>(p.first + p.count),
                                                std::size_t{0});
        if (sum != p.token_count) {
            report(c, "token_count " + std::to_string(p.token_count) + " != sentence sum " + std::to_string(sum));
        }
        if (sum > budget.budget && p.count != 1) {
            report(c, "exceeds budget with " + std::to_string(p.count) + " sentences");
        }
        if (c == 0) {
            if (p.first != 0) {
                report(c, "does not start at the first sentence");
            }
            continue;
        }
        const auto& prev = plans[c - 1];
        if (p.first <= prev.first || p.last() <= prev.last()) {
            report(c, "not in source order");
            continue;
        }
        if (p.first > prev.last() + 1) {
            report(c, "gap after sentence " + std::to_string(prev.last()));
            continue;
        }
        const std::size_t shared = prev.last() + 1 - p.first;
        const std::size_t wanted = std::min(budget.overlap_sentences, prev.count);
        std::size_t with_wanted = 0;
        for (std::size_t i = prev.last() + 1 - wanted; i <= prev.last() + 1; ++i) {
            with_wanted += token_counts[i];
        }
        const bool suppressed = with_wanted > budget.budget;
        if (!suppressed && shared < wanted) {
            report(c, "shares " + std::to_string(shared) + " sentences, expected " + std::to_string(wanted));
        }
    }
    if (plans.back().last() != n - 1) {
        violations.emplace_back("last sentence not covered");
    }
    return violations;
}

}  // namespace alignru

#endif  // ALIGNRU_SEGMENTATION_HPP
