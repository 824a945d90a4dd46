#ifndef ALIGNRU_SCORING_HPP
#define ALIGNRU_SCORING_HPP

#include "alignru/backend.hpp"
#include "alignru/error.hpp"
#include "alignru/parallel.hpp"
#include "alignru/segmentation.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alignru {

struct SentenceScore {
    SentenceSpan sentence;
    std::size_t best_chunk_index = 0;
    double best_prob = 0.0;

    friend bool operator==(const SentenceScore&, const SentenceScore&) = default;
};

struct ScoreReport {
    double score = 0.0;
    std::vector<SentenceScore> per_sentence;
    std::size_t n_chunks = 0;
    std::size_t n_claim_sentences = 0;

    friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

// Max over chunks per claim sentence, then the mean over sentences.
// `aligned` is row-major: one row per claim sentence, one column per chunk.
// Ties resolve to the lowest chunk index.
inline ScoreReport aggregate_alignment(std::span<const SentenceSpan> claim_sentences, std::size_t n_chunks,
                                       std::span<const double> aligned) {
    if (claim_sentences.empty()) {
        throw Error(ErrorCode::EmptyClaim, "claim has no sentences");
    }
    if (n_chunks == 0) {
        throw Error(ErrorCode::EmptyContext, "context has no chunks");
    }
    if (aligned.size() != claim_sentences.size() * n_chunks) {
        throw Error(ErrorCode::LengthMismatch, "alignment grid does not match sentences x chunks");
    }
    ScoreReport report;
    report.n_chunks = n_chunks;
    report.n_claim_sentences = claim_sentences.size();
    report.per_sentence.reserve(claim_sentences.size());

    double total = 0.0;
    for (std::size_t s = 0; s < claim_sentences.size(); ++s) {
        const auto row = aligned.subspan(s * n_chunks, n_chunks);
        std::size_t best = 0;
        for (std::size_t k = 1; k < n_chunks; ++k) {
            if (row[k] > row[best]) {
                best = k;
            }
        }
        report.per_sentence.push_back(SentenceScore{claim_sentences[s], best, row[best]});
        total += row[best];
    }
    report.score = total / static_cast<double>(claim_sentences.size());
    return report;
}

inline ScoreReport align_score(std::string_view context, std::string_view claim, const Backend& backend,
                               const TokenBudget& budget) {
    const auto context_sentences = split_sentences(context);
    if (context_sentences.empty()) {
        throw Error(ErrorCode::EmptyContext, "context is empty");
    }
    const auto claim_sentences = split_sentences(claim);
    if (claim_sentences.empty()) {
        throw Error(ErrorCode::EmptyClaim, "claim is empty");
    }
    const auto chunks = chunk_context(context_sentences, budget, backend.tokenizer());

    std::vector<std::string> chunk_texts;
    chunk_texts.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        chunk_texts.push_back(chunk.text());
    }
    std::vector<TextPair> pairs;
    pairs.reserve(claim_sentences.size() * chunks.size());
    for (const auto& sentence : claim_sentences) {
        for (const auto& text : chunk_texts) {
            pairs.push_back(TextPair{text, sentence.text});
        }
    }
    const auto outputs = backend.predict_batch(pairs);

    std::vector<double> aligned;
    aligned.reserve(outputs.size());
    for (const auto& o : outputs) {
        aligned.push_back(o.p_aligned());
    }
    return aggregate_alignment(claim_sentences, chunks.size(), aligned);
}

// Elementwise align_score. Output order is input order for any worker count;
// the first failing pair (by index) is rethrown as a BatchItemError.
inline std::vector<ScoreReport> align_score_batch(std::span<const TextPair> pairs, const Backend& backend,
                                                  const TokenBudget& budget, std::size_t workers = 1) {
    std::vector<ScoreReport> reports(pairs.size());
    parallel_for(pairs.size(), workers, [&](std::size_t i) {
        try {
            reports[i] = align_score(pairs[i].context, pairs[i].claim, backend, budget);
        } catch (const Error& e) {
            throw BatchItemError(i, e);
        }
    });
    return reports;
}

}  // namespace alignru

#endif  // ALIGNRU_SCORING_HPP
