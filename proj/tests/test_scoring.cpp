#include "alignru/scoring.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace alignru;

namespace {

// Mean over rows of the row maximum.
double brute_force(const std::vector<std::vector<double>>& grid) {
    double total = 0.0;
    for (const auto& row : grid) total += *std::max_element(row.begin(), row.end());
    return total / static_cast<double>(grid.size());
}

std::vector<SentenceSpan> claim_spans(std::size_t n) {
    std::vector<SentenceSpan> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"S" + std::to_string(i) + ".", i * 4, i * 4 + 3});
    return out;
}

// Builds a context whose chunks are exactly the given sentences (budget 2,
// no overlap) and a table backend reproducing `grid`.
struct GridCase {
    std::string context;
    std::string claim;
    test::TableBackend backend;
};

GridCase make_grid_case(const std::vector<std::vector<double>>& grid) {
    std::map<std::pair<std::string, std::string>, double> table;
    std::string context;
    std::string claim;
    const std::size_t k = grid.front().size();
    for (std::size_t c = 0; c < k; ++c) context += "Chunk c" + std::to_string(c) + ". ";
    for (std::size_t s = 0; s < grid.size(); ++s) {
        claim += "Claim s" + std::to_string(s) + ". ";
        for (std::size_t c = 0; c < k; ++c) {
            table[{"Chunk c" + std::to_string(c) + ".", "Claim s" + std::to_string(s) + "."}] = grid[s][c];
        }
    }
    return GridCase{context, claim, test::TableBackend(table, 3)};
}

const TokenBudget kTwoTokenChunks{2, 0};

}  // namespace

TEST(AlignScore, IdenticalSentence) {
    ReferenceBackend b;
    const auto r = align_score("Кот сидел на ковре.", "Кот сидел на ковре.", b, TokenBudget{});
    EXPECT_EQ(r.score, 1.0);
    EXPECT_EQ(r.n_chunks, 1u);
    EXPECT_EQ(r.n_claim_sentences, 1u);
}

TEST(AlignScore, StubGridExample) {
    const std::vector<std::vector<double>> grid{{0.2, 0.9}, {0.4, 0.1}};
    auto g = make_grid_case(grid);
    const auto r = align_score(g.context, g.claim, g.backend, kTwoTokenChunks);
    EXPECT_NEAR(r.score, 0.65, 1e-12);
    EXPECT_EQ(r.n_chunks, 2u);
    ASSERT_EQ(r.per_sentence.size(), 2u);
    EXPECT_EQ(r.per_sentence[0].best_chunk_index, 1u);
    EXPECT_EQ(r.per_sentence[0].best_prob, 0.9);
    EXPECT_EQ(r.per_sentence[1].best_chunk_index, 0u);
    EXPECT_EQ(r.per_sentence[1].best_prob, 0.4);
    EXPECT_EQ(r.per_sentence[1].sentence.text, "Claim s1.");
}

TEST(AlignScore, ZeroOverlapSentenceContributesZero) {
    ReferenceBackend b;
    const auto r = align_score("Кот сидел на ковре.", "Кот сидел. Собака спала.", b, TokenBudget{});
    ASSERT_EQ(r.per_sentence.size(), 2u);
    EXPECT_EQ(r.per_sentence[1].best_prob, 0.0);
    // "Кот сидел." shares "кот" only: "сидел." differs from "сидел" by the period.
    EXPECT_EQ(r.per_sentence[0].best_prob, 0.5);
    EXPECT_EQ(r.score, 0.25);
}

TEST(AlignScore, RandomGridsMatchBruteForce) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<std::vector<double>> grid(dim(rng), std::vector<double>(dim(rng)));
        for (auto& row : grid)
            for (auto& v : row) v = prob(rng);
        auto g = make_grid_case(grid);
        const auto r = align_score(g.context, g.claim, g.backend, kTwoTokenChunks);
        ASSERT_NEAR(r.score, brute_force(grid), 1e-12);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto& row = grid[s];
            const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            ASSERT_EQ(r.per_sentence[s].best_chunk_index, best);
        }
    }
}

TEST(AlignScore, EmptyContextAndClaim) {
    ReferenceBackend b;
    try {
        align_score("  ", "Да.", b, TokenBudget{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyContext);
    }
    try {
        align_score("Да.", "\n", b, TokenBudget{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyClaim);
    }
}

TEST(Aggregate, TiesGoToLowestChunk) {
    const auto spans = claim_spans(1);
    const std::vector<double> grid{0.3, 0.7, 0.7, 0.1};
    const auto r = aggregate_alignment(spans, 4, grid);
    EXPECT_EQ(r.per_sentence[0].best_chunk_index, 1u);
}

TEST(Aggregate, SingleCell) {
    const auto spans = claim_spans(1);
    const std::vector<double> grid{0.37};
    EXPECT_EQ(aggregate_alignment(spans, 1, grid).score, 0.37);
}

TEST(Aggregate, ChunkMonotonicity) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t s = 1 + rng() % 5;
        const std::size_t k = 1 + rng() % 5;
        std::vector<double> grid(s * k);
        for (auto& v : grid) v = prob(rng);
        std::vector<double> wider;
        for (std::size_t i = 0; i < s; ++i) {
            wider.insert(wider.end(), grid.begin() + static_cast<long>(i * k), grid.begin() + static_cast<long>((i + 1) * k));
            wider.push_back(prob(rng));
        }
        const auto spans = claim_spans(s);
        const auto base = aggregate_alignment(spans, k, grid);
        const auto more = aggregate_alignment(spans, k + 1, wider);
        ASSERT_GE(more.score, base.score);
        for (std::size_t i = 0; i < s; ++i) ASSERT_GE(more.per_sentence[i].best_prob, base.per_sentence[i].best_prob);
    }
}

TEST(Aggregate, SentencePermutationInvariance) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t s = 1 + rng() % 6;
        const std::size_t k = 1 + rng() % 4;
        std::vector<std::vector<double>> rows(s, std::vector<double>(k));
        for (auto& row : rows)
            for (auto& v : row) v = prob(rng);
        auto flat = [&](const std::vector<std::vector<double>>& r) {
            std::vector<double> out;
            for (const auto& row : r) out.insert(out.end(), row.begin(), row.end());
            return out;
        };
        const double a = aggregate_alignment(claim_spans(s), k, flat(rows)).score;
        std::shuffle(rows.begin(), rows.end(), rng);
        const double b = aggregate_alignment(claim_spans(s), k, flat(rows)).score;
        ASSERT_NEAR(a, b, 1e-12);
        ASSERT_GE(a, 0.0);
        ASSERT_LE(a, 1.0);
    }
}

TEST(Aggregate, ShapeErrors) {
    const auto spans = claim_spans(2);
    const std::vector<double> grid{0.1, 0.2, 0.3};
    EXPECT_THROW(aggregate_alignment(spans, 2, grid), Error);
    EXPECT_THROW(aggregate_alignment({}, 2, {}), Error);
}

TEST(AlignScoreBatch, EmptySingletonAndOrder) {
    ReferenceBackend b;
    EXPECT_TRUE(align_score_batch({}, b, TokenBudget{}).empty());
    std::mt19937_64 rng(9);
    std::vector<TextPair> pairs;
    while (pairs.size() < 10) {
        TextPair p{test::random_text(rng, 6), test::random_text(rng, 3)};
        if (!split_sentences(p.context).empty() && !split_sentences(p.claim).empty()) pairs.push_back(p);
    }
    const std::vector<TextPair> one{pairs[0]};
    EXPECT_EQ(align_score_batch(one, b, TokenBudget{}).front(),
              align_score(pairs[0].context, pairs[0].claim, b, TokenBudget{}));
    for (std::size_t workers : {1u, 4u}) {
        const auto reports = align_score_batch(pairs, b, TokenBudget{20, 1}, workers);
        ASSERT_EQ(reports.size(), pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            EXPECT_EQ(reports[i], align_score(pairs[i].context, pairs[i].claim, b, TokenBudget{20, 1}));
        }
    }
}

TEST(AlignScoreBatch, ReportsFirstFailingIndex) {
    ReferenceBackend b;
    const std::vector<TextPair> pairs{{"Да.", "Да."}, {"Да.", " "}, {" ", "Да."}};
    for (std::size_t workers : {1u, 3u}) {
        try {
            align_score_batch(pairs, b, TokenBudget{}, workers);
            FAIL();
        } catch (const BatchItemError& e) {
            EXPECT_EQ(e.index(), 1u);
            EXPECT_EQ(e.code(), ErrorCode::EmptyClaim);
        }
    }
}
