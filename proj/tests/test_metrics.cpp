#include "alignru/metrics.hpp"

#include "metric_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace alignru;

namespace {

template <typename Fn>
void expect_code(Fn fn, ErrorCode code) {
    try {
        fn();
        FAIL() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code);
    }
}

}  // namespace

TEST(Eval3Way, PerfectPrediction) {
    const std::vector<std::size_t> y{0, 1, 2, 2, 1};
    const auto r = eval_3way(y, y);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Eval3Way, HandExample) {
    const std::vector<std::size_t> pred{0, 1, 2, 0};
    const std::vector<std::size_t> gold{0, 1, 1, 2};
    const auto r = eval_3way(pred, gold);
    EXPECT_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.precision, 0.5);
    EXPECT_EQ(r.recall, 0.5);
    EXPECT_EQ(r.f1, 0.5);
    EXPECT_EQ(r.confusion[1][2], 1u);
    EXPECT_EQ(r.confusion[2][0], 1u);
}

TEST(Eval3Way, MicroIdentityAndOracle) {
    std::mt19937_64 rng(31);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 1 + rng() % 60;
        std::vector<std::size_t> pred(n), gold(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng() % 3;
            gold[i] = rng() % 3;
        }
        const auto r = eval_3way(pred, gold);
        ASSERT_EQ(r.precision, r.recall);
        ASSERT_EQ(r.recall, r.f1);
        ASSERT_EQ(r.f1, r.accuracy);
        const auto o = test::oracle_3way(pred, gold);
        ASSERT_EQ(r.confusion, o.confusion);
        ASSERT_NEAR(r.accuracy, o.accuracy, 1e-15);
        ASSERT_NEAR(r.precision, o.precision, 1e-15);
    }
}

TEST(Eval3Way, Errors) {
    expect_code([] { eval_3way({}, {}); }, ErrorCode::EmptyInput);
    expect_code([] { eval_3way(std::vector<std::size_t>{0}, std::vector<std::size_t>{0, 1}); }, ErrorCode::LengthMismatch);
    expect_code([] { eval_3way(std::vector<std::size_t>{3}, std::vector<std::size_t>{0}); }, ErrorCode::InvalidArgument);
}

TEST(RocAuc, HandCase) {
    const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
    const std::vector<int> g{1, 0, 1, 0};
    EXPECT_EQ(roc_auc(s, g), 0.75);
    EXPECT_EQ(eval_binary(s, g).roc_auc, 0.75);
}

TEST(RocAuc, SeparatingAndTied) {
    EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0}), 1.0);
    EXPECT_EQ(roc_auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1, 0}), 0.5);
}

TEST(RocAuc, SingleClass) {
    expect_code([] { roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }, ErrorCode::SingleClassAUC);
    expect_code([] { eval_binary(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}); }, ErrorCode::SingleClassAUC);
}

TEST(RocAuc, OracleAndProperties) {
    std::mt19937_64 rng(41);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 2 + rng() % 50;
        std::vector<double> s(n);
        std::vector<int> g(n);
        const bool coarse = iter % 2 == 0;  // many ties
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng() % 5) / 4.0 : static_cast<double>(rng() % 1000000) / 1e6;
            g[i] = static_cast<int>(rng() % 2);
        }
        g[0] = 1;
        g[1] = 0;
        const double auc = roc_auc(s, g);
        ASSERT_NEAR(auc, test::oracle_auc(s, g), 1e-12);
        // Strictly increasing transform.
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
        ASSERT_NEAR(roc_auc(t, g), auc, 1e-12);
        if (!coarse) {
            std::vector<int> flipped(n);
            for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - g[i];
            std::vector<double> sorted = s;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
                ASSERT_NEAR(auc + roc_auc(s, flipped), 1.0, 1e-12);
            }
        }
    }
}

TEST(EvalBinary, CountsMatchOracle) {
    std::mt19937_64 rng(51);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 2 + rng() % 50;
        std::vector<double> s(n);
        std::vector<int> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 11) / 10.0;
            g[i] = static_cast<int>(rng() % 2);
        }
        g[0] = 1;
        g[1] = 0;
        const double threshold = static_cast<double>(rng() % 11) / 10.0;
        const auto r = eval_binary(s, g, threshold);
        const auto c = test::oracle_counts(s, g, threshold);
        ASSERT_EQ(r.tp, c.tp);
        ASSERT_EQ(r.fp, c.fp);
        ASSERT_EQ(r.tn, c.tn);
        ASSERT_EQ(r.fn, c.fn);
        ASSERT_NEAR(r.f1, test::oracle_f1(c), 1e-12);
        if (r.precision + r.recall > 0) {
            ASSERT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
        } else {
            ASSERT_EQ(r.f1, 0.0);
        }
        ASSERT_EQ(r.threshold, threshold);
    }
}

TEST(EvalBinary, ZeroDivisionIsFlagged) {
    const auto r = eval_binary(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 0}, 0.5);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_TRUE(r.precision_undefined);
    EXPECT_FALSE(r.recall_undefined);
    EXPECT_EQ(r.f1, 0.0);
}

TEST(EvalBinary, Errors) {
    expect_code([] { eval_binary(std::vector<double>{0.1}, std::vector<int>{1, 0}); }, ErrorCode::LengthMismatch);
    expect_code([] { eval_binary(std::vector<double>{1.5, 0.1}, std::vector<int>{1, 0}); }, ErrorCode::InvalidArgument);
    expect_code([] { eval_binary({}, {}); }, ErrorCode::EmptyInput);
}

TEST(EvalRegression, Examples) {
    const std::vector<double> gold{0.0, 1.0};
    const auto same = eval_regression(gold, gold);
    EXPECT_EQ(same.mse, 0.0);
    EXPECT_EQ(same.r2, 1.0);
    const auto half = eval_regression(std::vector<double>{0.5, 0.5}, gold);
    EXPECT_EQ(half.mse, 0.25);
    EXPECT_EQ(half.r2, 0.0);
}

TEST(EvalRegression, OracleAndSymmetry) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> p(n), g(n), mirrored(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = u(rng);
            g[i] = u(rng);
            mirrored[i] = 2 * g[i] - p[i];
        }
        const auto r = eval_regression(p, g);
        const auto o = test::oracle_regression(p, g);
        ASSERT_NEAR(r.mse, o[0], 1e-9);
        ASSERT_NEAR(r.r2, o[1], 1e-9);
        ASSERT_LE(r.r2, 1.0);
        ASSERT_NEAR(eval_regression(mirrored, g).mse, r.mse, 1e-12);
        const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
        ASSERT_NEAR(eval_regression(std::vector<double>(n, mean), g).r2, 0.0, 1e-9);
    }
}

TEST(EvalRegression, Errors) {
    expect_code([] { eval_regression(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.3}); }, ErrorCode::ZeroVariance);
    expect_code([] { eval_regression(std::vector<double>{0.1}, std::vector<double>{0.3, 0.4}); }, ErrorCode::LengthMismatch);
    expect_code([] { eval_regression(std::vector<double>{0.1}, std::vector<double>{0.3}); }, ErrorCode::EmptyInput);
}

TEST(Calibrate, SeparableReportsLowestPerfectThreshold) {
    const std::vector<double> s{0.1, 0.2, 0.7, 0.9};
    const std::vector<int> g{0, 0, 1, 1};
    const auto c = calibrate_threshold(s, g);
    EXPECT_EQ(c.best_threshold, 0.7);
    EXPECT_EQ(c.best_f1, 1.0);
    ASSERT_EQ(c.curve.size(), 4u);
    EXPECT_EQ(c.curve.front().threshold, 0.1);
}

TEST(Calibrate, SingleClass) {
    expect_code([] { calibrate_threshold(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }, ErrorCode::SingleClassAUC);
}

TEST(Calibrate, ToySixExamples) {
    const std::vector<double> s{0.15, 0.4, 0.35, 0.8, 0.6, 0.55};
    const std::vector<int> g{0, 1, 0, 1, 0, 1};
    const auto c = calibrate_threshold(s, g);
    const auto o = test::oracle_best_threshold(s, g);
    EXPECT_EQ(c.best_threshold, o[0]);
    EXPECT_NEAR(c.best_f1, o[1], 1e-12);
}

TEST(Calibrate, RandomAgainstExhaustiveSweep) {
    std::mt19937_64 rng(71);
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> s(n);
        std::vector<int> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 20) / 19.0;
            g[i] = static_cast<int>(rng() % 2);
        }
        g[0] = 1;
        g[1] = 0;
        const auto c = calibrate_threshold(s, g);
        const auto o = test::oracle_best_threshold(s, g);
        ASSERT_EQ(c.best_threshold, o[0]);
        ASSERT_NEAR(c.best_f1, o[1], 1e-12);
    }
}

TEST(Calibrate, QuantileCandidatesWhenMany) {
    std::vector<double> s;
    std::vector<int> g;
    for (int i = 0; i < 5000; ++i) {
        s.push_back(i / 4999.0);
        g.push_back(i >= 2500 ? 1 : 0);
    }
    const auto c = calibrate_threshold(s, g, 100);
    EXPECT_LE(c.curve.size(), 100u);
    EXPECT_EQ(c.curve.front().threshold, 0.0);
    EXPECT_EQ(c.curve.back().threshold, 1.0);
    EXPECT_GT(c.best_f1, 0.99);
}
