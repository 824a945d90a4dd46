#ifndef ALIGNRU_EVALUATION_HPP
#define ALIGNRU_EVALUATION_HPP

#include "alignru/backend.hpp"
#include "alignru/datasets.hpp"
#include "alignru/error.hpp"
#include "alignru/metrics.hpp"
#include "alignru/parallel.hpp"
#include "alignru/segmentation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace alignru {

using TaskMetrics = std::variant<ClassificationResult, BinaryResult, RegressionResult>;

struct TaskEvalResult {
    Task task = Task::Binary;
    std::size_t n = 0;
    std::size_t n_chunked = 0;  // records whose context needed chunked prediction
    TaskMetrics metrics;
};

// Pair prediction for task evaluation. Pairs that fit the model are scored
// whole; longer contexts are chunked and pooled: the distribution of the
// chunk with the highest aligned probability, and the maximum over chunks of
// prob_bin and regression.
inline HeadOutputs predict_pooled(const Backend& backend, std::string_view context, std::string_view claim,
                                  const TokenBudget& budget, bool* chunked = nullptr) {
    if (chunked != nullptr) {
        *chunked = false;
    }
    if (backend.fits(context, claim)) {
        return backend.predict(context, claim);
    }
    const auto sentences = split_sentences(context);
    if (sentences.empty()) {
        throw Error(ErrorCode::EmptyContext, "context is empty");
    }
    const auto chunks = chunk_context(sentences, budget, backend.tokenizer());
    std::vector<TextPair> pairs;
    pairs.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        pairs.push_back(TextPair{chunk.text(), std::string(claim)});
    }
    const auto outputs = backend.predict_batch(pairs);
    HeadOutputs pooled = outputs.front();
    for (std::size_t k = 1; k < outputs.size(); ++k) {
        if (outputs[k].p_aligned() > pooled.p_aligned()) {
            pooled.probs3 = outputs[k].probs3;
        }
        pooled.prob_bin = std::max(pooled.prob_bin, outputs[k].prob_bin);
        pooled.regression = std::max(pooled.regression, outputs[k].regression);
    }
    if (chunked != nullptr) {
        *chunked = true;
    }
    return pooled;
}

inline std::size_t argmax3(const std::array<double, 3>& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (p[i] > p[best]) {
            best = i;
        }
    }
    return best;
}

inline TaskEvalResult run_task_eval(std::span<const DatasetRecord> records, const Backend& backend,
                                    const TokenBudget& budget, Task task, double threshold = 0.5,
                                    std::size_t workers = 1) {
    if (records.empty()) {
        throw Error(ErrorCode::EmptyInput, "no records to evaluate");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].task != task) {
            throw Error(ErrorCode::TaskMismatch, "record " + std::to_string(i) + " has task " +
                                                     std::string(to_string(records[i].task)) + ", expected " +
                                                     std::string(to_string(task)));
        }
    }

    std::vector<HeadOutputs> outputs(records.size());
    std::vector<char> chunked(records.size(), 0);
    parallel_for(records.size(), workers, [&](std::size_t i) {
        bool was_chunked = false;
        try {
            outputs[i] = predict_pooled(backend, records[i].context, records[i].claim, budget, &was_chunked);
        } catch (const Error& e) {
            throw BatchItemError(i, e);
        }
        chunked[i] = was_chunked ? 1 : 0;
    });

    TaskEvalResult result;
    result.task = task;
    result.n = records.size();
    result.n_chunked = static_cast<std::size_t>(std::count(chunked.begin(), chunked.end(), 1));

    switch (task) {
        case Task::Nli3: {
            std::vector<std::size_t> predicted;
            std::vector<std::size_t> gold;
            for (std::size_t i = 0; i < records.size(); ++i) {
                predicted.push_back(argmax3(outputs[i].probs3));
                gold.push_back(static_cast<std::size_t>(std::get<NliClass>(records[i].label)));
            }
            result.metrics = eval_3way(predicted, gold);
            break;
        }
        case Task::Binary: {
            std::vector<double> scores;
            std::vector<int> gold;
            for (std::size_t i = 0; i < records.size(); ++i) {
                scores.push_back(outputs[i].prob_bin);
                gold.push_back(std::get<BinaryLabel>(records[i].label) == BinaryLabel::Aligned ? 1 : 0);
            }
            result.metrics = eval_binary(scores, gold, threshold);
            break;
        }
        case Task::Regression: {
            std::vector<double> predicted;
            std::vector<double> gold;
            for (std::size_t i = 0; i < records.size(); ++i) {
                predicted.push_back(outputs[i].regression);
                gold.push_back(std::get<double>(records[i].label));
            }
            result.metrics = eval_regression(predicted, gold);
            break;
        }
    }
    return result;
}

inline nlohmann::json metrics_to_json(const TaskMetrics& metrics) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, ClassificationResult>) {
                nlohmann::json confusion = nlohmann::json::array();
                for (const auto& row : m.confusion) {
                    confusion.push_back(row);
                }
                return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                        {"accuracy", m.accuracy},   {"confusion", confusion}};
            } else if constexpr (std::is_same_v<M, BinaryResult>) {
                return {{"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1},
                        {"roc_auc", m.roc_auc},
                        {"tp", m.tp},
                        {"fp", m.fp},
                        {"tn", m.tn},
                        {"fn", m.fn},
                        {"precision_undefined", m.precision_undefined},
                        {"recall_undefined", m.recall_undefined}};
            } else {
                return {{"mse", m.mse}, {"r2", m.r2}};
            }
        },
        metrics);
}

}  // namespace alignru

#endif  // ALIGNRU_EVALUATION_HPP
