#ifndef ALIGNRU_TESTS_SUPPORT_HPP
#define ALIGNRU_TESTS_SUPPORT_HPP

#include "alignru/backend.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace alignru::test {

inline std::filesystem::path data_dir() { return ALIGNRU_TEST_DATA; }

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

// Returns p_aligned from a lookup keyed by (context, claim); neutral takes the rest.
class TableBackend final : public Backend {
public:
    explicit TableBackend(std::map<std::pair<std::string, std::string>, double> table, std::size_t batch_size = 16)
        : Backend(batch_size), table_(std::move(table)) {}

    BackendKind kind() const override { return BackendKind::Reference; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }
    std::string model_hash() const override { return "table"; }

protected:
    HeadOutputs predict_checked(std::string_view context, std::string_view claim) const override {
        const auto it = table_.find({std::string(context), std::string(claim)});
        if (it == table_.end()) {
            throw Error(ErrorCode::InferenceFailure, "no entry for pair");
        }
        HeadOutputs out;
        out.probs3 = {it->second, 1.0 - it->second, 0.0};
        out.prob_bin = it->second;
        out.regression = it->second;
        return out;
    }

private:
    std::map<std::pair<std::string, std::string>, double> table_;
    WhitespaceTokenizer tokenizer_;
};

inline std::string random_word(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {
        "мир", "дом", "кот", "собака", "река", "город", "Москва", "книга", "стол", "окно", "день", "ночь",
        "alpha", "beta", "gamma", "delta", "river", "stone", "tree", "light", "г.", "т.е.", "42", "2024",
        "«цитата»", "(скобка)", "e.g.", "Dr.", "ул.", "им.",
    };
    return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

// Random Russian/ASCII prose with sentence punctuation, abbreviations and
// stray whitespace.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_sentences = 12) {
    static const std::vector<std::string> ends = {".", "!", "?", "…", "...", "?!", ".»", ")."};
    static const std::vector<std::string> gaps = {" ", "  ", "\n", "\t", " \n "};
    std::uniform_int_distribution<std::size_t> n_sentences(0, max_sentences);
    std::uniform_int_distribution<std::size_t> n_words(1, 40);
    std::uniform_int_distribution<int> coin(0, 3);
    std::string text;
    const std::size_t s = n_sentences(rng);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t w = n_words(rng);
        for (std::size_t j = 0; j < w; ++j) {
            std::string word = random_word(rng);
            if (j == 0 && coin(rng) != 0) {
                word = word == "мир" ? "Мир" : word == "alpha" ? "Alpha" : word;
            }
            text += word;
            text += j + 1 == w ? "" : gaps[std::uniform_int_distribution<std::size_t>(0, 1)(rng)];
        }
        text += ends[std::uniform_int_distribution<std::size_t>(0, ends.size() - 1)(rng)];
        text += gaps[std::uniform_int_distribution<std::size_t>(0, gaps.size() - 1)(rng)];
    }
    return text;
}

}  // namespace alignru::test

#endif  // ALIGNRU_TESTS_SUPPORT_HPP
