#ifndef ALIGNRU_TOKENIZER_HPP
#define ALIGNRU_TOKENIZER_HPP

#include "alignru/error.hpp"
#include "alignru/unicode.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace alignru {

// Counts and produces the tokens a consuming model sees. Chunk budgets are
// measured with the tokenizer of the backend that will score the chunks.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual bool loaded() const { return true; }
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        for (auto piece : unicode::split_whitespace(text)) {
            out.emplace_back(piece);
        }
        return out;
    }

    std::size_t count(std::string_view text) const override { return unicode::split_whitespace(text).size(); }
};

inline std::size_t count_tokens(std::string_view text, const Tokenizer* tokenizer) {
    if (tokenizer == nullptr || !tokenizer->loaded()) {
        throw Error(ErrorCode::TokenizerNotLoaded, "no tokenizer vocabulary loaded");
    }
    return tokenizer->count(text);
}

struct WordPieceOptions {
    bool do_lower_case = false;
    // Unset follows do_lower_case, matching the BERT reference tokenizer.
    std::optional<bool> strip_accents;
    bool tokenize_chinese_chars = true;
    std::size_t max_chars_per_word = 100;
    std::string unk_token = "[UNK]";
    std::string cls_token = "[CLS]";
    std::string sep_token = "[SEP]";
    std::string pad_token = "[PAD]";
};

// BERT-style tokenizer: basic pre-tokenization (cleanup, optional lowercasing,
// punctuation splitting) followed by greedy longest-match-first WordPiece.
class WordPieceTokenizer final : public Tokenizer {
public:
    WordPieceTokenizer() = default;

    WordPieceTokenizer(std::vector<std::string> vocab, WordPieceOptions options = {})
        : options_(std::move(options)) {
        set_vocab(std::move(vocab));
    }

    static WordPieceTokenizer from_file(const std::filesystem::path& path, WordPieceOptions options = {}) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorCode::TokenizerNotLoaded, "cannot read vocabulary file " + path.string());
        }
        std::vector<std::string> vocab;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            vocab.push_back(line);
        }
        return WordPieceTokenizer(std::move(vocab), std::move(options));
    }

    bool loaded() const override { return !vocab_.empty(); }
    std::size_t vocab_size() const { return vocab_.size(); }
    const WordPieceOptions& options() const { return options_; }

    std::optional<int64_t> token_id(std::string_view token) const {
        auto it = ids_.find(std::string(token));
        if (it == ids_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    int64_t unk_id() const { return require(options_.unk_token); }
    int64_t cls_id() const { return require(options_.cls_token); }
    int64_t sep_id() const { return require(options_.sep_token); }
    int64_t pad_id() const { return require(options_.pad_token); }

    std::vector<std::string> tokenize(std::string_view text) const override {
        if (!loaded()) {
            throw Error(ErrorCode::TokenizerNotLoaded, "no tokenizer vocabulary loaded");
        }
        std::vector<std::string> out;
        for (const auto& word : basic_tokenize(text)) {
            wordpiece(word, out);
        }
        return out;
    }

    std::vector<int64_t> encode(std::string_view text) const {
        std::vector<int64_t> ids;
        const int64_t unk = unk_id();
        for (const auto& token : tokenize(text)) {
            auto it = ids_.find(token);
            ids.push_back(it == ids_.end() ? unk : it->second);
        }
        return ids;
    }

    std::vector<std::string> basic_tokenize(std::string_view text) const {
        const std::string cleaned = clean_text(text);
        const bool strip = options_.strip_accents.value_or(options_.do_lower_case);

        std::string spaced;
        for (auto piece : unicode::split_whitespace(cleaned)) {
            std::string token(piece);
            if (options_.do_lower_case) {
                token = unicode::to_lower(token);
            }
            if (strip) {
                token = unicode::strip_accents(token);
            }
            split_on_punctuation(token, spaced);
            spaced.push_back(' ');
        }
        std::vector<std::string> words;
        for (auto piece : unicode::split_whitespace(spaced)) {
            words.emplace_back(piece);
        }
        return words;
    }

private:
    void set_vocab(std::vector<std::string> vocab) {
        vocab_ = std::move(vocab);
        ids_.clear();
        for (std::size_t i = 0; i < vocab_.size(); ++i) {
            // First occurrence wins on duplicate lines.
            ids_.emplace(vocab_[i], static_cast<int64_t>(i));
        }
    }

    int64_t require(const std::string& token) const {
        auto id = token_id(token);
        if (!id) {
            throw Error(ErrorCode::TokenizerNotLoaded, "vocabulary lacks special token " + token);
        }
        return *id;
    }

    static bool is_control(unicode::CodePoint cp) {
        if (cp == U'\t' || cp == U'\n' || cp == U'\r') {
            return false;
        }
        switch (unicode::category(cp)) {
            case U_CONTROL_CHAR:
            case U_FORMAT_CHAR:
            case U_PRIVATE_USE_CHAR:
            case U_SURROGATE:
            case U_UNASSIGNED:
                return true;
            default:
                return false;
        }
    }

    static bool is_bert_whitespace(unicode::CodePoint cp) {
        return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
               unicode::category(cp) == U_SPACE_SEPARATOR;
    }

    static bool is_punctuation(unicode::CodePoint cp) {
        if ((cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) || (cp >= 91 && cp <= 96) || (cp >= 123 && cp <= 126)) {
            return true;
        }
        switch (unicode::category(cp)) {
            case U_DASH_PUNCTUATION:
            case U_START_PUNCTUATION:
            case U_END_PUNCTUATION:
            case U_CONNECTOR_PUNCTUATION:
            case U_OTHER_PUNCTUATION:
            case U_INITIAL_PUNCTUATION:
            case U_FINAL_PUNCTUATION:
                return true;
            default:
                return false;
        }
    }

    static bool is_cjk(unicode::CodePoint cp) {
        return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
               (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2B73F) ||
               (cp >= 0x2B740 && cp <= 0x2B81F) || (cp >= 0x2B820 && cp <= 0x2CEAF) ||
               (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x2F800 && cp <= 0x2FA1F);
    }

    std::string clean_text(std::string_view text) const {
        std::string out;
        out.reserve(text.size());
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto cp = unicode::next_code_point(text, pos);
            if (cp == 0 || cp == 0xFFFD || is_control(cp)) {
                continue;
            }
            if (is_bert_whitespace(cp)) {
                out.push_back(' ');
            } else if (options_.tokenize_chinese_chars && is_cjk(cp)) {
                out.push_back(' ');
                unicode::append_utf8(out, cp);
                out.push_back(' ');
            } else {
                unicode::append_utf8(out, cp);
            }
        }
        return out;
    }

    static void split_on_punctuation(std::string_view token, std::string& out) {
        std::size_t pos = 0;
        while (pos < token.size()) {
            const std::size_t start = pos;
            const auto cp = unicode::next_code_point(token, pos);
            if (is_punctuation(cp)) {
                out.push_back(' ');
                out.append(token.substr(start, pos - start));
                out.push_back(' ');
            } else {
                out.append(token.substr(start, pos - start));
            }
        }
    }

    void wordpiece(const std::string& word, std::vector<std::string>& out) const {
        std::vector<std::size_t> offsets;
        for (std::size_t pos = 0; pos < word.size();) {
            offsets.push_back(pos);
            unicode::next_code_point(word, pos);
        }
        offsets.push_back(word.size());
        const std::size_t n_chars = offsets.size() - 1;
        if (n_chars > options_.max_chars_per_word) {
            out.push_back(options_.unk_token);
            return;
        }

        std::vector<std::string> pieces;
        std::size_t start = 0;
        while (start < n_chars) {
            std::size_t end = n_chars;
            std::string match;
            while (start < end) {
                std::string candidate = word.substr(offsets[start], offsets[end] - offsets[start]);
                if (start > 0) {
                    candidate.insert(0, "##");
                }
                if (ids_.count(candidate) != 0) {
                    match = std::move(candidate);
                    break;
                }
                --end;
            }
            if (match.empty()) {
                out.push_back(options_.unk_token);
                return;
            }
            pieces.push_back(std::move(match));
            start = end;
        }
        out.insert(out.end(), pieces.begin(), pieces.end());
    }

    WordPieceOptions options_;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, int64_t> ids_;
};

}  // namespace alignru

#endif  // ALIGNRU_TOKENIZER_HPP
