#include "alignru/cli.hpp"

#include "metric_oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace alignru;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override { std::filesystem::current_path(test::data_dir() / "cli"); }

    Result run(std::vector<std::string> args, const std::string& stdin_text = {},
               std::map<std::string, std::string> env = {{"SOURCE_DATE_EPOCH", "0"}}) {
        std::istringstream in(stdin_text);
        std::ostringstream out, err;
        const int code = cli::run(args, {in, out, err}, env);
        return {code, out.str(), err.str()};
    }

    // Set ALIGNRU_UPDATE_GOLDENS=1 to rewrite the files.
    void expect_golden(const std::string& text, const std::string& name) {
        const auto path = test::data_dir() / "cli" / "golden" / name;
        if (std::getenv("ALIGNRU_UPDATE_GOLDENS") != nullptr) {
            std::filesystem::create_directories(path.parent_path());
            std::ofstream(path, std::ios::binary) << text;
            return;
        }
        std::ifstream in(path, std::ios::binary);
        ASSERT_TRUE(in) << path;
        std::ostringstream want;
        want << in.rdbuf();
        EXPECT_EQ(text, want.str()) << name;
    }

    std::filesystem::path tmp_dir() {
        const auto dir = std::filesystem::temp_directory_path() /
                         ("alignru_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }
};

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string words(std::size_t n, const std::string& first) {
    std::string s = first;
    for (std::size_t i = 1; i < n; ++i) s += " слово";
    return s + ".";
}

}  // namespace

TEST_F(Cli, ScoreIdenticalPair) {
    const auto r = run({"score", "--context", "Кот сидит дома.", "--claim", "Кот сидит дома."});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["score"], 1.0);
    expect_golden(r.out, "score_single.json");
}

TEST_F(Cli, ScoreReadsFilesAndStdin) {
    const auto dir = tmp_dir();
    std::ofstream(dir / "ctx.txt") << "Кот сидит дома.";
    const auto r = run({"score", "--context", "@" + (dir / "ctx.txt").string(), "--claim", "-"}, "Кот сидит.");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["score"], 0.5);
    EXPECT_EQ(run({"score", "--context", "@/nonexistent/ctx.txt", "--claim", "a"}).code, 2);
}

TEST_F(Cli, BatchPreservesOrder) {
    const auto r = run({"score", "--batch", "pairs.jsonl"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto out = lines(r.out);
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(nlohmann::json::parse(out[i])["index"], i);
    }
    EXPECT_EQ(nlohmann::json::parse(out[1])["id"], "p2");
    EXPECT_DOUBLE_EQ(nlohmann::json::parse(out[1])["score"].get<double>(), 7.0 / 12.0);
    expect_golden(r.out, "score_batch.jsonl");
    expect_golden(run({"--format", "tsv", "score", "--batch", "pairs.jsonl"}).out, "score_batch.tsv");
    expect_golden(run({"--format", "pretty", "score", "--batch", "pairs.jsonl"}).out, "score_batch.txt");
}

TEST_F(Cli, BatchFromStdin) {
    std::ifstream in("pairs.jsonl");
    std::ostringstream text;
    text << in.rdbuf();
    const auto r = run({"score", "--batch", "-"}, text.str());
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, run({"score", "--batch", "pairs.jsonl"}).out);
}

TEST_F(Cli, WorkerCountDoesNotChangeOutput) {
    std::mt19937_64 rng(3);
    std::string batch;
    for (int i = 0; i < 200; ++i) {
        std::string context = test::random_text(rng, 30);
        std::string claim = test::random_text(rng, 3);
        if (unicode::is_blank(context)) context = "Мир.";
        if (unicode::is_blank(claim)) claim = "Дом.";
        batch += nlohmann::json{{"context", context}, {"claim", claim}}.dump() + "\n";
    }
    const auto one = run({"--workers", "1", "--chunk-budget", "40", "score", "--batch", "-"}, batch);
    const auto eight = run({"--workers", "8", "--chunk-budget", "40", "score", "--batch", "-"}, batch);
    ASSERT_EQ(one.code, 0) << one.err;
    EXPECT_EQ(lines(one.out).size(), 200u);
    EXPECT_EQ(one.out, eight.out);
}

TEST_F(Cli, MalformedBatchIsInputError) {
    auto r = run({"score", "--batch", "-"}, "{\"context\": \"a\"}\n");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 1"), std::string::npos);
    EXPECT_EQ(run({"score", "--batch", "-"}, "\n\n").code, 2);
    EXPECT_EQ(run({"score", "--batch", "-"}, "{\"context\": \" \", \"claim\": \"a\"}\n").code, 2);
}

TEST_F(Cli, NeuralBackendErrors) {
    auto r = run({"--backend", "neural", "--model", "/missing/model.onnx", "score", "--context", "a", "--claim", "b"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("/missing/model.onnx"), std::string::npos);
    r = run({"--backend", "neural", "score", "--context", "a", "--claim", "b"});
    EXPECT_EQ(r.code, 2);
    r = run({"--backend", "neural", "score", "--context", "a", "--claim", "b"}, {},
            {{"ALIGNRU_MODEL", (test::data_dir() / "toy" / "no_regression.onnx").string()}});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("regression"), std::string::npos);
}

TEST_F(Cli, NeuralBackendScores) {
    const auto model = (test::data_dir() / "toy" / "model.onnx").string();
    const auto r = run({"--backend", "neural", "--model", model, "score", "--batch", "pairs.jsonl"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& line : lines(r.out)) {
        const double score = nlohmann::json::parse(line)["score"];
        EXPECT_GE(score, 0.0);
        EXPECT_LE(score, 1.0);
    }
    const auto from_env = run({"--backend", "neural", "score", "--batch", "pairs.jsonl"}, {}, {{"ALIGNRU_MODEL", model}});
    EXPECT_EQ(from_env.out, r.out);
}

TEST_F(Cli, EvalManifest) {
    const auto dir = tmp_dir();
    const auto r = run({"eval", "manifest.json", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["reports"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["reports"][0]["metrics"]["accuracy"].get<double>(), 2.0 / 3.0);
    EXPECT_EQ(j["reports"][1]["metrics"]["roc_auc"], 0.875);
    EXPECT_EQ(j["reports"][1]["metrics"]["f1"], 0.8);
    for (const char* key : {"dataset", "task", "n", "metrics", "threshold", "timestamp", "backend_kind", "model_hash"}) {
        EXPECT_TRUE(j["reports"][0].contains(key)) << key;
    }
    const auto file = test::read_json(dir / "toy-binary.json");
    EXPECT_EQ(file, j["reports"][1]);
    expect_golden(r.out, "eval.json");
    expect_golden(run({"--format", "pretty", "eval", "manifest.json", "--out-dir", dir.string()}).out, "eval.txt");
}

TEST_F(Cli, EvalPartialFailure) {
    const auto dir = tmp_dir();
    const auto r = run({"--format", "tsv", "eval", "manifest_mixed.json", "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(std::filesystem::exists(dir / "toy-binary.json"));
    EXPECT_NE(r.err.find("missing"), std::string::npos);
    expect_golden(r.out, "eval_mixed.tsv");
}

TEST_F(Cli, EvalInputErrors) {
    EXPECT_EQ(run({"eval", "manifest_empty.json", "--out-dir", tmp_dir().string()}).code, 2);
    EXPECT_EQ(run({"eval", "absent.json"}).code, 2);
}

TEST_F(Cli, EvalLimitSubsamples) {
    const auto r = run({"--seed", "4", "eval", "manifest.json", "--limit", "2", "--out-dir", tmp_dir().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["reports"][1]["n"], 2);
}

TEST_F(Cli, ChunkDebug) {
    auto r = run({"chunk-debug", "Одно предложение."});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["chunks"].size(), 1u);

    // Three sentences of 200 tokens, budget 350, overlap 1.
    const std::string text = words(200, "Первое") + " " + words(200, "Второе") + " " + words(200, "Третье");
    r = run({"chunk-debug", "-"}, text);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["chunks"].size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(j["chunks"][k]["first_sentence"], k);
        EXPECT_EQ(j["chunks"][k]["last_sentence"], k);
        EXPECT_EQ(j["chunks"][k]["token_count"], 200);
    }
    EXPECT_TRUE(j["violations"].empty());
    expect_golden(r.out, "chunk_debug.json");
    expect_golden(run({"--format", "tsv", "chunk-debug", "-"}, text).out, "chunk_debug.tsv");
    expect_golden(run({"--format", "pretty", "--chunk-budget", "450", "chunk-debug", "-"}, text).out,
                  "chunk_debug.txt");

    EXPECT_EQ(run({"chunk-debug", "-"}, "   ").code, 2);
}

TEST_F(Cli, CalibrateMatchesExhaustiveSweep) {
    const auto r = run({"calibrate", "calibrate.jsonl"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    // Reference coverage scores of calibrate.jsonl.
    const auto o = test::oracle_best_threshold({0.25, 0.5, 0.5, 1.0, 0.75, 0.75}, {0, 1, 0, 1, 0, 1});
    EXPECT_EQ(j["best_threshold"], o[0]);
    EXPECT_DOUBLE_EQ(j["best_f1"].get<double>(), o[1]);
    expect_golden(r.out, "calibrate.json");
    expect_golden(run({"--format", "tsv", "calibrate", "calibrate.jsonl"}).out, "calibrate.tsv");
    expect_golden(run({"--format", "pretty", "calibrate", "calibrate.jsonl"}).out, "calibrate.txt");
}

TEST_F(Cli, CalibrateSeparableReportsLowestThreshold) {
    const auto dir = tmp_dir();
    std::ofstream(dir / "sep.jsonl") << "{\"context\": \"a b c d\", \"claim\": \"a b c d\", \"label\": 1}\n"
                                     << "{\"context\": \"a b c x\", \"claim\": \"a b c d\", \"label\": 1}\n"
                                     << "{\"context\": \"a x x x\", \"claim\": \"a b c d\", \"label\": 0}\n";
    const auto j = nlohmann::json::parse(run({"calibrate", (dir / "sep.jsonl").string()}).out);
    EXPECT_EQ(j["best_threshold"], 0.75);
    EXPECT_EQ(j["best_f1"], 1.0);
}

TEST_F(Cli, CalibrateSingleClass) {
    const auto r = run({"calibrate", "one_class.jsonl"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("SingleClassAUC"), std::string::npos);
}

TEST_F(Cli, ConfigFileAndOverrides) {
    // config.json selects tsv output.
    auto r = run({"--config", "config.json", "score", "--batch", "pairs.jsonl"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("index\tid\tscore", 0), 0u);
    r = run({"--config", "config.json", "--format", "json", "score", "--batch", "pairs.jsonl"});
    EXPECT_EQ(r.out, run({"score", "--batch", "pairs.jsonl"}).out);

    const auto dir = tmp_dir();
    std::ofstream(dir / "bad.json") << "{\"colour\": 1}";
    EXPECT_EQ(run({"--config", (dir / "bad.json").string(), "chunk-debug", "a"}).code, 2);
    std::ofstream(dir / "broken.json") << "{";
    EXPECT_EQ(run({"--config", (dir / "broken.json").string(), "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"--config", (dir / "none.json").string(), "chunk-debug", "a"}).code, 2);
}

TEST_F(Cli, ConfigLayering) {
    cli::ConfigLayer file;
    file.chunk_budget = 100;
    file.workers = 3;
    file.format = "tsv";
    const auto env = cli::read_env({{"ALIGNRU_WORKERS", "5"}, {"ALIGNRU_MODEL", "m.onnx"}});
    cli::ConfigLayer flags;
    flags.format = "pretty";
    const auto c = cli::resolve_config({file, env, flags});
    EXPECT_EQ(c.budget.budget, 100u);
    EXPECT_EQ(c.workers, 5u);
    EXPECT_EQ(c.format, cli::OutputFormat::Pretty);
    EXPECT_EQ(c.backend.model_path, "m.onnx");
    EXPECT_EQ(c.budget.overlap_sentences, 1u);
    EXPECT_EQ(c.threshold, 0.5);
    EXPECT_GE(cli::resolve_config({}).workers, 1u);
    EXPECT_THROW(cli::read_env({{"ALIGNRU_WORKERS", "many"}}), Error);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"--format", "xml", "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"--backend", "magic", "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"--threshold", "1.5", "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"--chunk-budget", "0", "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"--workers", "x", "chunk-debug", "a"}).code, 2);
    EXPECT_EQ(run({"score", "--context", "a"}).code, 2);
    EXPECT_EQ(run({"score", "--batch", "pairs.jsonl", "--claim", "a"}).code, 2);
    EXPECT_EQ(run({"--workers", "2", "chunk-debug", "a"}, {}, {{"ALIGNRU_WORKERS", "zero"}}).code, 2);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("score"), std::string::npos);
}

TEST(CliExitCodes, ErrorMapping) {
    for (auto code : {ErrorCode::ModelLoadFailure, ErrorCode::InferenceFailure, ErrorCode::TokenizerNotLoaded}) {
        EXPECT_EQ(cli::exit_code_for(code), cli::kBackendError);
    }
    for (auto code : {ErrorCode::EmptyInput, ErrorCode::EmptyContext, ErrorCode::EmptyClaim, ErrorCode::FileNotFound,
                      ErrorCode::MalformedRecord, ErrorCode::LabelOutOfRange, ErrorCode::LengthMismatch,
                      ErrorCode::SingleClassAUC, ErrorCode::ZeroVariance, ErrorCode::TaskMismatch,
                      ErrorCode::InvalidArgument}) {
        EXPECT_EQ(cli::exit_code_for(code), cli::kInputError);
    }
}
