#include "alignru/cli.hpp"

#include "alignru/datasets.hpp"
#include "alignru/evaluation.hpp"
#include "alignru/metrics.hpp"
#include "alignru/parallel.hpp"
#include "alignru/scoring.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace alignru::cli {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorCode::InvalidArgument, message); }

std::optional<OutputFormat> parse_format(std::string_view name) {
    if (name == "json") return OutputFormat::Json;
    if (name == "tsv") return OutputFormat::Tsv;
    if (name == "pretty") return OutputFormat::Pretty;
    return std::nullopt;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        usage(what + " must be a number, got '" + text + "'");
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::FileNotFound, "cannot read " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// "-" reads stdin, "@path" reads a file, anything else is literal text.
std::string read_source(const std::string& source, std::istream& in) {
    if (source == "-") {
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }
    if (source.size() > 1 && source.front() == '@') {
        return read_file(source.substr(1));
    }
    return source;
}

std::string format_double(double value) { return ojson(value).dump(); }

std::string fixed(double value, int digits = 3) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << value;
    return out.str();
}

std::string timestamp(const std::map<std::string, std::string>& env) {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const auto it = env.find("SOURCE_DATE_EPOCH"); it != env.end() && !it->second.empty()) {
        t = static_cast<std::time_t>(parse_number<int64_t>(it->second, "SOURCE_DATE_EPOCH"));
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], unicode::code_point_count(row[i]));
        }
    };
    measure(header);
    for (const auto& row : rows) measure(row);
    auto line = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const std::size_t pad = width[i] - unicode::code_point_count(row[i]);
            if (i == 0) {
                out << row[i] << std::string(pad, ' ');
            } else {
                out << "  " << std::string(pad, ' ') << row[i];
            }
        }
        out << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& row : rows) line(row);
}

std::string tsv_field(std::string text) {
    for (char& c : text) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

// --- score ------------------------------------------------------------------

struct ScoreItem {
    std::optional<std::string> id;
    TextPair pair;
};

std::vector<ScoreItem> parse_pairs(const std::string& text) {
    std::vector<ScoreItem> items;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (unicode::is_blank(line)) continue;
        auto fail = [&](const std::string& what) {
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + what);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail("expected a JSON object");
        for (const char* key : {"context", "claim"}) {
            if (!j.contains(key) || !j[key].is_string()) fail(std::string("missing string field '") + key + "'");
        }
        ScoreItem item;
        item.pair = {j["context"].get<std::string>(), j["claim"].get<std::string>()};
        if (j.contains("id")) {
            item.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) {
        throw Error(ErrorCode::EmptyInput, "no pairs to score");
    }
    return items;
}

ojson report_json(const ScoreReport& r) {
    ojson sentences = ojson::array();
    for (const auto& s : r.per_sentence) {
        sentences.push_back({{"sentence", s.sentence.text},
                             {"start", s.sentence.start},
                             {"end", s.sentence.end},
                             {"best_chunk_index", s.best_chunk_index},
                             {"best_prob", s.best_prob}});
    }
    return {{"score", r.score},
            {"n_chunks", r.n_chunks},
            {"n_claim_sentences", r.n_claim_sentences},
            {"per_sentence", sentences}};
}

void emit_scores(const std::vector<ScoreItem>& items, const std::vector<ScoreReport>& reports, bool batch,
                 OutputFormat format, std::ostream& out) {
    switch (format) {
        case OutputFormat::Json:
            for (std::size_t i = 0; i < reports.size(); ++i) {
                ojson j;
                if (batch) {
                    j["index"] = i;
                    if (items[i].id) j["id"] = *items[i].id;
                }
                j.update(report_json(reports[i]));
                out << j.dump() << '\n';
            }
            break;
        case OutputFormat::Tsv:
            out << "index\tid\tscore\tn_chunks\tn_claim_sentences\n";
            for (std::size_t i = 0; i < reports.size(); ++i) {
                out << i << '\t' << tsv_field(items[i].id.value_or("")) << '\t' << format_double(reports[i].score)
                    << '\t' << reports[i].n_chunks << '\t' << reports[i].n_claim_sentences << '\n';
            }
            break;
        case OutputFormat::Pretty:
            for (std::size_t i = 0; i < reports.size(); ++i) {
                const auto& r = reports[i];
                if (batch) {
                    out << "[" << i << "]" << (items[i].id ? " " + *items[i].id : "") << ' ';
                }
                out << "score " << fixed(r.score, 4) << " (" << r.n_chunks << " chunk" << (r.n_chunks == 1 ? "" : "s")
                    << ", " << r.n_claim_sentences << " claim sentence" << (r.n_claim_sentences == 1 ? "" : "s")
                    << ")\n";
                for (const auto& s : r.per_sentence) {
                    out << "  " << fixed(s.best_prob, 4) << "  chunk " << s.best_chunk_index << "  " << s.sentence.text
                        << '\n';
                }
            }
            break;
    }
}

// --- eval -------------------------------------------------------------------

struct EvalOutcome {
    DatasetManifest entry;
    std::optional<ojson> report;
    std::optional<TaskEvalResult> result;
    std::string error;
};

std::string report_file_name(const std::string& dataset) {
    std::string out;
    for (unsigned char c : dataset) {
        out.push_back(std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.' || c >= 0x80 ? static_cast<char>(c) : '_');
    }
    return (out.empty() ? "dataset" : out) + ".json";
}

void emit_eval_summary(const std::vector<EvalOutcome>& outcomes, OutputFormat format, std::ostream& out) {
    if (format == OutputFormat::Json) {
        ojson reports = ojson::array();
        ojson failures = ojson::array();
        for (const auto& o : outcomes) {
            if (o.report) {
                reports.push_back(*o.report);
            } else {
                failures.push_back({{"dataset", o.entry.name}, {"error", o.error}});
            }
        }
        out << ojson{{"reports", reports}, {"failures", failures}}.dump(2) << '\n';
        return;
    }
    if (format == OutputFormat::Tsv) {
        out << "dataset\ttask\tn\tprecision\trecall\tf1\taccuracy\troc_auc\tmse\tr2\tstatus\n";
        for (const auto& o : outcomes) {
            std::vector<std::string> f(7);
            if (o.result) {
                std::visit(
                    [&](const auto& m) {
                        using M = std::decay_t<decltype(m)>;
                        if constexpr (std::is_same_v<M, ClassificationResult>) {
                            f = {format_double(m.precision), format_double(m.recall), format_double(m.f1),
                                 format_double(m.accuracy), "", "", ""};
                        } else if constexpr (std::is_same_v<M, BinaryResult>) {
                            f = {format_double(m.precision), format_double(m.recall), format_double(m.f1), "",
                                 format_double(m.roc_auc), "", ""};
                        } else {
                            f = {"", "", "", "", "", format_double(m.mse), format_double(m.r2)};
                        }
                    },
                    o.result->metrics);
            }
            out << tsv_field(o.entry.name) << '\t' << to_string(o.entry.task) << '\t'
                << (o.result ? std::to_string(o.result->n) : "");
            for (const auto& v : f) out << '\t' << v;
            out << '\t' << (o.result ? "ok" : "error: " + tsv_field(o.error)) << '\n';
        }
        return;
    }
    // One table per task, rows per dataset.
    for (Task task : {Task::Nli3, Task::Binary, Task::Regression}) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& o : outcomes) {
            if (o.entry.task != task) continue;
            if (!o.result) {
                rows.push_back({o.entry.name, "failed"});
                continue;
            }
            std::visit(
                [&](const auto& m) {
                    using M = std::decay_t<decltype(m)>;
                    if constexpr (std::is_same_v<M, ClassificationResult>) {
                        rows.push_back({o.entry.name, fixed(m.precision), fixed(m.recall), fixed(m.f1),
                                        fixed(m.accuracy)});
                    } else if constexpr (std::is_same_v<M, BinaryResult>) {
                        rows.push_back({o.entry.name, fixed(m.precision), fixed(m.recall), fixed(m.f1),
                                        fixed(m.roc_auc)});
                    } else {
                        rows.push_back({o.entry.name, fixed(m.mse), fixed(m.r2)});
                    }
                },
                o.result->metrics);
        }
        if (rows.empty()) continue;
        std::vector<std::string> header;
        switch (task) {
            case Task::Nli3: header = {"Dataset", "Precision", "Recall", "F1", "Accuracy"}; break;
            case Task::Binary: header = {"Dataset", "Precision", "Recall", "F1", "ROC AUC"}; break;
            case Task::Regression: header = {"Dataset", "MSE", "R2"}; break;
        }
        for (auto& row : rows) row.resize(header.size());
        out << to_string(task) << '\n';
        write_table(out, header, rows);
        out << '\n';
    }
}

// --- shared -------------------------------------------------------------------

struct Globals {
    std::optional<std::string> backend;
    std::optional<std::string> model;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> chunk_budget;
    std::optional<std::size_t> overlap;
    std::optional<double> threshold;
    std::optional<std::string> format;
    std::optional<std::size_t> workers;
    std::optional<uint64_t> seed;
    std::optional<std::string> config;

    ConfigLayer layer() const {
        return {backend, model, batch_size, chunk_budget, overlap, threshold, format, workers, seed};
    }
};

std::unique_ptr<Backend> make_backend(const CliConfig& config) {
    if (config.backend.kind == BackendKind::Neural && config.backend.model_path.empty()) {
        usage("the neural backend needs --model or ALIGNRU_MODEL");
    }
    return load_backend(config.backend);
}

}  // namespace

// --- configuration -------------------------------------------------------------

ConfigLayer read_config_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        usage("config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        usage("config " + path.string() + " must be a JSON object");
    }
    ConfigLayer layer;
    for (const auto& [key, value] : j.items()) {
        auto fail = [&](const std::string& what) { usage("config key '" + key + "' " + what); };
        auto as_count = [&]() -> std::size_t {
            if (!value.is_number_unsigned()) fail("must be a non-negative integer");
            return value.get<std::size_t>();
        };
        auto as_string = [&]() -> std::string {
            if (!value.is_string()) fail("must be a string");
            return value.get<std::string>();
        };
        if (key == "backend") {
            layer.backend = as_string();
        } else if (key == "model") {
            std::filesystem::path model = as_string();
            if (model.is_relative()) model = path.parent_path() / model;
            layer.model = model.string();
        } else if (key == "batch_size") {
            layer.batch_size = as_count();
        } else if (key == "chunk_budget") {
            layer.chunk_budget = as_count();
        } else if (key == "overlap") {
            layer.overlap = as_count();
        } else if (key == "threshold") {
            if (!value.is_number()) fail("must be a number");
            layer.threshold = value.get<double>();
        } else if (key == "format") {
            layer.format = as_string();
        } else if (key == "workers") {
            layer.workers = as_count();
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) fail("must be a non-negative integer");
            layer.seed = value.get<uint64_t>();
        } else {
            usage("config " + path.string() + " has unknown key '" + key + "'");
        }
    }
    return layer;
}

ConfigLayer read_env(const std::map<std::string, std::string>& env) {
    ConfigLayer layer;
    if (const auto it = env.find("ALIGNRU_MODEL"); it != env.end() && !it->second.empty()) {
        layer.model = it->second;
    }
    if (const auto it = env.find("ALIGNRU_WORKERS"); it != env.end() && !it->second.empty()) {
        layer.workers = parse_number<std::size_t>(it->second, "ALIGNRU_WORKERS");
    }
    return layer;
}

CliConfig resolve_config(const std::vector<ConfigLayer>& layers) {
    CliConfig config;
    std::optional<std::string> backend;
    for (const auto& l : layers) {
        if (l.backend) backend = l.backend;
        if (l.model) config.backend.model_path = *l.model;
        if (l.batch_size) config.backend.batch_size = *l.batch_size;
        if (l.chunk_budget) config.budget.budget = *l.chunk_budget;
        if (l.overlap) config.budget.overlap_sentences = *l.overlap;
        if (l.threshold) config.threshold = *l.threshold;
        if (l.format) {
            const auto f = parse_format(*l.format);
            if (!f) usage("unknown format '" + *l.format + "' (json, tsv, pretty)");
            config.format = *f;
        }
        if (l.workers) config.workers = *l.workers;
        if (l.seed) config.seed = *l.seed;
    }
    if (backend) {
        const auto kind = parse_backend_kind(*backend);
        if (!kind) usage("unknown backend '" + *backend + "' (reference, neural)");
        config.backend.kind = *kind;
    }
    if (config.backend.batch_size == 0) usage("batch_size must be >= 1");
    if (config.budget.budget == 0) usage("chunk budget must be >= 1");
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) usage("threshold must lie in [0, 1]");
    if (config.workers == 0) config.workers = default_workers();
    return config;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::TokenizerNotLoaded:
        case ErrorCode::ModelLoadFailure:
        case ErrorCode::InferenceFailure:
            return kBackendError;
        default:
            return kInputError;
    }
}

// --- entry point ---------------------------------------------------------------

int run(const std::vector<std::string>& args, Streams io, const std::map<std::string, std::string>& env) {
    CLI::App app{"Factual consistency scoring and evaluation for Russian text", "alignru"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--backend", g.backend, "Backend: reference or neural");
    app.add_option("--model", g.model, "Model file for the neural backend (env ALIGNRU_MODEL)");
    app.add_option("--batch-size", g.batch_size, "Pairs per model call");
    app.add_option("--chunk-budget", g.chunk_budget, "Token budget per context chunk (default 350)");
    app.add_option("--overlap", g.overlap, "Sentences repeated between chunks (default 1)");
    app.add_option("--threshold", g.threshold, "Decision threshold for binary metrics (default 0.5)");
    app.add_option("--format", g.format, "Output format: json, tsv or pretty");
    app.add_option("--workers", g.workers, "Worker threads (env ALIGNRU_WORKERS, default: processors)");
    app.add_option("--seed", g.seed, "Seed for subsampling");
    app.add_option("--config", g.config, "JSON config file; flags override it");

    auto* score = app.add_subcommand("score", "Score a claim against a context");
    std::string context_src, claim_src, batch_src;
    score->add_option("--context", context_src, "Context text, @FILE, or - for stdin");
    score->add_option("--claim", claim_src, "Claim text, @FILE, or - for stdin");
    score->add_option("--batch", batch_src, "JSONL file of {context, claim[, id]} pairs, or - for stdin");

    auto* eval = app.add_subcommand("eval", "Evaluate datasets listed in a manifest");
    std::string manifest_path;
    std::string out_dir = "reports";
    std::optional<std::size_t> limit;
    eval->add_option("manifest", manifest_path, "Manifest JSON file")->required();
    eval->add_option("--out-dir", out_dir, "Directory for per-dataset reports");
    eval->add_option("--limit", limit, "Stratified subsample of at most N records per dataset");

    auto* chunk = app.add_subcommand("chunk-debug", "Show how a context is chunked");
    std::string text_src;
    chunk->add_option("text", text_src, "Text, @FILE, or - for stdin")->required();

    auto* calibrate = app.add_subcommand("calibrate", "Pick the F1-maximizing binary threshold");
    std::string dataset_path;
    std::size_t max_candidates = 1000;
    calibrate->add_option("dataset", dataset_path, "JSONL dataset with binary labels")->required();
    calibrate->add_option("--max-candidates", max_candidates, "Threshold candidates (quantiles beyond this)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, io.out, io.err);
        return code == 0 ? kSuccess : kInputError;
    }

    auto log = [&](const std::string& message) { io.err << "alignru: " << message << '\n'; };

    try {
        std::vector<ConfigLayer> layers;
        if (g.config) layers.push_back(read_config_file(*g.config));
        layers.push_back(read_env(env));
        layers.push_back(g.layer());
        const CliConfig config = resolve_config(layers);

        if (score->parsed()) {
            const bool batch = !batch_src.empty();
            if (batch && (!context_src.empty() || !claim_src.empty())) {
                usage("--batch cannot be combined with --context/--claim");
            }
            if (!batch && (context_src.empty() || claim_src.empty())) {
                usage("score needs --context and --claim, or --batch");
            }
            if (context_src == "-" && claim_src == "-") {
                usage("only one of --context and --claim can read stdin");
            }
            std::vector<ScoreItem> items;
            if (batch) {
                items = parse_pairs(read_source(batch_src == "-" ? "-" : "@" + batch_src, io.in));
            } else {
                items.push_back({std::nullopt, {read_source(context_src, io.in), read_source(claim_src, io.in)}});
            }
            const auto backend = make_backend(config);
            std::vector<TextPair> pairs;
            for (const auto& item : items) pairs.push_back(item.pair);
            const auto reports = align_score_batch(pairs, *backend, config.budget, config.workers);
            emit_scores(items, reports, batch, config.format, io.out);
            return kSuccess;
        }

        if (chunk->parsed()) {
            const std::string text = read_source(text_src, io.in);
            const auto sentences = split_sentences(text);
            if (sentences.empty()) {
                throw Error(ErrorCode::EmptyContext, "text has no sentences");
            }
            const auto backend = make_backend(config);
            std::vector<std::size_t> counts;
            for (const auto& s : sentences) counts.push_back(count_tokens(s.text, &backend->tokenizer()));
            const auto plans = plan_chunks(counts, config.budget);
            const auto violations = check_chunk_plan(counts, plans, config.budget);
            switch (config.format) {
                case OutputFormat::Json: {
                    ojson chunks = ojson::array();
                    for (std::size_t k = 0; k < plans.size(); ++k) {
                        chunks.push_back({{"index", k},
                                          {"first_sentence", plans[k].first},
                                          {"last_sentence", plans[k].first + plans[k].count - 1},
                                          {"token_count", plans[k].token_count},
                                          {"overlap", plans[k].overlap}});
                    }
                    ojson sentence_counts = counts;
                    io.out << ojson{{"budget", config.budget.budget},
                                    {"overlap_sentences", config.budget.overlap_sentences},
                                    {"n_sentences", sentences.size()},
                                    {"sentence_tokens", sentence_counts},
                                    {"chunks", chunks},
                                    {"violations", violations}}
                                  .dump()
                           << '\n';
                    break;
                }
                case OutputFormat::Tsv:
                    io.out << "index\tfirst_sentence\tlast_sentence\ttoken_count\toverlap\n";
                    for (std::size_t k = 0; k < plans.size(); ++k) {
                        io.out << k << '\t' << plans[k].first << '\t' << plans[k].first + plans[k].count - 1 << '\t'
                               << plans[k].token_count << '\t' << plans[k].overlap << '\n';
                    }
                    break;
                case OutputFormat::Pretty: {
                    io.out << sentences.size() << " sentences, " << plans.size() << " chunks, budget "
                           << config.budget.budget << ", overlap " << config.budget.overlap_sentences << "\n";
                    std::vector<std::vector<std::string>> rows;
                    for (std::size_t k = 0; k < plans.size(); ++k) {
                        rows.push_back({std::to_string(k),
                                        std::to_string(plans[k].first) + "-" +
                                            std::to_string(plans[k].first + plans[k].count - 1),
                                        std::to_string(plans[k].token_count), std::to_string(plans[k].overlap)});
                    }
                    write_table(io.out, {"Chunk", "Sentences", "Tokens", "Overlap"}, rows);
                    break;
                }
            }
            for (const auto& v : violations) log("violation: " + v);
            return violations.empty() ? kSuccess : kPartialFailure;
        }

        if (calibrate->parsed()) {
            const auto records = load_dataset(dataset_path, Task::Binary);
            if (records.empty()) {
                throw Error(ErrorCode::EmptyInput, "dataset " + dataset_path + " has no records");
            }
            const auto backend = make_backend(config);
            std::vector<double> scores(records.size());
            parallel_for(records.size(), config.workers, [&](std::size_t i) {
                try {
                    scores[i] = predict_pooled(*backend, records[i].context, records[i].claim, config.budget).prob_bin;
                } catch (const Error& e) {
                    throw BatchItemError(i, e);
                }
            });
            std::vector<int> gold;
            for (const auto& r : records) {
                gold.push_back(std::get<BinaryLabel>(r.label) == BinaryLabel::Aligned ? 1 : 0);
            }
            const auto cal = calibrate_threshold(scores, gold, max_candidates);
            switch (config.format) {
                case OutputFormat::Json: {
                    ojson curve = ojson::array();
                    for (const auto& p : cal.curve) {
                        curve.push_back(
                            {{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
                    }
                    io.out << ojson{{"dataset", dataset_path},
                                    {"n", records.size()},
                                    {"best_threshold", cal.best_threshold},
                                    {"best_f1", cal.best_f1},
                                    {"curve", curve}}
                                  .dump()
                           << '\n';
                    break;
                }
                case OutputFormat::Tsv:
                    io.out << "threshold\tprecision\trecall\tf1\tbest\n";
                    for (const auto& p : cal.curve) {
                        io.out << format_double(p.threshold) << '\t' << format_double(p.precision) << '\t'
                               << format_double(p.recall) << '\t' << format_double(p.f1) << '\t'
                               << (p.threshold == cal.best_threshold ? 1 : 0) << '\n';
                    }
                    break;
                case OutputFormat::Pretty: {
                    io.out << "best threshold " << fixed(cal.best_threshold, 4) << " (F1 " << fixed(cal.best_f1, 4)
                           << ", n " << records.size() << ")\n";
                    std::vector<std::vector<std::string>> rows;
                    for (const auto& p : cal.curve) {
                        rows.push_back({fixed(p.threshold, 4), fixed(p.precision), fixed(p.recall), fixed(p.f1)});
                    }
                    write_table(io.out, {"Threshold", "Precision", "Recall", "F1"}, rows);
                    break;
                }
            }
            return kSuccess;
        }

        // eval
        const auto manifest = load_manifest(manifest_path);
        if (manifest.empty()) {
            throw Error(ErrorCode::EmptyInput, "manifest " + manifest_path + " lists no datasets");
        }
        const auto backend = make_backend(config);
        const std::string stamp = timestamp(env);
        std::filesystem::create_directories(out_dir);
        std::vector<EvalOutcome> outcomes;
        for (const auto& entry : manifest) {
            EvalOutcome outcome{entry, std::nullopt, std::nullopt, {}};
            try {
                auto records = load_dataset(entry);
                if (limit) records = stratified_subsample(records, *limit, config.seed);
                const auto result =
                    run_task_eval(records, *backend, config.budget, entry.task, config.threshold, config.workers);
                ojson report{{"dataset", entry.name},
                             {"task", to_string(entry.task)},
                             {"n", result.n},
                             {"n_chunked", result.n_chunked},
                             {"metrics", ojson::parse(metrics_to_json(result.metrics).dump())},
                             {"threshold", config.threshold},
                             {"timestamp", stamp},
                             {"backend_kind", to_string(backend->kind())},
                             {"model_hash", backend->model_hash()}};
                const auto path = std::filesystem::path(out_dir) / report_file_name(entry.name);
                std::ofstream(path) << report.dump(2) << '\n';
                log("eval " + entry.name + ": " + std::to_string(result.n) + " records, report " + path.string());
                outcome.report = std::move(report);
                outcome.result = result;
            } catch (const Error& e) {
                outcome.error = e.what();
                log("eval " + entry.name + " failed: " + e.what());
            }
            outcomes.push_back(std::move(outcome));
        }
        emit_eval_summary(outcomes, config.format, io.out);
        const bool any_failed = std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.report; });
        return any_failed ? kPartialFailure : kSuccess;
    } catch (const Error& e) {
        log(e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        log(e.what());
        return kInputError;
    }
}

}  // namespace alignru::cli
