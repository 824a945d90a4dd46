#ifndef ALIGNRU_DATASETS_HPP
#define ALIGNRU_DATASETS_HPP

#include "alignru/backend.hpp"
#include "alignru/error.hpp"
#include "alignru/unicode.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace alignru {

enum class Task { Nli3, Binary, Regression };

inline std::string_view to_string(Task task) {
    switch (task) {
        case Task::Nli3: return "nli3";
        case Task::Binary: return "binary";
        case Task::Regression: return "regression";
    }
    return "unknown";
}

inline std::optional<Task> parse_task(std::string_view name) {
    if (name == "nli3") return Task::Nli3;
    if (name == "binary") return Task::Binary;
    if (name == "regression") return Task::Regression;
    return std::nullopt;
}

enum class BinaryLabel { Aligned = 1, NotAligned = 0 };

inline std::string_view to_string(NliClass c) {
    switch (c) {
        case NliClass::Aligned: return "aligned";
        case NliClass::Neutral: return "neutral";
        case NliClass::Contradict: return "contradict";
    }
    return "unknown";
}

inline std::string_view to_string(BinaryLabel b) { return b == BinaryLabel::Aligned ? "aligned" : "not_aligned"; }

using Label = std::variant<NliClass, BinaryLabel, double>;

struct DatasetRecord {
    Task task = Task::Binary;
    std::string context;
    std::string claim;
    Label label = BinaryLabel::NotAligned;
    std::optional<std::string> id;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// Maps source-specific label spellings onto the canonical vocabularies.
// Keys are matched case-insensitively; JSON integers and booleans are looked
// up by their textual form ("0", "1", "true", "false").
class LabelMap {
public:
    static LabelMap defaults() {
        LabelMap m;
        m.nli3_ = {
            {"aligned", NliClass::Aligned},       {"entailment", NliClass::Aligned},
            {"entails", NliClass::Aligned},       {"supports", NliClass::Aligned},
            {"0", NliClass::Aligned},             {"neutral", NliClass::Neutral},
            {"not enough info", NliClass::Neutral}, {"nei", NliClass::Neutral},
            {"1", NliClass::Neutral},             {"contradict", NliClass::Contradict},
            {"contradiction", NliClass::Contradict}, {"refutes", NliClass::Contradict},
            {"2", NliClass::Contradict},
        };
        m.binary_ = {
            {"aligned", BinaryLabel::Aligned},         {"1", BinaryLabel::Aligned},
            {"true", BinaryLabel::Aligned},            {"yes", BinaryLabel::Aligned},
            {"entailment", BinaryLabel::Aligned},      {"supports", BinaryLabel::Aligned},
            {"paraphrase", BinaryLabel::Aligned},      {"not_aligned", BinaryLabel::NotAligned},
            {"0", BinaryLabel::NotAligned},            {"false", BinaryLabel::NotAligned},
            {"no", BinaryLabel::NotAligned},           {"not_entailment", BinaryLabel::NotAligned},
            {"refutes", BinaryLabel::NotAligned},      {"contradiction", BinaryLabel::NotAligned},
            {"neutral", BinaryLabel::NotAligned},      {"not_paraphrase", BinaryLabel::NotAligned},
        };
        return m;
    }

    // Overrides from {"nli3": {"raw": "aligned", ...}, "binary": {"raw": "not_aligned", ...}}.
    void merge(const nlohmann::json& config) {
        if (config.contains("nli3")) {
            for (const auto& [raw, canon] : config.at("nli3").items()) {
                const auto c = canonical_nli(canon.get<std::string>());
                if (!c) {
                    throw Error(ErrorCode::InvalidArgument, "label map: unknown nli3 label " + canon.dump());
                }
                nli3_[unicode::to_lower(raw)] = *c;
            }
        }
        if (config.contains("binary")) {
            for (const auto& [raw, canon] : config.at("binary").items()) {
                const auto name = canon.get<std::string>();
                if (name != "aligned" && name != "not_aligned") {
                    throw Error(ErrorCode::InvalidArgument, "label map: unknown binary label " + canon.dump());
                }
                binary_[unicode::to_lower(raw)] = name == "aligned" ? BinaryLabel::Aligned : BinaryLabel::NotAligned;
            }
        }
    }

    std::optional<NliClass> nli3(std::string_view raw) const { return find(nli3_, raw); }
    std::optional<BinaryLabel> binary(std::string_view raw) const { return find(binary_, raw); }

    static std::optional<NliClass> canonical_nli(std::string_view name) {
        if (name == "aligned") return NliClass::Aligned;
        if (name == "neutral") return NliClass::Neutral;
        if (name == "contradict") return NliClass::Contradict;
        return std::nullopt;
    }

private:
    template <typename T>
    static std::optional<T> find(const std::unordered_map<std::string, T>& table, std::string_view raw) {
        auto it = table.find(unicode::to_lower(raw));
        if (it == table.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::unordered_map<std::string, NliClass> nli3_;
    std::unordered_map<std::string, BinaryLabel> binary_;
};

namespace detail {

inline std::optional<std::string> label_key(const nlohmann::json& label) {
    if (label.is_string()) return label.get<std::string>();
    if (label.is_boolean()) return label.get<bool>() ? "true" : "false";
    if (label.is_number_integer()) return std::to_string(label.get<int64_t>());
    if (label.is_number_float()) {
        const double v = label.get<double>();
        if (std::floor(v) == v && std::abs(v) < 1e15) {
            return std::to_string(static_cast<int64_t>(v));
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Parses one JSONL line. `line_no` is 1-based and only used for diagnostics.
inline DatasetRecord parse_record(std::string_view line, std::size_t line_no, Task task,
                                  std::optional<double> label_scale = std::nullopt,
                                  const LabelMap& labels = LabelMap::defaults()) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "expected a JSON object");
    }
    for (const char* key : {"context", "claim", "label"}) {
        if (!obj.contains(key)) {
            throw RecordError(ErrorCode::MalformedRecord, line_no, std::string("missing key '") + key + "'");
        }
    }
    for (const auto& [key, _] : obj.items()) {
        if (key != "context" && key != "claim" && key != "label" && key != "id") {
            throw RecordError(ErrorCode::MalformedRecord, line_no, "unexpected key '" + key + "'");
        }
    }
    DatasetRecord record;
    record.task = task;
    for (auto [key, field] : {std::pair{"context", &record.context}, std::pair{"claim", &record.claim}}) {
        const auto& value = obj.at(key);
        if (!value.is_string()) {
            throw RecordError(ErrorCode::MalformedRecord, line_no, std::string("'") + key + "' must be a string");
        }
        *field = value.get<std::string>();
        if (unicode::is_blank(*field)) {
            throw RecordError(ErrorCode::MalformedRecord, line_no, std::string("'") + key + "' is empty");
        }
    }
    if (obj.contains("id")) {
        const auto& id = obj.at("id");
        record.id = id.is_string() ? id.get<std::string>() : id.dump();
    }

    const auto& label = obj.at("label");
    switch (task) {
        case Task::Nli3:
        case Task::Binary: {
            const auto key = detail::label_key(label);
            if (!key) {
                throw RecordError(ErrorCode::MalformedRecord, line_no, "unsupported label " + label.dump());
            }
            if (task == Task::Nli3) {
                const auto c = labels.nli3(*key);
                if (!c) {
                    throw RecordError(ErrorCode::MalformedRecord, line_no, "unknown nli3 label " + label.dump());
                }
                record.label = *c;
            } else {
                const auto b = labels.binary(*key);
                if (!b) {
                    throw RecordError(ErrorCode::MalformedRecord, line_no, "unknown binary label " + label.dump());
                }
                record.label = *b;
            }
            break;
        }
        case Task::Regression: {
            if (!label.is_number()) {
                throw RecordError(ErrorCode::MalformedRecord, line_no, "regression label must be a number");
            }
            double value = label.get<double>();
            if (label_scale) {
                value /= *label_scale;
            }
            if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
                throw RecordError(ErrorCode::LabelOutOfRange, line_no,
                                  "regression label " + label.dump() + " outside [0, 1] after scaling");
            }
            record.label = value;
            break;
        }
    }
    return record;
}

inline nlohmann::json record_to_json(const DatasetRecord& record) {
    nlohmann::json obj;
    if (record.id) {
        obj["id"] = *record.id;
    }
    obj["context"] = record.context;
    obj["claim"] = record.claim;
    std::visit(
        [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, double>) {
                obj["label"] = l;
            } else {
                obj["label"] = std::string(to_string(l));
            }
        },
        record.label);
    return obj;
}

inline std::string serialize_record(const DatasetRecord& record) { return record_to_json(record).dump(); }

// Loads a JSONL dataset; blank lines are skipped, every other line must be a record.
inline std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, Task task,
                                               std::optional<double> label_scale = std::nullopt,
                                               const LabelMap& labels = LabelMap::defaults()) {
    if (label_scale && !(*label_scale > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "label_scale must be positive");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::FileNotFound, path.string());
    }
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (unicode::is_blank(line)) {
            continue;
        }
        records.push_back(parse_record(line, line_no, task, label_scale, labels));
    }
    return records;
}

struct DatasetManifest {
    std::string name;
    std::filesystem::path path;
    Task task = Task::Binary;
    std::optional<std::size_t> count;
    std::optional<double> label_scale;
    nlohmann::json label_map;  // optional per-source overrides, see LabelMap::merge

    LabelMap labels() const {
        auto m = LabelMap::defaults();
        if (!label_map.is_null()) {
            m.merge(label_map);
        }
        return m;
    }
};

// Manifest entries with relative paths resolve against the manifest's directory.
inline std::vector<DatasetManifest> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::FileNotFound, path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedRecord, "manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(ErrorCode::MalformedRecord, "manifest must be a JSON array");
    }
    std::vector<DatasetManifest> entries;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& e = doc[i];
        const std::string where = "manifest entry " + std::to_string(i);
        try {
            DatasetManifest m;
            m.name = e.at("name").get<std::string>();
            m.path = e.at("path").get<std::string>();
            if (m.path.is_relative()) {
                m.path = path.parent_path() / m.path;
            }
            const auto task = parse_task(e.at("task").get<std::string>());
            if (!task) {
                throw Error(ErrorCode::MalformedRecord, where + ": unknown task " + e.at("task").dump());
            }
            m.task = *task;
            if (e.contains("count") && !e.at("count").is_null()) {
                m.count = e.at("count").get<std::size_t>();
            }
            if (e.contains("label_scale") && !e.at("label_scale").is_null()) {
                m.label_scale = e.at("label_scale").get<double>();
            }
            if (e.contains("label_map")) {
                m.label_map = e.at("label_map");
            }
            entries.push_back(std::move(m));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedRecord, where + ": " + ex.what());
        }
    }
    return entries;
}

inline std::vector<DatasetRecord> load_dataset(const DatasetManifest& manifest) {
    auto records = load_dataset(manifest.path, manifest.task, manifest.label_scale, manifest.labels());
    if (manifest.count && *manifest.count != records.size()) {
        throw Error(ErrorCode::MalformedRecord, "dataset " + manifest.name + ": manifest count " +
                                                    std::to_string(*manifest.count) + " but file has " +
                                                    std::to_string(records.size()) + " records");
    }
    return records;
}

// Stratum of a record: the class for classification tasks, the decile of the
// label for regression.
inline std::size_t stratum(const DatasetRecord& record) {
    return std::visit(
        [](const auto& l) -> std::size_t {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, double>) {
                return std::min<std::size_t>(static_cast<std::size_t>(l * 10.0), 9);
            } else {
                return static_cast<std::size_t>(l);
            }
        },
        record.label);
}

namespace detail {

// Unbiased draw in [0, bound) from the raw engine output, so results do not
// depend on the standard library's distribution implementation.
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
    const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % bound;
    uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % bound;
}

}  // namespace detail

// Proportional allocation by largest remainder, each stratum sampled without
// replacement; the result keeps file order. Deterministic for a fixed seed.
inline std::vector<DatasetRecord> stratified_subsample(const std::vector<DatasetRecord>& records, std::size_t n,
                                                       uint64_t seed) {
    if (n >= records.size()) {
        return records;
    }
    std::map<std::size_t, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < records.size(); ++i) {
        strata[stratum(records[i])].push_back(i);
    }

    struct Share {
        std::size_t key;
        std::size_t take;
        std::size_t remainder_num;  // remainder scaled by the population size
    };
    std::vector<Share> shares;
    std::size_t allocated = 0;
    for (const auto& [key, members] : strata) {
        const std::size_t scaled = n * members.size();
        shares.push_back(Share{key, scaled / records.size(), scaled % records.size()});
        allocated += shares.back().take;
    }
    std::vector<std::size_t> order(shares.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return shares[a].remainder_num > shares[b].remainder_num; });
    for (std::size_t i = 0; allocated < n; ++i) {
        ++shares[order[i]].take;
        ++allocated;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (const auto& share : shares) {
        auto members = strata[share.key];
        for (std::size_t i = 0; i < share.take; ++i) {
            const auto j = i + detail::uniform_below(rng, members.size() - i);
            std::swap(members[i], members[j]);
            chosen.push_back(members[i]);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<DatasetRecord> sample;
    sample.reserve(chosen.size());
    for (auto i : chosen) {
        sample.push_back(records[i]);
    }
    return sample;
}

}  // namespace alignru

#endif  // ALIGNRU_DATASETS_HPP
