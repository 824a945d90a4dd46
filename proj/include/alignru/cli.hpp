#ifndef ALIGNRU_CLI_HPP
#define ALIGNRU_CLI_HPP

#include "alignru/backend.hpp"
#include "alignru/error.hpp"
#include "alignru/segmentation.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace alignru::cli {

enum class OutputFormat { Json, Tsv, Pretty };

enum ExitCode : int {
    kSuccess = 0,
    kPartialFailure = 1,
    kInputError = 2,
    kBackendError = 3,
};

struct CliConfig {
    BackendConfig backend;
    TokenBudget budget;
    double threshold = 0.5;
    OutputFormat format = OutputFormat::Json;
    std::size_t workers = 0;  // 0 means one per processor
    uint64_t seed = 0;
};

// Settings gathered from one source. Unset fields leave lower layers alone.
struct ConfigLayer {
    std::optional<std::string> backend;
    std::optional<std::string> model;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> chunk_budget;
    std::optional<std::size_t> overlap;
    std::optional<double> threshold;
    std::optional<std::string> format;
    std::optional<std::size_t> workers;
    std::optional<uint64_t> seed;
};

// Keys: backend, model, batch_size, chunk_budget, overlap, threshold, format,
// workers, seed. A relative model path resolves against the file's directory.
ConfigLayer read_config_file(const std::filesystem::path& path);

// ALIGNRU_MODEL and ALIGNRU_WORKERS.
ConfigLayer read_env(const std::map<std::string, std::string>& env);

// Later layers win.
CliConfig resolve_config(const std::vector<ConfigLayer>& layers);

int exit_code_for(ErrorCode code);

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

// Entry point shared by the binary and the tests. `args` excludes the program
// name; `env` holds the environment variables consulted by the CLI.
int run(const std::vector<std::string>& args, Streams io, const std::map<std::string, std::string>& env);

}  // namespace alignru::cli

#endif  // ALIGNRU_CLI_HPP
