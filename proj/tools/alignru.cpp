#include "alignru/cli.hpp"

#include <iostream>
#include <map>
#include <string>
#include <vector>

extern char** environ;

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    std::map<std::string, std::string> env;
    for (char** e = environ; *e != nullptr; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
    }
    const std::vector<std::string> args(argv + 1, argv + argc);
    return alignru::cli::run(args, {std::cin, std::cout, std::cerr}, env);
}
