#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "parity.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write the score/advantage parity fixture corpus", "grl_parity_fixtures"};
    std::string output;
    std::size_t groups_per_task = 32;
    app.add_option("--output", output, "Destination (default: stdout)");
    app.add_option("--groups-per-task", groups_per_task, "Score groups per task kind");
    CLI11_PARSE(app, argc, argv);

    const auto corpus = grl::cli::make_parity_corpus(groups_per_task);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!output.empty()) {
        file.open(output);
        if (!file) {
            std::cerr << "error: cannot write '" << output << "'\n";
            return 2;
        }
        out = &file;
    }
    for (const auto& line : corpus) *out << line << '\n';
    return 0;
}
