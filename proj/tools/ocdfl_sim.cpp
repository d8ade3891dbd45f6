#include <iostream>
#include <string>
#include <vector>

#include "ocdfl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args.front() == "--help" || args.front() == "-h") {
        std::cout << "usage: ocdfl_sim <run|sweep-theta|prop1-suite|selector-oracle|dump-instance> "
                     "[--config FILE] [--set section.key=value]... [--out DIR]\n"
                     "       [--scheme ocdfl|full|none] [--theta T] [--alpha A] [--rounds Q] [--seed S]\n"
                     "       [--dataset synthetic|idx] [--idx-images FILE] [--idx-labels FILE]\n";
        return args.empty() ? ocdfl::cli::kExitValidation : ocdfl::cli::kExitOk;
    }
    ocdfl::cli::RunSpec spec;
    try {
        spec = ocdfl::cli::parse_and_validate(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return ocdfl::cli::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ocdfl::cli::kExitRuntime;
    }
    return ocdfl::cli::execute(spec, std::cout, std::cerr);
}
