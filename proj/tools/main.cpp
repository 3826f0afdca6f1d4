#include <string>
#include <vector>

#include "bagsel/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bagsel::cli::run(args);
}
