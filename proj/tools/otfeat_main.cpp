#include <string>
#include <vector>

#include "otfeat/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return otfeat::cli::run(args);
}
