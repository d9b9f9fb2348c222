#include "cli/commands.hpp"

int main(int argc, char** argv) { return dashgs::cli::run(argc, argv); }
