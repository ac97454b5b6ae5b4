#include "tsl/cli.hpp"

int main(int argc, char** argv) { return tsl::cli::run_main(argc, argv); }
