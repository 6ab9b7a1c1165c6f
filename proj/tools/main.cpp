#include "cli_app.hpp"

int main(int argc, char** argv) { return cdrflow::cli::run_cli(argc, argv); }
