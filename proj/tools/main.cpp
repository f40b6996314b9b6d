#include "spanemo/cli.hpp"

int main(int argc, char** argv) { return spanemo::cli::run(argc, argv); }
