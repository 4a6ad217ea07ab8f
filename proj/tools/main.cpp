#include "cli.hpp"

int main(int argc, char** argv) { return stathm::cli::run(argc, argv); }
