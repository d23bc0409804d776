#include "lightstack/cli.hpp"

int main(int argc, char** argv) { return lightstack::cli::run(argc, argv); }
