#include "cli.hpp"

int main(int argc, char** argv) { return geolift::cli::run(argc, argv); }
