#include "cli/app.hpp"

int main(int argc, char** argv) { return kacq::cli::run(argc, argv); }
