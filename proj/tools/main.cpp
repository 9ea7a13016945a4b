#include "aam/scenario_io.hpp"

int main(int argc, char** argv) { return aam::cli_dispatch(argc, argv); }
