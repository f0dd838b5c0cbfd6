#include "mhess/experiments.hpp"

int main(int argc, char** argv) { return mhess::run_cli(argc, argv); }
