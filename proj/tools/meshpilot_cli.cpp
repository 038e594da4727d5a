#include "meshpilot/eval_harness.hpp"

int main(int argc, char** argv) { return meshpilot::cli(argc, argv); }
