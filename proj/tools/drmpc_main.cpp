#include "drmpc/harness.hpp"

int main(int argc, char** argv) { return drmpc::run_cli(argc, argv); }
