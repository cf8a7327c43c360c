#include "qwyc/harness.hpp"

int main(int argc, char** argv) { return qwyc::run_cli(argc, argv); }
