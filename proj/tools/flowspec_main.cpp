#include "flowspec/cli.hpp"

int main(int argc, char** argv) { return flowspec::run(argc, argv); }
