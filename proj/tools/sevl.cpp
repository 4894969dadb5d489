#include "sevl/harness.hpp"

int main(int argc, char** argv) { return sevl::harness::run(argc, argv); }
