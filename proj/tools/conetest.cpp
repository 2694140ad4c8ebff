#include "conetest/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return conetest::run_cli(argc, argv, std::cout, std::cerr);
}
