#include "flipbench/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return flipbench::run_cli(argc, argv, std::cout, std::cerr);
}
