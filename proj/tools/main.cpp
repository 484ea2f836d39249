// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv)
{
    return convsearch::cli::run(argc, argv, std::cout, std::cerr);
}
