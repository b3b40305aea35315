// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return moonlet::cli::run(argc, argv, std::cout, std::cerr); }
