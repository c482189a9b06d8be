// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "wikiprf/cli.hpp"

int main(int argc, char** argv) { return wikiprf::cli::run_cli(argc, argv, std::cout, std::cerr); }
