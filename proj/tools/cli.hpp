// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace moonlet::cli {

/// Runs the command line. Returns 0 on success, 1 on runtime failure and 2 on
/// usage or configuration errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace moonlet::cli
