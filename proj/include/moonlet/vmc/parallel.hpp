// Copyright 2026 The Moonlet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace moonlet::vmc {

/// Worker count: MOONLET_THREADS if set and positive, else the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) over thread_count() threads in contiguous chunks.
/// The first exception thrown by any call is rethrown after all threads finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace moonlet::vmc
