// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace splatslam {

/// Hard cap on worker threads, honouring the SPLATSLAM_THREADS environment
/// variable. Returns max(1, min(requested, env cap)).
int clamp_thread_count(int requested);

/// Runs fn(chunk_index, begin, end) over [0, n) split into static contiguous
/// chunks, one per worker. With threads <= 1 everything runs inline on the
/// calling thread; chunk boundaries are identical either way, so any
/// per-chunk accumulation merged in chunk order is deterministic for a fixed
/// thread count.
void parallel_chunks(int n, int threads,
                     const std::function<void(int, int, int)>& fn);

}  // namespace splatslam
