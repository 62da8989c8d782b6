#pragma once

namespace wspkit {

// Worker cap resolution: WSPKIT_THREADS if set and positive, else the OpenMP
// default. Kernels are written in gather form (one writer per output
// element), so results do not depend on the thread count.
int max_threads();

// Applies the WSPKIT_THREADS cap process-wide. Called once at CLI startup.
void apply_thread_cap();

}  // namespace wspkit
