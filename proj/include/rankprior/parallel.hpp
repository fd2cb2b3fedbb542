#pragma once

// Thin OpenMP shim so the library builds with or without OpenMP.

namespace rankprior::parallel {

// Number of worker threads the kernels will use.
int max_threads() noexcept;

// Caps the worker count; n <= 0 restores the runtime default.
void set_max_threads(int n) noexcept;

// Applies RANKPRIOR_THREADS if set to a positive integer. Returns the cap in
// effect afterwards.
int apply_env_thread_cap() noexcept;

}  // namespace rankprior::parallel
