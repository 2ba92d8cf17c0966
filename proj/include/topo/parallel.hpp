#pragma once

namespace topo {

/// Caps the worker count used by data-parallel loops (assembly, matrix-vector
/// products, filter construction). Values < 1 restore the runtime default.
void set_thread_count(int threads);
int thread_count();

/// Reads TOPO_THREADS; returns 0 when unset or unparsable.
int threads_from_environment();

}  // namespace topo
