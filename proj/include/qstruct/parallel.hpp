#pragma once

namespace qstruct {

// Every data-parallel kernel in this library comes in two flavors: a plain
// serial loop (the reference) and an OpenMP version. Both compute the same
// per-element expressions in the same order, so for elementwise kernels the
// results are bit-identical; tests rely on that.
enum class ExecMode { Serial, OpenMP };

// Process-wide default used by the scenario runners. Honors QSTRUCT_THREADS:
// 0 or unset leaves the OpenMP runtime default, 1 switches to Serial.
ExecMode default_exec_mode();

// Applies QSTRUCT_THREADS (if set) to the OpenMP runtime and returns the
// worker count that will be used.
int apply_thread_cap_from_env();

int max_threads();

}  // namespace qstruct
