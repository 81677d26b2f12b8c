#pragma once

namespace dc {

/// Runtime switch for the OpenMP kernel paths. Disabling it runs the same
/// loops serially; every kernel is required to produce results independent of
/// the worker count, so the switch changes timing only.
void set_parallel_enabled(bool on);
bool parallel_enabled();

}  // namespace dc
