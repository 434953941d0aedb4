#pragma once

namespace opkern {

/// Worker threads for parallel loops: OPKERN_THREADS when set to a positive integer,
/// otherwise the hardware concurrency. Results never depend on this value.
int worker_count();

}  // namespace opkern
