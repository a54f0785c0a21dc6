#pragma once

namespace evor {

// Keeps freed batch buffers in the heap instead of returning them to the OS
// on every call (glibc only; no-op elsewhere). Call once at startup.
void tune_allocator();

}  // namespace evor
