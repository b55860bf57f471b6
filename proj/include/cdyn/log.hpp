// Minimal stderr logging gated by the CDYN_LOG environment variable.
// Levels: unset/"0"/"quiet" -> silent, "1"/"info" -> progress messages,
// "2"/"debug" -> per-step diagnostics.
#pragma once

#include <cstdio>

namespace cdyn {

int log_level();  // cached on first call

template <typename... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() >= 1) {
    std::fprintf(stderr, "[cdyn] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
  if (log_level() >= 2) {
    std::fprintf(stderr, "[cdyn:debug] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace cdyn
