#include "cdyn/log.hpp"

#include <cstdlib>
#include <cstring>

namespace cdyn {

static int parse_level() {
  const char* env = std::getenv("CDYN_LOG");
  if (env == nullptr || *env == '\0') return 0;
  if (std::strcmp(env, "debug") == 0) return 2;
  if (std::strcmp(env, "info") == 0) return 1;
  if (std::strcmp(env, "quiet") == 0) return 0;
  return std::atoi(env);
}

int log_level() {
  static const int level = parse_level();
  return level;
}

}  // namespace cdyn
