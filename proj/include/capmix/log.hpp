#pragma once
#include <cstdlib>
#include <iostream>
#include <string>

namespace capmix {

// Verbosity from CAPMIX_LOG: 0/quiet, 1/warn (default), 2/info.
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("CAPMIX_LOG");
        if (!env) return 1;
        const std::string v(env);
        if (v == "0" || v == "quiet") return 0;
        if (v == "2" || v == "info") return 2;
        return 1;
    }();
    return level;
}

inline void log_warn(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[capmix] warning: " << msg << "\n";
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[capmix] " << msg << "\n";
}

}  // namespace capmix
