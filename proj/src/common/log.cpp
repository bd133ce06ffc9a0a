#include "fsl/common/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fsl::log {
namespace {

std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;

void emit(Level lvl, std::string_view tag, std::string_view msg) {
    if (lvl < g_level.load(std::memory_order_relaxed)) {
        return;
    }
    std::lock_guard lock(g_mutex);
    std::cerr << '[' << tag << "] " << msg << '\n';
}

} // namespace

void set_level(Level lvl) { g_level.store(lvl, std::memory_order_relaxed); }
Level level() { return g_level.load(std::memory_order_relaxed); }

void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }
void error(std::string_view msg) { emit(Level::error, "error", msg); }

} // namespace fsl::log
