#include "facegen/util/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace facegen::log {

namespace {
std::atomic<bool> g_json{false};
std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
}  // namespace

void set_json(bool enabled) { g_json = enabled; }
void set_quiet(bool quiet) { g_quiet = quiet; }

void write(Level level, std::string_view message, std::string_view code) {
    if (g_quiet && level == Level::Info) return;
    const char* name = level == Level::Info ? "info" : level == Level::Warning ? "warning" : "error";
    std::lock_guard lock(g_mutex);
    if (g_json) {
        nlohmann::json line{{"level", name}, {"message", std::string(message)}};
        if (!code.empty()) line["code"] = std::string(code);
        std::cerr << line.dump() << '\n';
    } else {
        std::cerr << name << ": " << message << '\n';
    }
}

}  // namespace facegen::log
