#include "memsim/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace memsim {

namespace {
std::mutex sink_mutex;
WarningSink current_sink;
} // namespace

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex);
    return std::exchange(current_sink, std::move(sink));
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (current_sink) {
        current_sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

} // namespace memsim
