#include "roughcal/log.hpp"

#include <mutex>

namespace roughcal {

namespace {
std::mutex sink_mutex;
WarningSink& sink()
{
    static WarningSink s;
    return s;
}
}  // namespace

void set_warning_sink(WarningSink s)
{
    std::lock_guard lock(sink_mutex);
    sink() = std::move(s);
}

void warn(std::string_view message)
{
    std::lock_guard lock(sink_mutex);
    if (sink()) sink()(message);
}

}  // namespace roughcal
