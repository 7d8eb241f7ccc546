#pragma once

#include <functional>
#include <string_view>

namespace roughcal {

using WarningSink = std::function<void(std::string_view)>;

// Library warnings are discarded until a sink is installed.
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace roughcal
