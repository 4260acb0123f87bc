#pragma once

#include <iosfwd>
#include <string>

#include "maqkd/devices.hpp"

namespace maqkd::devices {

// Key-value configuration files: one `key = value` per line, `#` comments,
// SI units throughout. Unknown keys are hard errors so typos in physics
// parameters cannot pass silently.
SystemConfig parse_config(std::istream& in, const std::string& origin);
SystemConfig load_config_file(const std::string& path);

}  // namespace maqkd::devices
