#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace jailkit {

// Entry point of the `jailkit` tool. args[0] is the program name.
// Exit codes: 0 success, 1 aborted run or failed check, 2 bad flags or configuration.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat `key = value` configuration text; '#' starts a comment line. Keys
// mirror the long flag names without dashes in front. Throws ConfigError on
// a malformed line or a repeated key.
std::map<std::string, std::string> parse_flat_config(std::string_view text);

}  // namespace jailkit
