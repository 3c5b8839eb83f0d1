#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shardgame {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitSizeGuard = 4;

/// Entry point behind the `shardgame` binary; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shardgame
