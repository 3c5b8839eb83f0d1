#pragma once

// Minimal SVG line charts drawn from CSV rows alone.

#include <string>
#include <string_view>
#include <vector>

#include "shardgame/config.hpp"
#include "shardgame/report.hpp"

namespace shardgame {

/// Ratio: cooperative and defective ratio against the sweep value.
/// Utility: weighted mean utility against the sweep value.
std::string render_svg(const std::vector<CsvRow>& rows, ChartKind kind, std::string_view title);

}  // namespace shardgame
