#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

namespace rdc {

/// Static SVG bar chart of per-bin values over `edges` (one bar per bin,
/// absent bins left blank). Output depends only on the arguments.
void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         std::span<const double> edges,
                         std::span<const std::optional<double>> values, bool log_x = false);

}  // namespace rdc
