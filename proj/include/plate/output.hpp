#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "plate/types.hpp"

namespace plate {

// Rows are printed with %.17g; non-finite values as inf, -inf, nan.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Two-space indented, trailing newline; non-finite numbers become null.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

// Heatmap of values(i_y, i_x) on a fixed colour ramp, rows drawn top = y_hi.
// Non-finite cells are drawn black.
void write_svg_heatmap(const std::filesystem::path& path, const Mat& values, double x_lo, double x_hi,
                       double y_lo, double y_hi, const std::string& title);

std::string format_number(double x);

}  // namespace plate
