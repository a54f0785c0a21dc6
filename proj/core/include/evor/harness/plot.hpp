#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evor/harness/experiment.hpp"

namespace evor::harness {

// Line plot of mean return against the swept value with a +-1 std band, and
// success rate as a dashed line. Log-scaled x when values span >= 8x.
std::string render_sweep_svg(const std::vector<SweepRow>& rows);

// Writes <stem>.svg and <stem>.csv into out_dir; returns the svg path.
std::filesystem::path emit_plots(const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir,
                                 const std::string& stem);

}  // namespace evor::harness
