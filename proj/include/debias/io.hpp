#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "debias/l1_analysis.hpp"
#include "debias/types.hpp"

namespace debias {

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite.
std::string format_real(double x);

/// Binary (P5) 8-bit grayscale. Comments in the header are skipped.
Signal read_pgm(const std::filesystem::path& path);

/// Values are rounded and clamped to [0, 255] on write only.
void write_pgm(const std::filesystem::path& path, const Signal& image);

/// Two columns: index,value.
void write_signal_csv(const std::filesystem::path& path, const Signal& signal);

void write_pd_trace_csv(std::ostream& os, const std::vector<PdTraceRow>& rows);

}  // namespace debias
