#pragma once

#include "rkbug/harness.hpp"

#include <string>
#include <vector>

namespace rkbug {

/// Gnuplot script drawing log-log error-versus-h curves, one panel per
/// (method, tableau) and one curve per rank, with a dashed guide of slope p
/// where p is the tableau order. Data are read from `csv_name`, which must
/// sit next to the script.
std::string gnuplot_script(const std::vector<ConvergenceRecord>& records, const StudyConfig& cfg,
                           const std::string& csv_name);

} // namespace rkbug
