#include "rkbug/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace rkbug {

std::string gnuplot_script(const std::vector<ConvergenceRecord>& records, const StudyConfig& cfg,
                           const std::string& csv_name)
{
    std::vector<std::pair<std::string, std::string>> panels;
    for (const auto& r : records) {
        const std::pair key{r.method, r.tableau};
        if (std::find(panels.begin(), panels.end(), key) == panels.end())
            panels.push_back(key);
    }
    const std::size_t cols = std::min<std::size_t>(3, std::max<std::size_t>(panels.size(), 1));
    const std::size_t rows = (panels.size() + cols - 1) / std::max<std::size_t>(cols, 1);

    std::ostringstream os;
    os << std::setprecision(17);
    os << "# gnuplot script: convergence error versus step size\n"
       << "set terminal pdfcairo size " << 4 * cols << "in," << 3 * std::max<std::size_t>(rows, 1) << "in\n"
       << "set output '" << csv_name.substr(0, csv_name.rfind('.')) << ".pdf'\n"
       << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set format x '10^{%T}'\n"
       << "set format y '10^{%T}'\n"
       << "set xlabel 'h'\n"
       << "set ylabel 'error'\n"
       << "set key bottom right\n"
       << "set multiplot layout " << std::max<std::size_t>(rows, 1) << "," << cols << " title '"
       << to_string(cfg.problem.kind) << ", n = " << cfg.problem.n << ", theta = " << cfg.problem.theta
       << "'\n";

    for (const auto& [method, tableau] : panels) {
        int order = 1;
        try {
            order = lookup_tableau(cfg, tableau).order;
        } catch (const Error&) {
        }
        double h_top = 0.0, e_top = 0.0;
        std::vector<Index> ranks;
        for (const auto& r : records) {
            if (r.method != method || r.tableau != tableau)
                continue;
            if (std::find(ranks.begin(), ranks.end(), r.r) == ranks.end())
                ranks.push_back(r.r);
            if (std::isfinite(r.error) && (r.h > h_top || (r.h == h_top && r.error > e_top))) {
                h_top = r.h;
                e_top = r.error;
            }
        }
        os << "\nset title '" << method << " / " << tableau << "'\n";
        os << "plot";
        const char* sep = " ";
        for (Index rank : ranks) {
            os << sep << "'" << csv_name << "' every ::1 using (strcol(4) eq '" << method << "' && strcol(5) eq '"
               << tableau << "' && $7 == " << rank << " ? $6 : NaN):8 with linespoints title 'r = " << rank << "'";
            sep = ", \\\n    ";
        }
        if (h_top > 0.0 && e_top > 0.0) {
            os << sep << e_top / std::pow(h_top, order) << " * x**" << order << " with lines dashtype 2 lc 'black' title 'O(h^"
               << order << ")'";
        }
        os << "\n";
    }
    os << "\nunset multiplot\n";
    return os.str();
}

} // namespace rkbug
