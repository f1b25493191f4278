#include "ergoloop/io/csv.hpp"

#include <cstdio>

namespace ergoloop {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "# config_digest=" << (trace.config_digest.empty() ? "none" : trace.config_digest)
        << "\n";
    out << "# master_seed=" << trace.master_seed << "\n";
    out << "k";
    if (!trace.records.empty()) {
        for (std::size_t i = 0; i < trace.records.front().x.size(); ++i) {
            out << ",x_" << (i + 1);
        }
        out << ",y,yhat,e,pi";
        for (std::size_t i = 0; i < trace.records.front().x_c.size(); ++i) {
            out << ",xc_" << (i + 1);
        }
    }
    out << "\n";
    for (const auto& rec : trace.records) {
        out << rec.k;
        for (double v : rec.x) {
            out << "," << format_double(v);
        }
        out << "," << format_double(rec.y) << "," << format_double(rec.yhat) << ","
            << format_double(rec.e) << "," << format_double(rec.pi);
        for (double v : rec.x_c) {
            out << "," << format_double(v);
        }
        out << "\n";
    }
}

void write_ensemble_csv(std::ostream& out, const EnsembleStats& stats,
                        const std::string& config_digest) {
    out << "# config_digest=" << (config_digest.empty() ? "none" : config_digest) << "\n";
    out << "# master_seed=" << stats.master_seed << "\n";
    out << "ic,group,agent_mean,stderr,R,horizon\n";
    for (const auto& c : stats.conditions) {
        for (std::size_t i = 0; i < c.agent_mean.size(); ++i) {
            out << c.label << ",agent_" << (i + 1) << "," << format_double(c.agent_mean[i]) << ","
                << format_double(c.agent_se[i]) << "," << c.realizations << "," << c.horizon
                << "\n";
        }
        if (c.initially_active) {
            out << c.label << ",initially_active," << format_double(c.initially_active->mean)
                << "," << format_double(c.initially_active->se) << "," << c.realizations << ","
                << c.horizon << "\n";
        }
        if (c.initially_inactive) {
            out << c.label << ",initially_inactive," << format_double(c.initially_inactive->mean)
                << "," << format_double(c.initially_inactive->se) << "," << c.realizations << ","
                << c.horizon << "\n";
        }
    }
}

} // namespace ergoloop
