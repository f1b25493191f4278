#pragma once

#include <ostream>
#include <string>

#include "ergoloop/analysis/ensemble.hpp"
#include "ergoloop/loop.hpp"

namespace ergoloop {

/// Shortest round-trippable decimal form (17 significant digits).
std::string format_double(double v);

/// Trace CSV: comment lines with config digest and master seed, then
/// k,x_1..x_N,y,yhat,e,pi,xc_1..xc_nc.
void write_trace_csv(std::ostream& out, const Trace& trace);

/// Long-run statistics CSV: ic,group,agent_mean,stderr,R,horizon. One row
/// per agent plus one per populated initial-state group.
void write_ensemble_csv(std::ostream& out, const EnsembleStats& stats,
                        const std::string& config_digest);

} // namespace ergoloop
