#include "ergoloop/loop.hpp"

#include <cmath>

#include "ergoloop/errors.hpp"

namespace ergoloop {

ClosedLoop::ClosedLoop(std::vector<AgentModel> agents_, ControllerModel controller_,
                       std::optional<ProbabilityMap> prob_map_, FilterModel filter_,
                       Rational reference_)
    : agents(std::move(agents_)), controller(std::move(controller_)),
      prob_map(std::move(prob_map_)), filter(std::move(filter_)),
      reference(std::move(reference_)) {
    if (agents.empty()) {
        throw ModelValidationError("ClosedLoop: need at least one agent");
    }
    reference_d_ = reference.to_double();
    for (const auto& a : agents) {
        total_agent_dim_ += state_dim(a);
        if (std::holds_alternative<BinaryFlipAgent>(a)) {
            has_binary_ = true;
        }
    }
}

int ClosedLoop::controller_dim() const {
    if (const auto* lin = std::get_if<LinearController>(&controller)) {
        return lin->state_dim();
    }
    if (const auto* sw = std::get_if<SwitchedController>(&controller)) {
        return sw->state_dim();
    }
    return 0;
}

namespace {

FilterStateModel make_filter_state(const FilterModel& filter, double warm) {
    if (const auto* ma = std::get_if<MovingAverageFilter>(&filter)) {
        return std::vector<double>(static_cast<std::size_t>(ma->taps()), warm);
    }
    const auto& lin = std::get<LinearFilter>(filter);
    LinearFilterState s;
    s.x_f = Vector::Zero(lin.state_dim());
    s.ytilde = Vector::Constant(lin.taps, warm);
    return s;
}

} // namespace

LoopState initial_state(const ClosedLoop& loop, std::vector<Vector> agent_values, Vector x_c,
                        std::optional<double> filter_warm) {
    if (agent_values.size() != loop.agents.size()) {
        throw DimensionError("initial_state: one value per agent required");
    }
    for (std::size_t i = 0; i < agent_values.size(); ++i) {
        if (agent_values[i].size() != state_dim(loop.agents[i])) {
            throw DimensionError("initial_state: agent state dimension mismatch");
        }
        const bool binary_family = std::holds_alternative<BinaryFlipAgent>(loop.agents[i]) ||
                                   std::holds_alternative<SigmoidBernoulliAgent>(loop.agents[i]);
        if (binary_family && agent_values[i](0) != 0.0 && agent_values[i](0) != 1.0) {
            throw ModelValidationError("initial_state: agent " + std::to_string(i) +
                                       " value must be 0 or 1");
        }
    }
    if (x_c.size() != loop.controller_dim()) {
        throw DimensionError("initial_state: controller state dimension mismatch");
    }
    LoopState s;
    s.k = 0;
    s.x = std::move(agent_values);
    s.x_c = std::move(x_c);
    s.filter = make_filter_state(loop.filter, filter_warm.value_or(0.0));
    return s;
}

LoopState initial_state(const ClosedLoop& loop, const std::vector<double>& agent_values,
                        const Vector& x_c, std::optional<double> filter_warm) {
    std::vector<Vector> values;
    values.reserve(agent_values.size());
    for (double v : agent_values) {
        Vector x(1);
        x(0) = v;
        values.push_back(std::move(x));
    }
    return initial_state(loop, std::move(values), x_c, filter_warm);
}

Signals compute_signals(const ClosedLoop& loop, const LoopState& s, RandomStream& rng) {
    Signals sig;
    sig.y = aggregate(s.x);

    if (const auto* ma = std::get_if<MovingAverageFilter>(&loop.filter)) {
        const auto& buffer = std::get<std::vector<double>>(s.filter);
        double yhat = ma->weights[0] * sig.y;
        for (std::size_t j = 0; j < buffer.size(); ++j) {
            yhat += ma->weights[j + 1] * buffer[j];
        }
        sig.yhat = yhat;
    } else {
        const auto& lin = std::get<LinearFilter>(loop.filter);
        const auto& fs = std::get<LinearFilterState>(s.filter);
        sig.yhat = (lin.df * fs.x_f)(0);
    }

    sig.e = loop.reference_value() - sig.yhat;

    double raw = 0.0;
    if (const auto* lin = std::get_if<LinearController>(&loop.controller)) {
        raw = (lin->c * s.x_c)(0) + lin->d(0, 0) * sig.e;
    } else if (const auto* gain = std::get_if<MemorylessGainController>(&loop.controller)) {
        raw = gain_step(*gain, sig.e);
    } else {
        const auto& sw = std::get<SwitchedController>(loop.controller);
        const bool randomized = std::holds_alternative<RandomizedSwitchRule>(sw.rule);
        const double draw = randomized ? rng.uniform() : 0.0;
        sig.mode = select_switch_mode(sw, s.x_c, s.k, draw);
        const auto& mode = sw.modes[static_cast<std::size_t>(sig.mode)];
        raw = (mode.c * s.x_c)(0) + mode.d(0, 0) * sig.e;
    }
    sig.pi = loop.prob_map ? loop.prob_map->apply(raw) : raw;
    return sig;
}

StepResult step(const ClosedLoop& loop, const LoopState& s, RandomStream& rng) {
    StepResult res;
    res.signals = compute_signals(loop, s, rng);
    const Signals& sig = res.signals;

    if (loop.has_binary_agent() && (sig.pi < 0.0 || sig.pi > 1.0)) {
        throw SignalRangeError("step: pi outside [0,1] reached a binary agent at k=" +
                                   std::to_string(s.k) + " (pi=" + std::to_string(sig.pi) + ")",
                               s.k, sig.pi);
    }

    res.next = s;
    res.next.k = s.k + 1;

    // Agents draw in ascending index order, one uniform each.
    std::size_t joint = 0;
    for (std::size_t i = 0; i < loop.agents.size(); ++i) {
        const double draw = rng.uniform();
        const int branch = agent_step_inplace(loop.agents[i], res.next.x[i], sig.pi, draw);
        joint = joint * static_cast<std::size_t>(branch_count(loop.agents[i])) +
                static_cast<std::size_t>(branch);
    }
    res.joint_branch = joint;

    // Filter state advances on the pre-move aggregate y(k).
    if (const auto* ma = std::get_if<MovingAverageFilter>(&loop.filter)) {
        auto& buffer = std::get<std::vector<double>>(res.next.filter);
        ma_step(*ma, buffer, sig.y);
    } else {
        const auto& lin = std::get<LinearFilter>(loop.filter);
        auto& fs = std::get<LinearFilterState>(res.next.filter);
        linear_filter_step(lin, fs, sig.y);
    }

    // Controller state advances on e(k).
    if (const auto* lin = std::get_if<LinearController>(&loop.controller)) {
        res.next.x_c = lin->a * s.x_c + lin->b * sig.e;
    } else if (std::holds_alternative<SwitchedController>(loop.controller)) {
        const auto& sw = std::get<SwitchedController>(loop.controller);
        const auto& mode = sw.modes[static_cast<std::size_t>(sig.mode)];
        res.next.x_c = mode.a * s.x_c + mode.b * sig.e;
    }
    return res;
}

namespace {

TraceRecord make_record(const LoopState& s, const Signals& sig) {
    TraceRecord rec;
    rec.k = s.k;
    for (const auto& x : s.x) {
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            rec.x.push_back(x(d));
        }
    }
    rec.y = sig.y;
    rec.yhat = sig.yhat;
    rec.e = sig.e;
    rec.pi = sig.pi;
    rec.x_c.assign(s.x_c.data(), s.x_c.data() + s.x_c.size());
    return rec;
}

} // namespace

Trace simulate(const ClosedLoop& loop, const LoopState& initial, std::int64_t horizon,
               std::uint64_t seed) {
    if (horizon < 0) {
        throw ModelValidationError("simulate: horizon must be >= 0");
    }
    RandomStream rng = make_stream(seed, 0, 0);
    Trace trace;
    trace.master_seed = seed;
    trace.records.reserve(static_cast<std::size_t>(horizon) + 1);
    trace.joint_branches.reserve(static_cast<std::size_t>(horizon));

    LoopState state = initial;
    for (std::int64_t k = 0; k < horizon; ++k) {
        StepResult res = step(loop, state, rng);
        trace.records.push_back(make_record(state, res.signals));
        trace.joint_branches.push_back(res.joint_branch);
        state = std::move(res.next);
    }
    const Signals last = compute_signals(loop, state, rng);
    trace.records.push_back(make_record(state, last));
    return trace;
}

// ---------------------------------------------------------------------------
// Augmented affine form
// ---------------------------------------------------------------------------

namespace {

struct AffineLayout {
    std::vector<const AffineIFSAgent*> agents;
    const LinearController* controller = nullptr;
    const LinearFilter* filter = nullptr;
    int nx = 0, taps = 0, nf = 0, nc = 0;
    int off_y = 0, off_yt = 0, off_f = 0, off_yhat = 0, off_e = 0, off_c = 0, off_q = 0;
    [[nodiscard]] int total() const { return off_q + 1; }
};

AffineLayout affine_layout(const ClosedLoop& loop) {
    AffineLayout lay;
    for (const auto& agent : loop.agents) {
        const auto* ifs = std::get_if<AffineIFSAgent>(&agent);
        if (ifs == nullptr) {
            throw UnsupportedStructureError(
                "augmented form: all agents must be affine-IFS agents");
        }
        lay.agents.push_back(ifs);
        lay.nx += ifs->dim();
    }
    lay.controller = std::get_if<LinearController>(&loop.controller);
    if (lay.controller == nullptr) {
        throw UnsupportedStructureError("augmented form: controller must be linear state-space");
    }
    lay.filter = std::get_if<LinearFilter>(&loop.filter);
    if (lay.filter == nullptr) {
        throw UnsupportedStructureError("augmented form: filter must be linear state-space");
    }
    if (loop.prob_map && loop.prob_map->kind() != ProbabilityMap::Kind::Identity) {
        throw UnsupportedStructureError("augmented form: probability map must be identity");
    }
    lay.taps = lay.filter->taps;
    lay.nf = lay.filter->state_dim();
    lay.nc = lay.controller->state_dim();
    lay.off_y = lay.nx;
    lay.off_yt = lay.off_y + 1;
    lay.off_f = lay.off_yt + lay.taps;
    lay.off_yhat = lay.off_f + lay.nf;
    lay.off_e = lay.off_yhat + 1;
    lay.off_c = lay.off_e + 1;
    lay.off_q = lay.off_c + lay.nc;
    return lay;
}

} // namespace

Matrix augmented_matrix(const ClosedLoop& loop) {
    const AffineLayout lay = affine_layout(loop);
    const auto& ctl = *lay.controller;
    const auto& flt = *lay.filter;
    Matrix big = Matrix::Zero(lay.total(), lay.total());

    // x rows: block diagonal of the agent state matrices.
    int col = 0;
    for (const auto* agent : lay.agents) {
        const int d = agent->dim();
        big.block(col, col, d, d) = agent->a;
        big.block(lay.off_y, col, 1, d) = Eigen::RowVectorXd::Ones(d) * agent->a;
        col += d;
    }
    // ytilde rows: delay line J y + L ytilde.
    if (lay.taps > 0) {
        big(lay.off_yt, lay.off_y) = 1.0;
        for (int j = 1; j < lay.taps; ++j) {
            big(lay.off_yt + j, lay.off_yt + j - 1) = 1.0;
        }
    }
    // Filter state rows.
    big.block(lay.off_f, lay.off_y, lay.nf, 1) = flt.bf;
    if (lay.taps > 0) {
        big.block(lay.off_f, lay.off_yt, lay.nf, lay.taps) = flt.cf;
    }
    big.block(lay.off_f, lay.off_f, lay.nf, lay.nf) = flt.af;
    // yhat and e rows (e = r - yhat; the r part lives in the offsets).
    const Matrix dfbf = flt.df * flt.bf;
    const Matrix dfcf = flt.df * flt.cf;
    const Matrix dfaf = flt.df * flt.af;
    big.block(lay.off_yhat, lay.off_y, 1, 1) = dfbf;
    big.block(lay.off_e, lay.off_y, 1, 1) = -dfbf;
    if (lay.taps > 0) {
        big.block(lay.off_yhat, lay.off_yt, 1, lay.taps) = dfcf;
        big.block(lay.off_e, lay.off_yt, 1, lay.taps) = -dfcf;
    }
    big.block(lay.off_yhat, lay.off_f, 1, lay.nf) = dfaf;
    big.block(lay.off_e, lay.off_f, 1, lay.nf) = -dfaf;
    // Controller state rows.
    big.block(lay.off_c, lay.off_e, lay.nc, 1) = ctl.b;
    big.block(lay.off_c, lay.off_c, lay.nc, lay.nc) = ctl.a;
    // Broadcast signal row: pi(k+1) = C x_c(k+1) + D e(k+1).
    const double dc = ctl.d(0, 0);
    big.block(lay.off_q, lay.off_y, 1, 1) = -dc * dfbf;
    if (lay.taps > 0) {
        big.block(lay.off_q, lay.off_yt, 1, lay.taps) = -dc * dfcf;
    }
    big.block(lay.off_q, lay.off_f, 1, lay.nf) = -dc * dfaf;
    big.block(lay.off_q, lay.off_e, 1, 1) = ctl.c * ctl.b;
    big.block(lay.off_q, lay.off_c, 1, lay.nc) = ctl.c * ctl.a;
    return big;
}

std::vector<Vector> offset_vectors(const ClosedLoop& loop, std::size_t budget) {
    const AffineLayout lay = affine_layout(loop);
    std::size_t total = 1;
    for (const auto* agent : lay.agents) {
        const std::size_t branches = agent->offsets.size();
        if (total > budget / branches) {
            throw BudgetError("offset_vectors: joint branch count exceeds budget");
        }
        total *= branches;
    }

    const double r = loop.reference_value();
    const double dc_r = lay.controller->d(0, 0) * r;
    std::vector<Vector> out;
    out.reserve(total);
    for (std::size_t ell = 0; ell < total; ++ell) {
        // Decompose ell with agent 0 most significant.
        std::vector<std::size_t> choice(lay.agents.size());
        std::size_t rem = ell;
        for (std::size_t i = lay.agents.size(); i-- > 0;) {
            const std::size_t branches = lay.agents[i]->offsets.size();
            choice[i] = rem % branches;
            rem /= branches;
        }
        Vector b = Vector::Zero(lay.total());
        int row = 0;
        double sum = 0.0;
        for (std::size_t i = 0; i < lay.agents.size(); ++i) {
            const Vector& off = lay.agents[i]->offsets[choice[i]];
            b.segment(row, off.size()) = off;
            sum += off.sum();
            row += static_cast<int>(off.size());
        }
        b(lay.off_y) = sum;
        b(lay.off_e) = r;
        b(lay.off_q) = dc_r;
        out.push_back(std::move(b));
    }
    return out;
}

Vector augmented_state(const ClosedLoop& loop, const LoopState& s, const Signals& sig) {
    const AffineLayout lay = affine_layout(loop);
    Vector xi = Vector::Zero(lay.total());
    int row = 0;
    for (const auto& x : s.x) {
        xi.segment(row, x.size()) = x;
        row += static_cast<int>(x.size());
    }
    xi(lay.off_y) = sig.y;
    const auto& fs = std::get<LinearFilterState>(s.filter);
    if (lay.taps > 0) {
        xi.segment(lay.off_yt, lay.taps) = fs.ytilde;
    }
    xi.segment(lay.off_f, lay.nf) = fs.x_f;
    xi(lay.off_yhat) = sig.yhat;
    xi(lay.off_e) = sig.e;
    if (lay.nc > 0) {
        xi.segment(lay.off_c, lay.nc) = s.x_c;
    }
    xi(lay.off_q) = sig.pi;
    return xi;
}

} // namespace ergoloop
