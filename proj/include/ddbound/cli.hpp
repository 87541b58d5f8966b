// `ddbound` command-line front end
//
// Subcommands: sequence, bounds qdd|nudd, simulate, verify orders|bound,
// sweep. CSV output starts with a block of "# " lines (tool version, resolved
// config as JSON, its FNV-1a hash, seed, mode); JSON output carries the same
// fields under "header". A --config JSON file supplies any flag by its long
// name; flags given on the command line win.
//
// Exit codes: 0 ok, 1 assertion failure, 2 invalid input, 3 numerical
// non-convergence or failure.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ddbound/dyson.hpp"
#include "ddbound/errors.hpp"
#include "ddbound/nudd_bounds.hpp"
#include "ddbound/qdd_bounds.hpp"
#include "ddbound/sequences.hpp"
#include "ddbound/simulator.hpp"

namespace ddbound::cli {

using json = nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_assertion = 1, exit_invalid = 2, exit_numerical = 3 };

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

// 17 significant digits, enough to round-trip any double.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

inline std::string join(const std::vector<int>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

[[noreturn]] inline void flag_error(const std::string& flag, const std::string& msg) {
    throw InvalidArgument(flag + ": " + msg);
}

// Rethrows an InvalidArgument from `fn` prefixed with the flag it came from.
template <class Fn>
auto with_flag(const std::string& flag, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        flag_error(flag, e.what());
    }
}

struct Header {
    std::string command;
    json config;
    std::optional<std::uint64_t> seed;
    std::string mode;

    std::string config_text() const { return config.dump(); }
    std::string hash() const { return "fnv1a64:" + hex64(fnv1a64(config_text())); }

    void write_csv(std::ostream& os) const {
        os << "# ddbound " << tool_version << '\n';
        os << "# command: " << command << '\n';
        os << "# config: " << config_text() << '\n';
        os << "# config_hash: " << hash() << '\n';
        os << "# seed: " << (seed ? std::to_string(*seed) : std::string("none")) << '\n';
        os << "# mode: " << mode << '\n';
    }

    json to_json() const {
        json h;
        h["tool"] = "ddbound";
        h["version"] = tool_version;
        h["command"] = command;
        h["config"] = config;
        h["config_hash"] = hash();
        h["seed"] = seed ? json(*seed) : json(nullptr);
        h["mode"] = mode;
        return h;
    }
};

inline OrderMode parse_mode(const std::string& s) {
    return s == "numeric-footnote" ? OrderMode::numeric_footnote : OrderMode::analytic;
}

inline std::string mode_label(OrderMode m) {
    return m == OrderMode::analytic ? "analytic (rigorous)"
                                    : "numeric-footnote (non-rigorous: odd-N1 z order observed numerically, not proven)";
}

inline TieRule parse_tie(const std::string& s) { return s == "outer" ? TieRule::outer_first : TieRule::inner_first; }

// Shared sequence selection: --qdd N1 N2 or --nudd a,b,... --qubits m.
struct SequenceArgs {
    std::vector<int> qdd;
    std::vector<int> nudd;
    int qubits = 1;

    void add(CLI::App* app) {
        app->add_option("--qdd", qdd, "QDD orders N1 (inner, z) and N2 (outer, x)")->expected(2);
        app->add_option("--nudd", nudd, "NUDD orders, innermost level first")->delimiter(',');
        app->add_option("--qubits", qubits, "NUDD qubit count m");
    }

    bool is_qdd() const { return !qdd.empty(); }

    const std::vector<int>& orders() const { return is_qdd() ? qdd : nudd; }

    void validate() const {
        if (qdd.empty() == nudd.empty()) flag_error("--qdd/--nudd", "give exactly one of --qdd or --nudd");
        if (is_qdd()) {
            for (int n : qdd)
                if (n < 0) flag_error("--qdd", "pulse orders must be >= 0, got " + std::to_string(n));
            return;
        }
        if (qubits < 1) flag_error("--qubits", "must be >= 1");
        with_flag("--nudd", [&] {
            validate_orders(nudd, qubits);
            return 0;
        });
    }

    void to_json(json& j) const {
        if (is_qdd()) j["qdd"] = qdd;
        else {
            j["nudd"] = nudd;
            j["qubits"] = qubits;
        }
    }
};

struct GridArgs {
    std::vector<double> eps;
    double eps_min = 1e-4;
    double eps_max = 1.0;
    int eps_points = 41;

    void add(CLI::App* app) {
        app->add_option("--eps", eps, "explicit epsilon values (overrides the log grid)")->delimiter(',');
        app->add_option("--eps-min", eps_min, "log grid lower end");
        app->add_option("--eps-max", eps_max, "log grid upper end");
        app->add_option("--eps-points", eps_points, "log grid size (0 gives an empty grid)");
    }

    void validate() const {
        for (double e : eps)
            if (!(std::isfinite(e) && e >= 0.0)) flag_error("--eps", "values must be finite and >= 0");
        if (!eps.empty()) return;
        if (eps_points < 0) flag_error("--eps-points", "must be >= 0");
        if (!(eps_min > 0.0 && std::isfinite(eps_min))) flag_error("--eps-min", "must be > 0");
        if (!(eps_max >= eps_min && std::isfinite(eps_max))) flag_error("--eps-max", "must be >= --eps-min");
    }

    std::vector<double> grid() const { return eps.empty() ? log_grid(eps_min, eps_max, eps_points) : eps; }

    void to_json(json& j) const {
        if (!eps.empty()) j["eps"] = eps;
        else {
            j["eps-min"] = eps_min;
            j["eps-max"] = eps_max;
            j["eps-points"] = eps_points;
        }
    }
};

// Physical parameters of one simulated experiment.
struct ExperimentArgs {
    SequenceArgs seq;
    double eps = 0.1;
    double eta = 1.0;
    std::vector<double> eta_xyz;
    int bath_dim = 2;
    std::uint64_t seed = 0;
    std::string state = "random";
    std::string bath_state = "mixed";
    std::string tie = "inner";
    std::string mode = "analytic";

    void add(CLI::App* app) {
        seq.add(app);
        app->add_option("--eps", eps, "dimensionless time J0 T");
        app->add_option("--eta", eta, "coupling ratio J/J0 (isotropic for QDD, J1/J0 for NUDD)");
        app->add_option("--eta-xyz", eta_xyz, "anisotropic QDD ratios eta_x eta_y eta_z")->expected(3);
        app->add_option("--bath-dim", bath_dim, "bath Hilbert-space dimension (power of 2)");
        app->add_option("--seed", seed, "master RNG seed");
        app->add_option("--state", state, "initial qubit state")->check(CLI::IsMember({"random", "plus", "zero"}));
        app->add_option("--bath-state", bath_state, "initial bath state")->check(CLI::IsMember({"mixed", "pure"}));
        app->add_option("--tie", tie, "order of coincident pulses")->check(CLI::IsMember({"inner", "outer"}));
        app->add_option("--mode", mode, "decoupling-order table")
            ->check(CLI::IsMember({"analytic", "numeric-footnote"}));
    }

    void validate() const {
        seq.validate();
        if (!(std::isfinite(eps) && eps > 0.0)) flag_error("--eps", "must be finite and > 0");
        if (!(std::isfinite(eta) && eta >= 0.0)) flag_error("--eta", "must be finite and >= 0");
        for (double e : eta_xyz)
            if (!(std::isfinite(e) && e >= 0.0)) flag_error("--eta-xyz", "components must be finite and >= 0");
        if (!eta_xyz.empty() && !seq.is_qdd()) flag_error("--eta-xyz", "only applies to --qdd");
        if (!is_power_of_two(bath_dim) || bath_dim > max_bath_dim)
            flag_error("--bath-dim", "must be a power of 2 in 1..64");
        const int m = seq.is_qdd() ? 1 : seq.qubits;
        if (m > max_sim_qubits) flag_error("--qubits", "the simulator supports at most 2 qubits");
        if ((bath_dim << m) > max_total_dim) flag_error("--bath-dim", "total dimension 2^m * dim must be <= 256");
    }

    ExperimentConfig config(std::uint64_t cell_seed) const {
        ExperimentConfig c;
        c.kind = seq.is_qdd() ? SequenceKind::qdd : SequenceKind::nudd;
        c.orders = seq.orders();
        c.qubits = seq.is_qdd() ? 1 : seq.qubits;
        c.epsilon = eps;
        c.eta = eta_xyz.empty() ? EtaVector::isotropic(eta) : EtaVector{eta_xyz[0], eta_xyz[1], eta_xyz[2]};
        c.nudd_eta = eta;
        c.bath_dim = bath_dim;
        c.seed = cell_seed;
        c.system_state = state == "plus" ? SystemState::plus : state == "zero" ? SystemState::zero : SystemState::random;
        c.bath_state = bath_state == "pure" ? BathState::random_pure : BathState::maximally_mixed;
        c.tie = parse_tie(tie);
        c.mode = parse_mode(mode);
        return c;
    }

    void to_json(json& j) const {
        seq.to_json(j);
        j["eps"] = eps;
        if (eta_xyz.empty()) j["eta"] = eta;
        else j["eta-xyz"] = eta_xyz;
        j["bath-dim"] = bath_dim;
        j["seed"] = seed;
        j["state"] = state;
        j["bath-state"] = bath_state;
        j["tie"] = tie;
        j["mode"] = mode;
    }
};

// Parsed values of every subcommand; only the selected one is used.
struct Invocation {
    std::string command;
    std::string config_path;
    std::string output;
    bool append = false;

    SequenceArgs sequence;
    std::string sequence_tie = "inner";

    bool fig2 = false, fig3 = false, fig4 = false;
    std::vector<int> n1, n2;
    std::vector<double> qdd_eta;
    std::vector<double> qdd_eta_xyz;
    GridArgs qdd_grid;
    std::string qdd_mode = "analytic";
    double qdd_rel_tol = default_rel_tol;

    bool fig5 = false;
    int nudd_m = 10;
    std::vector<int> dmin;
    std::vector<double> nudd_eta;
    GridArgs nudd_grid;
    double nudd_rel_tol = default_rel_tol;

    ExperimentArgs simulate;

    std::vector<int> orders_qdd;
    int nmax = 4;
    int max_depth = default_max_depth;
    std::string backend = "auto";
    std::string orders_mode = "analytic";

    ExperimentArgs bound;
    int seeds = 20;
    double loosen = 0.0;
    double margin_floor = 1e-12;

    std::vector<std::string> sweep_sequences;
    std::vector<double> sweep_eps;
    std::vector<double> sweep_eta;
    std::vector<int> sweep_dims{2};
    int sweep_seeds = 1;
    std::uint64_t sweep_seed = 0;
    std::string sweep_state = "random";
    std::string sweep_bath_state = "mixed";
    std::string sweep_tie = "inner";
    std::string sweep_mode = "analytic";
};

inline void add_common(CLI::App* app, Invocation& inv, const std::string& name, bool appendable = false) {
    app->add_option("--config", inv.config_path, "JSON file of flag values (flags override it)");
    app->add_option("--output,-o", inv.output, "write to this file instead of stdout");
    if (appendable) app->add_flag("--append", inv.append, "append rows to an existing output file");
    app->callback([&inv, name] { inv.command = name; });
}

inline std::unique_ptr<CLI::App> make_app(Invocation& inv) {
    auto app = std::make_unique<CLI::App>("Dynamical-decoupling error bounds, sequences and exact simulation",
                                          "ddbound");
    app->require_subcommand(1);
    app->set_version_flag("--version", tool_version);

    auto* seq = app->add_subcommand("sequence", "emit the pulse schedule as CSV");
    inv.sequence.add(seq);
    seq->add_option("--tie", inv.sequence_tie, "order of coincident pulses")
        ->check(CLI::IsMember({"inner", "outer"}));
    add_common(seq, inv, "sequence");

    auto* bounds = app->add_subcommand("bounds", "analytic distance bounds");
    bounds->require_subcommand(1);
    auto* bq = bounds->add_subcommand("qdd", "QDD channel and distance bounds");
    bq->add_flag("--fig2", inv.fig2, "N1 = N2 in {2,6,16,34}, isotropic eta");
    bq->add_flag("--fig3", inv.fig3, "N2 = 10, N1 in {2,10,18,34}, eta_z = 1e-2");
    bq->add_flag("--fig4", inv.fig4, "N2 = 9, N1 in {3,10,19,34}, eta_z = 1e-2");
    bq->add_option("--n1", inv.n1, "inner orders (cartesian with --n2)")->delimiter(',');
    bq->add_option("--n2", inv.n2, "outer orders")->delimiter(',');
    bq->add_option("--eta", inv.qdd_eta, "isotropic eta values")->delimiter(',');
    bq->add_option("--eta-xyz", inv.qdd_eta_xyz, "anisotropic eta triples, flattened")->delimiter(',');
    inv.qdd_grid.add(bq);
    bq->add_option("--mode", inv.qdd_mode, "decoupling-order table")
        ->check(CLI::IsMember({"analytic", "numeric-footnote"}));
    bq->add_option("--rel-tol", inv.qdd_rel_tol, "series truncation tolerance");
    add_common(bq, inv, "bounds qdd");

    auto* bn = bounds->add_subcommand("nudd", "NUDD distance bound");
    bn->add_flag("--fig5", inv.fig5, "m = 10, d_min in {5,10,20,40}, per-eta epsilon window");
    bn->add_option("--m", inv.nudd_m, "qubit count");
    bn->add_option("--dmin", inv.dmin, "decoupling orders d_min")->delimiter(',');
    bn->add_option("--eta", inv.nudd_eta, "eta = J1/J0 values")->delimiter(',');
    inv.nudd_grid.add(bn);
    bn->add_option("--rel-tol", inv.nudd_rel_tol, "series truncation tolerance");
    add_common(bn, inv, "bounds nudd");

    auto* sim = app->add_subcommand("simulate", "one exact system-bath experiment");
    inv.simulate.add(sim);
    add_common(sim, inv, "simulate", true);

    auto* verify = app->add_subcommand("verify", "checks that exit nonzero on failure");
    verify->require_subcommand(1);
    auto* vo = verify->add_subcommand("orders", "certify decoupling orders by exact word integrals");
    vo->add_option("--qdd", inv.orders_qdd, "QDD orders N1 N2")->expected(2);
    vo->add_option("--nmax", inv.nmax, "longest word length");
    vo->add_option("--max-depth", inv.max_depth, "word length guard");
    vo->add_option("--backend", inv.backend, "arithmetic backend")
        ->check(CLI::IsMember({"auto", "exact", "extended"}));
    vo->add_option("--mode", inv.orders_mode, "decoupling-order table")
        ->check(CLI::IsMember({"analytic", "numeric-footnote"}));
    add_common(vo, inv, "verify orders");

    auto* vb = verify->add_subcommand("bound", "bound dominance over random baths");
    inv.bound.add(vb);
    vb->add_option("--seeds", inv.seeds, "number of random baths");
    vb->add_option("--loosen", inv.loosen, "test hook: scale every bound by (1 + f)");
    vb->add_option("--margin-floor", inv.margin_floor, "allowed negative margin from rounding");
    add_common(vb, inv, "verify bound");

    auto* sw = app->add_subcommand("sweep", "grid of simulated experiments");
    sw->add_option("--sequences", inv.sweep_sequences, "orders as N1:N2 (QDD) or a:b:c:d (NUDD, m = 2)")
        ->delimiter(',');
    sw->add_option("--eps", inv.sweep_eps, "epsilon values")->delimiter(',');
    sw->add_option("--eta", inv.sweep_eta, "isotropic eta values")->delimiter(',');
    sw->add_option("--bath-dims", inv.sweep_dims, "bath dimensions")->delimiter(',');
    sw->add_option("--seeds", inv.sweep_seeds, "random baths per cell");
    sw->add_option("--seed", inv.sweep_seed, "master RNG seed");
    sw->add_option("--state", inv.sweep_state, "initial qubit state")
        ->check(CLI::IsMember({"random", "plus", "zero"}));
    sw->add_option("--bath-state", inv.sweep_bath_state, "initial bath state")
        ->check(CLI::IsMember({"mixed", "pure"}));
    sw->add_option("--tie", inv.sweep_tie, "order of coincident pulses")->check(CLI::IsMember({"inner", "outer"}));
    sw->add_option("--mode", inv.sweep_mode, "decoupling-order table")
        ->check(CLI::IsMember({"analytic", "numeric-footnote"}));
    add_common(sw, inv, "sweep", true);
    return app;
}

// Output stream: stdout or a file; `rows_only` when appending to a non-empty file.
class Sink {
public:
    Sink(std::ostream& fallback, const std::string& path, bool append) : os_(&fallback) {
        if (path.empty()) return;
        rows_only_ = append && std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
        file_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!file_) flag_error("--output", "cannot open " + path);
        os_ = &file_;
    }
    std::ostream& stream() { return *os_; }
    bool rows_only() const { return rows_only_; }

private:
    std::ofstream file_;
    std::ostream* os_;
    bool rows_only_ = false;
};

inline int cmd_sequence(const Invocation& inv, std::ostream& out) {
    inv.sequence.validate();
    const TieRule tie = parse_tie(inv.sequence_tie);
    const auto schedule = inv.sequence.is_qdd() ? qdd_schedule(inv.sequence.qdd[0], inv.sequence.qdd[1], tie)
                                                : nudd_schedule(inv.sequence.nudd, inv.sequence.qubits, tie);
    json cfg;
    inv.sequence.to_json(cfg);
    cfg["tie"] = inv.sequence_tie;
    Sink sink(out, inv.output, false);
    auto& os = sink.stream();
    Header{"sequence", cfg, std::nullopt, "tie=" + inv.sequence_tie}.write_csv(os);
    os << "time,axis,qubit,level\n";
    for (const auto& e : schedule.events)
        os << num(e.time) << ',' << axis_char(e.axis) << ',' << e.qubit << ',' << e.level << '\n';
    return exit_ok;
}

inline int cmd_bounds_qdd(const Invocation& inv, std::ostream& out) {
    if (inv.fig2 + inv.fig3 + inv.fig4 > 1) flag_error("--fig2/--fig3/--fig4", "choose at most one figure preset");
    inv.qdd_grid.validate();
    if (!(inv.qdd_rel_tol > 0.0 && inv.qdd_rel_tol <= 1e-6)) flag_error("--rel-tol", "must lie in (0, 1e-6]");
    const auto eps = inv.qdd_grid.grid();
    const bool preset = inv.fig2 || inv.fig3 || inv.fig4;
    FigureSweep sweep;
    json cfg;
    if (preset) {
        sweep = inv.fig2 ? figure2_sweep(eps) : inv.fig3 ? figure3_sweep(eps) : figure4_sweep(eps);
        cfg[inv.fig2 ? "fig2" : inv.fig3 ? "fig3" : "fig4"] = true;
    } else {
        if (inv.n1.empty() || inv.n2.empty())
            flag_error("--n1/--n2", "give both order lists or one of --fig2, --fig3, --fig4");
        for (int n : inv.n1)
            if (n < 0) flag_error("--n1", "orders must be >= 0");
        for (int n : inv.n2)
            if (n < 0) flag_error("--n2", "orders must be >= 0");
        if (inv.qdd_eta_xyz.size() % 3 != 0) flag_error("--eta-xyz", "expects triples eta_x,eta_y,eta_z");
        sweep.epsilons = eps;
        for (int a : inv.n1)
            for (int b : inv.n2) sweep.sequences.emplace_back(a, b);
        for (double e : inv.qdd_eta) sweep.etas.push_back(EtaVector::isotropic(e));
        for (std::size_t k = 0; k < inv.qdd_eta_xyz.size(); k += 3)
            sweep.etas.push_back({inv.qdd_eta_xyz[k], inv.qdd_eta_xyz[k + 1], inv.qdd_eta_xyz[k + 2]});
        if (inv.qdd_eta.empty() && inv.qdd_eta_xyz.empty()) sweep.etas.push_back(EtaVector::isotropic(1.0));
        for (const auto& e : sweep.etas)
            with_flag("--eta", [&] {
                validate_eta(e);
                return 0;
            });
        cfg["n1"] = inv.n1;
        cfg["n2"] = inv.n2;
        if (!inv.qdd_eta.empty()) cfg["eta"] = inv.qdd_eta;
        if (!inv.qdd_eta_xyz.empty()) cfg["eta-xyz"] = inv.qdd_eta_xyz;
    }
    sweep.mode = parse_mode(inv.qdd_mode);
    inv.qdd_grid.to_json(cfg);
    cfg["mode"] = inv.qdd_mode;
    cfg["rel-tol"] = inv.qdd_rel_tol;

    Sink sink(out, inv.output, false);
    auto& os = sink.stream();
    Header{"bounds qdd", cfg, std::nullopt, mode_label(sweep.mode)}.write_csv(os);
    os << "epsilon,N1,N2,eta_x,eta_y,eta_z,d_x,d_y,d_z,L_x,L_y,L_z,D_bound,D_leading\n";
    std::size_t failed = 0;
    for (const auto& r : figure_sweep(sweep)) {
        failed += !r.converged;
        os << num(r.epsilon) << ',' << r.n1 << ',' << r.n2 << ',' << num(r.eta.x) << ',' << num(r.eta.y) << ','
           << num(r.eta.z) << ',' << r.orders.x << ',' << r.orders.y << ',' << r.orders.z << ','
           << num(r.bounds.x) << ',' << num(r.bounds.y) << ',' << num(r.bounds.z) << ',' << num(r.distance_bound)
           << ',' << num(r.leading_term) << '\n';
    }
    if (failed) {
        os << "# nonconverged_rows: " << failed << '\n';
        return exit_numerical;
    }
    return exit_ok;
}

inline int cmd_bounds_nudd(const Invocation& inv, std::ostream& out) {
    inv.nudd_grid.validate();
    if (!(inv.nudd_rel_tol > 0.0 && inv.nudd_rel_tol <= 1e-6)) flag_error("--rel-tol", "must lie in (0, 1e-6]");
    NuddSweep sweep;
    json cfg;
    if (inv.fig5) {
        sweep = figure5_sweep(inv.nudd_grid.eps_points);
        if (!inv.nudd_grid.eps.empty()) sweep.epsilons = {inv.nudd_grid.eps};
        cfg["fig5"] = true;
        if (!inv.nudd_grid.eps.empty()) cfg["eps"] = inv.nudd_grid.eps;
        else cfg["eps-points"] = inv.nudd_grid.eps_points;
    } else {
        if (inv.nudd_m < 1 || inv.nudd_m > max_nudd_qubits) flag_error("--m", "must lie in 1..31");
        if (inv.dmin.empty()) flag_error("--dmin", "give at least one order or use --fig5");
        for (int d : inv.dmin)
            if (d < 0) flag_error("--dmin", "orders must be >= 0");
        sweep.m = inv.nudd_m;
        sweep.d_mins = inv.dmin;
        sweep.etas = inv.nudd_eta.empty() ? std::vector<double>{1.0} : inv.nudd_eta;
        for (double e : sweep.etas)
            if (!(std::isfinite(e) && e >= 0.0)) flag_error("--eta", "values must be finite and >= 0");
        sweep.epsilons = {inv.nudd_grid.grid()};
        cfg["m"] = inv.nudd_m;
        cfg["dmin"] = inv.dmin;
        cfg["eta"] = sweep.etas;
        inv.nudd_grid.to_json(cfg);
    }
    cfg["rel-tol"] = inv.nudd_rel_tol;

    Sink sink(out, inv.output, false);
    auto& os = sink.stream();
    Header{"bounds nudd", cfg, std::nullopt, mode_label(OrderMode::analytic)}.write_csv(os);
    os << "epsilon,m,d_min,eta,Delta,D_bound,D_leading\n";
    std::size_t failed = 0;
    for (const auto& r : nudd_sweep(sweep)) {
        failed += !r.converged;
        os << num(r.epsilon) << ',' << r.m << ',' << r.d_min << ',' << num(r.eta) << ',' << num(r.delta) << ','
           << num(r.distance_bound) << ',' << num(r.leading_term) << '\n';
    }
    if (failed) {
        os << "# nonconverged_rows: " << failed << '\n';
        return exit_numerical;
    }
    return exit_ok;
}

inline const char* sim_columns() {
    return "seed,kind,sequence,qubits,mode,epsilon,eta_x,eta_y,eta_z,bath_dim,d_min,D_actual,D_system,D_bound,"
           "margin,norm_x,norm_y,norm_z,L_x,L_y,L_z,error_norm_sum,error_sum_bound,unitarity_residual,"
           "completeness_residual,cross_residual,config_hash\n";
}

inline void write_sim_row(std::ostream& os, const ExperimentConfig& c, const SimResult& r, const std::string& hash) {
    const bool qdd = c.kind == SequenceKind::qdd;
    const EtaVector eta = qdd ? c.eta : EtaVector::isotropic(c.nudd_eta);
    os << c.seed << ',' << (qdd ? "qdd" : "nudd") << ',' << join(c.orders, ':') << ',' << c.qubits << ','
       << to_string(c.mode) << ',' << num(c.epsilon) << ',' << num(eta.x) << ',' << num(eta.y) << ','
       << num(eta.z) << ',' << c.bath_dim << ',' << r.d_min << ',' << num(r.distance_actual) << ','
       << num(r.system_distance) << ',' << num(r.distance_bound) << ',' << num(r.margin) << ',';
    for (int a = 0; a < 3; ++a) os << (qdd ? num(r.channel_norms[static_cast<std::size_t>(a + 1)]) : "") << ',';
    for (int a = 0; a < 3; ++a) os << (qdd ? num(r.channel_bounds[static_cast<std::size_t>(a)]) : "") << ',';
    os << num(r.error_norm_sum) << ',' << (qdd ? "" : num(r.error_sum_bound)) << ',' << num(r.unitarity_residual)
       << ',' << num(r.channel_residuals.completeness) << ',' << num(r.channel_residuals.cross) << ',' << hash
       << '\n';
}

inline int cmd_simulate(const Invocation& inv, std::ostream& out) {
    inv.simulate.validate();
    json cfg;
    inv.simulate.to_json(cfg);
    const Header header{"simulate", cfg, inv.simulate.seed, mode_label(parse_mode(inv.simulate.mode))};
    const auto config = inv.simulate.config(inv.simulate.seed);
    const auto result = run_experiment(config);
    Sink sink(out, inv.output, inv.append);
    auto& os = sink.stream();
    if (!sink.rows_only()) {
        header.write_csv(os);
        os << sim_columns();
    }
    write_sim_row(os, config, result, header.hash());
    return exit_ok;
}

inline int cmd_verify_orders(const Invocation& inv, std::ostream& out) {
    if (inv.orders_qdd.size() != 2) flag_error("--qdd", "give the QDD orders N1 N2");
    for (int n : inv.orders_qdd)
        if (n < 0) flag_error("--qdd", "pulse orders must be >= 0, got " + std::to_string(n));
    if (inv.max_depth < 1) flag_error("--max-depth", "must be >= 1");
    if (inv.nmax < 1 || inv.nmax > inv.max_depth)
        flag_error("--nmax", "must lie in 1.." + std::to_string(inv.max_depth) + " (the depth guard)");
    const Backend backend = inv.backend == "exact"      ? Backend::exact
                            : inv.backend == "extended" ? Backend::extended
                                                        : Backend::automatic;
    const auto cert = with_flag("--backend", [&] {
        return verify_orders(inv.orders_qdd[0], inv.orders_qdd[1], inv.nmax, backend, parse_mode(inv.orders_mode),
                             inv.max_depth);
    });

    json cfg;
    cfg["qdd"] = inv.orders_qdd;
    cfg["nmax"] = inv.nmax;
    cfg["max-depth"] = inv.max_depth;
    cfg["backend"] = inv.backend;
    cfg["mode"] = inv.orders_mode;
    json report;
    report["N1"] = cert.n1;
    report["N2"] = cert.n2;
    report["n_max"] = cert.n_max;
    report["backend"] = to_string(cert.backend);
    report["zero_threshold"] = cert.backend == Backend::exact ? json(0) : json(extended_zero_threshold);
    report["orders"] = {{"x", cert.orders.x}, {"y", cert.orders.y}, {"z", cert.orders.z}};
    report["entries"] = json::array();
    for (const auto& e : cert.entries) {
        report["entries"].push_back({{"channel", channel_name(e.channel)},
                                     {"length", e.length},
                                     {"order", e.order},
                                     {"words", e.words},
                                     {"max_abs", e.max_abs},
                                     {"max_abs_exact", e.max_abs_text},
                                     {"witness", e.witness.empty() ? json(nullptr) : json(to_string(e.witness))},
                                     {"status", to_string(e.status)}});
    }
    report["violations"] = cert.violations;
    json doc;
    doc["header"] = Header{"verify orders", cfg, std::nullopt, mode_label(parse_mode(inv.orders_mode))}.to_json();
    doc["report"] = report;
    doc["passed"] = cert.passed();
    Sink sink(out, inv.output, false);
    sink.stream() << doc.dump(2) << '\n';
    return cert.passed() ? exit_ok : exit_assertion;
}

inline constexpr double unitarity_tolerance = 1e-12;
inline constexpr double channel_residual_tolerance = 1e-10;

inline int cmd_verify_bound(const Invocation& inv, std::ostream& out) {
    inv.bound.validate();
    if (inv.seeds < 0) flag_error("--seeds", "must be >= 0");
    if (!(std::isfinite(inv.loosen) && inv.loosen >= -1.0)) flag_error("--loosen", "must be >= -1");
    if (!(inv.margin_floor >= 0.0)) flag_error("--margin-floor", "must be >= 0");
    const double factor = 1.0 + inv.loosen;

    std::vector<ExperimentConfig> configs;
    for (int i = 0; i < inv.seeds; ++i) configs.push_back(inv.bound.config(derive_seed(inv.bound.seed, i)));
    std::vector<SimResult> results(configs.size());
    parallel_for(configs.size(), [&](std::size_t i) { results[i] = run_experiment(configs[i]); });

    json rows = json::array();
    std::size_t failures = 0;
    double min_margin = INFINITY;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& c = configs[i];
        const auto& r = results[i];
        json row;
        row["seed"] = c.seed;
        row["D_actual"] = r.distance_actual;
        row["D_bound"] = r.distance_bound * factor;
        double margin = r.distance_bound * factor - r.distance_actual;
        if (c.kind == SequenceKind::qdd) {
            json ch;
            const char* names[] = {"x", "y", "z"};
            for (std::size_t a = 0; a < 3; ++a) {
                const double norm = r.channel_norms[a + 1];
                const double bound = r.channel_bounds[a] * factor;
                ch[names[a]] = {{"norm", norm}, {"L", bound}, {"margin", bound - norm}};
                margin = std::min(margin, bound - norm);
            }
            row["channels"] = ch;
        } else {
            const double bound = r.error_sum_bound * factor;
            row["error_norm_sum"] = r.error_norm_sum;
            row["error_sum_bound"] = bound;
            margin = std::min(margin, bound - r.error_norm_sum);
        }
        row["margin"] = margin;
        row["unitarity_residual"] = r.unitarity_residual;
        row["completeness_residual"] = r.channel_residuals.completeness;
        row["cross_residual"] = r.channel_residuals.cross;
        const bool ok = margin >= -inv.margin_floor && r.unitarity_residual <= unitarity_tolerance &&
                        r.channel_residuals.completeness <= channel_residual_tolerance &&
                        r.channel_residuals.cross <= channel_residual_tolerance;
        row["pass"] = ok;
        failures += !ok;
        min_margin = std::min(min_margin, margin);
        rows.push_back(row);
    }

    json cfg;
    inv.bound.to_json(cfg);
    cfg["seeds"] = inv.seeds;
    cfg["loosen"] = inv.loosen;
    cfg["margin-floor"] = inv.margin_floor;
    json doc;
    doc["header"] = Header{"verify bound", cfg, inv.bound.seed, mode_label(parse_mode(inv.bound.mode))}.to_json();
    doc["rows"] = rows;
    doc["summary"] = {{"runs", results.size()},
                      {"failures", failures},
                      {"min_margin", results.empty() ? json(nullptr) : json(min_margin)}};
    doc["passed"] = failures == 0;
    Sink sink(out, inv.output, false);
    sink.stream() << doc.dump(2) << '\n';
    return failures == 0 ? exit_ok : exit_assertion;
}

inline std::vector<int> parse_orders_spec(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            flag_error("--sequences", "cannot parse order '" + part + "' in '" + spec + "'");
        }
    }
    if (out.size() != 2 && out.size() != 4)
        flag_error("--sequences", "'" + spec + "' must be N1:N2 or four NUDD orders a:b:c:d");
    for (int n : out)
        if (n < 0) flag_error("--sequences", "orders must be >= 0 in '" + spec + "'");
    return out;
}

inline int cmd_sweep(const Invocation& inv, std::ostream& out) {
    if (inv.sweep_seeds < 0) flag_error("--seeds", "must be >= 0");
    std::vector<std::vector<int>> sequences;
    for (const auto& s : inv.sweep_sequences) sequences.push_back(parse_orders_spec(s));
    const std::vector<double> etas = inv.sweep_eta.empty() ? std::vector<double>{1.0} : inv.sweep_eta;

    std::vector<ExperimentArgs> cells;
    for (const auto& orders : sequences)
        for (double eps : inv.sweep_eps)
            for (double eta : etas)
                for (int dim : inv.sweep_dims)
                    for (int k = 0; k < inv.sweep_seeds; ++k) {
                        ExperimentArgs a;
                        if (orders.size() == 2) a.seq.qdd = orders;
                        else {
                            a.seq.nudd = orders;
                            a.seq.qubits = 2;
                        }
                        a.eps = eps;
                        a.eta = eta;
                        a.bath_dim = dim;
                        a.state = inv.sweep_state;
                        a.bath_state = inv.sweep_bath_state;
                        a.tie = inv.sweep_tie;
                        a.mode = inv.sweep_mode;
                        a.validate();
                        cells.push_back(a);
                    }
    std::vector<ExperimentConfig> configs;
    for (std::size_t i = 0; i < cells.size(); ++i) configs.push_back(cells[i].config(derive_seed(inv.sweep_seed, i)));
    std::vector<SimResult> results(configs.size());
    parallel_for(configs.size(), [&](std::size_t i) { results[i] = run_experiment(configs[i]); });

    json cfg;
    cfg["sequences"] = inv.sweep_sequences;
    cfg["eps"] = inv.sweep_eps;
    cfg["eta"] = etas;
    cfg["bath-dims"] = inv.sweep_dims;
    cfg["seeds"] = inv.sweep_seeds;
    cfg["seed"] = inv.sweep_seed;
    cfg["state"] = inv.sweep_state;
    cfg["bath-state"] = inv.sweep_bath_state;
    cfg["tie"] = inv.sweep_tie;
    cfg["mode"] = inv.sweep_mode;
    const Header header{"sweep", cfg, inv.sweep_seed, mode_label(parse_mode(inv.sweep_mode))};
    Sink sink(out, inv.output, inv.append);
    auto& os = sink.stream();
    if (!sink.rows_only()) {
        header.write_csv(os);
        os << sim_columns();
    }
    for (std::size_t i = 0; i < configs.size(); ++i) write_sim_row(os, configs[i], results[i], header.hash());
    return exit_ok;
}

namespace detail {

inline CLI::App* selected_leaf(CLI::App* app) {
    for (;;) {
        auto subs = app->get_subcommands();
        if (subs.empty()) return app;
        app = subs.front();
    }
}

// Command-line tokens for config keys the user did not pass as flags.
inline std::vector<std::string> config_tokens(CLI::App* leaf, const std::string& command, const std::string& path) {
    std::ifstream in(path);
    if (!in) flag_error("--config", "cannot read " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        flag_error("--config", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) flag_error("--config", "top level must be a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : doc.items()) {
        const CLI::Option* opt = key == "config" ? nullptr : leaf->get_option_no_throw("--" + key);
        if (opt == nullptr) flag_error("--config", "unknown key '" + key + "' for " + command);
        if (opt->count() > 0) continue;
        auto scalar = [&](const json& v) -> std::string {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_integer()) return v.dump();
            if (v.is_number()) return num(v.get<double>());
            if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
            flag_error("--config", "key '" + key + "' has an unsupported value type");
        };
        const bool flag = opt->get_expected_min() == 0;
        if (flag) {
            if (!value.is_boolean()) flag_error("--config", "key '" + key + "' expects true or false");
            if (value.get<bool>()) tokens.push_back("--" + key);
            continue;
        }
        tokens.push_back("--" + key);
        if (value.is_array()) {
            for (const auto& v : value) tokens.push_back(scalar(v));
        } else {
            tokens.push_back(scalar(value));
        }
    }
    return tokens;
}

inline int dispatch(const Invocation& inv, std::ostream& out) {
    if (inv.command == "sequence") return cmd_sequence(inv, out);
    if (inv.command == "bounds qdd") return cmd_bounds_qdd(inv, out);
    if (inv.command == "bounds nudd") return cmd_bounds_nudd(inv, out);
    if (inv.command == "simulate") return cmd_simulate(inv, out);
    if (inv.command == "verify orders") return cmd_verify_orders(inv, out);
    if (inv.command == "verify bound") return cmd_verify_bound(inv, out);
    if (inv.command == "sweep") return cmd_sweep(inv, out);
    throw InvalidArgument("no command selected");
}

} // namespace detail

// Runs one invocation; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    // Parses into a fresh app; a value means "stop with this exit code".
    auto parse = [&](Invocation& inv, std::unique_ptr<CLI::App>& app,
                     std::vector<std::string> tokens) -> std::optional<int> {
        app = make_app(inv);
        std::reverse(tokens.begin(), tokens.end());
        try {
            app->parse(tokens);
        } catch (const CLI::CallForHelp&) {
            out << app->help();
            return exit_ok;
        } catch (const CLI::CallForAllHelp&) {
            out << app->help("", CLI::AppFormatMode::All);
            return exit_ok;
        } catch (const CLI::CallForVersion&) {
            out << tool_version << '\n';
            return exit_ok;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << '\n';
            return exit_invalid;
        }
        return std::nullopt;
    };

    try {
        auto inv = std::make_unique<Invocation>();
        std::unique_ptr<CLI::App> app;
        if (auto rc = parse(*inv, app, args)) return *rc;
        if (!inv->config_path.empty()) {
            auto tokens = args;
            const auto extra = detail::config_tokens(detail::selected_leaf(app.get()), inv->command, inv->config_path);
            tokens.insert(tokens.end(), extra.begin(), extra.end());
            app.reset();
            inv = std::make_unique<Invocation>();
            if (auto rc = parse(*inv, app, tokens)) return *rc;
        }
        return detail::dispatch(*inv, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return exit_invalid;
    } catch (const NonConvergence& e) {
        err << "error: non-convergence: " << e.what() << '\n';
        return exit_numerical;
    } catch (const NumericalFailure& e) {
        err << "error: numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace ddbound::cli
