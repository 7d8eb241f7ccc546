#include "roughcal/calibration.hpp"
#include "roughcal/conic.hpp"
#include "roughcal/diagnostics.hpp"
#include "roughcal/errors.hpp"
#include "roughcal/forward.hpp"
#include "roughcal/log.hpp"
#include "roughcal/report.hpp"
#include "roughcal/separators.hpp"
#include "roughcal/tensor.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace roughcal;
using json = nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitFailure = 3;

Network load_with_env(const std::string& path)
{
    Network net = load_network(path);
    Fluid fluid = net.pipes.fluid;
    bool changed = false;
    for (auto [name, field] : {std::pair{"ROUGHCAL_RHO", &fluid.rho}, std::pair{"ROUGHCAL_ETA", &fluid.eta},
                               std::pair{"ROUGHCAL_G", &fluid.g}}) {
        if (const char* v = std::getenv(name)) {
            try {
                *field = std::stod(v);
            } catch (const std::exception&) {
                throw InputError(std::string("bad value in ") + name);
            }
            changed = true;
        }
    }
    if (changed) net.pipes = PipeCatalog::from_dimensions(net.pipes.length, net.pipes.diameter, fluid);
    return net;
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

std::string fmt(double v, const char* spec = "%.6g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

struct CalibrateOpts {
    std::string network, measurements, x0, report, table;
    std::string method = "tensor";
    int launches = 13, inner_runs = 50, parallel = 1, max_iter = 300;
    std::uint64_t seed = 0;
    double eps_f = 1e-7, eps_x = 1e-9;
    bool no_scaling = false;
};

int cmd_calibrate(const CalibrateOpts& o)
{
    Problem pb(load_with_env(o.network), load_measurements(o.measurements, load_with_env(o.network).topo));
    const Vec x = o.x0.empty() ? default_x0(pb) : load_state(o.x0, pb);
    const CalibrationState x0 = make_state(pb, x);
    CampaignConfig cfg;
    cfg.launches = o.launches;
    cfg.inner_runs = o.inner_runs;
    cfg.method = o.method == "newton" ? Method::newton : Method::tensor;
    cfg.seed = o.seed;
    cfg.parallel = o.parallel;
    cfg.solver.eps_f = o.eps_f;
    cfg.solver.eps_x = o.eps_x;
    cfg.solver.max_iter = o.max_iter;
    cfg.solver.scaling_enabled = !o.no_scaling;

    CampaignResult cr;
    try {
        cr = run_campaign(pb, x0, cfg);
    } catch (const SolveError& e) {
        std::cerr << "calibration failed: " << e.what() << '\n';
        return kExitFailure;
    }
    const json rep = campaign_report(pb, cfg, x0, cr);
    if (!o.report.empty()) write_text(o.report, rep.dump(2) + "\n");
    write_text(o.table, campaign_table(pb, cr));
    return 0;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::vector<std::string>& header)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            c.erase(0, c.find_first_not_of(" \t\r"));
            c.erase(c.find_last_not_of(" \t\r") + 1);
            cells.push_back(c);
        }
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) header = cells;
        else rows.push_back(cells);
        first = false;
    }
    if (header.empty()) throw InputError(path + " is empty");
    return rows;
}

int column(const std::vector<std::string>& header, const std::string& name, const std::string& file)
{
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw InputError(file + ": missing column " + name);
}

struct SimulateOpts {
    std::string network, roughness_file, demands_file, out, truth_out;
    int random_sets = 0;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateOpts& o)
{
    const Network net = load_with_env(o.network);
    const auto& t = net.topo;
    Vec eps = net.roughness;
    if (!o.roughness_file.empty()) {
        std::vector<std::string> header;
        const auto rows = read_csv(o.roughness_file, header);
        const int cp = column(header, "pipe", o.roughness_file), ce = column(header, "eps_mm", o.roughness_file);
        eps = Vec::Constant(t.n_l, std::nan(""));
        for (const auto& r : rows) {
            auto it = std::find(t.pipe_ids.begin(), t.pipe_ids.end(), r.at(cp));
            if (it == t.pipe_ids.end()) throw InputError("unknown pipe " + r.at(cp));
            eps(it - t.pipe_ids.begin()) = std::stod(r.at(ce)) * 1e-3;
        }
    }
    if (eps.size() != t.n_l || !eps.allFinite()) throw InputError("roughness missing for some pipes");

    std::vector<Vec> demands, heads;
    Vec default_hs = net.source_heads;
    if (!o.demands_file.empty()) {
        std::vector<std::string> header;
        const auto rows = read_csv(o.demands_file, header);
        const int cs = column(header, "set", o.demands_file), cn = column(header, "node", o.demands_file);
        const int cq = column(header, "q_lps", o.demands_file), ch = column(header, "h_s_m", o.demands_file);
        std::map<int, std::pair<Vec, Vec>> sets;
        for (const auto& r : rows) {
            const int id = std::stoi(r.at(cs));
            auto [it, fresh] = sets.try_emplace(id, Vec::Zero(t.n_j), default_hs);
            const std::string& node = r.at(cn);
            auto src = std::find(t.source_ids.begin(), t.source_ids.end(), node);
            if (src != t.source_ids.end()) {
                if (!r.at(ch).empty()) it->second.second(src - t.source_ids.begin()) = std::stod(r.at(ch));
                continue;
            }
            auto in = std::find(t.node_ids.begin(), t.node_ids.end(), node);
            if (in == t.node_ids.end()) throw InputError("unknown node " + node);
            if (!r.at(cq).empty()) it->second.first(in - t.node_ids.begin()) = std::stod(r.at(cq)) * 1e-3;
            if (!r.at(ch).empty() && t.n_s == 1) it->second.second(0) = std::stod(r.at(ch));
        }
        for (auto& [id, s] : sets) {
            demands.push_back(s.first);
            heads.push_back(s.second);
        }
    }
    if (o.random_sets > 0) {
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> q(0.5e-3, 2.5e-3);
        for (int i = 0; i < o.random_sets; ++i) {
            Vec d(t.n_j);
            for (int n = 0; n < t.n_j; ++n) d(n) = q(rng);
            demands.push_back(d);
            heads.push_back(default_hs);
        }
    }
    if (demands.empty()) throw InputError("simulate needs --demands-file or --random-sets");
    for (const auto& h : heads)
        if (!h.allFinite()) throw InputError("source head missing for a set");

    GeneratedMeasurements gm;
    try {
        gm = generate_measurements(net, eps, demands, heads);
    } catch (const SolveError& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return kExitFailure;
    }
    std::ostringstream csv;
    write_measurements(csv, t, gm.sets);
    write_text(o.out, csv.str());
    if (!o.truth_out.empty()) {
        std::ostringstream truth;
        write_truth(truth, net, eps, gm);
        write_text(o.truth_out, truth.str());
    }
    return 0;
}

struct CheckOpts {
    std::string network, measurements, at, json_out;
    bool hessian = false;
    std::uint64_t seed = 0;
};

json check_state(const Problem& pb, const Vec& x)
{
    json out;
    const auto rep = residual(pb, x);
    out["v_m3s"] = rep.v;
    out["v_lps"] = rep.v * 1e3;
    const auto fd = derivative_fd_errors(pb, x);
    out["derivative_fd_rel_error"] = {{"p_eps", fd[0]}, {"p_dh", fd[1]}, {"p_eps2", fd[2]},
                                      {"p_epsdh", fd[3]}, {"p_dh2", fd[4]}};
    out["jacobian_fd_rel_error"] = jacobian_fd_error(pb, x);
    const Mat J = jacobian(pb, x);
    out["jacobian_rank"] = numerical_rank(J);
    out["unknowns"] = pb.n_x();

    const TensorModel model(pb, x);
    const Vec zero = Vec::Zero(pb.n_x());
    const Vec m0 = model.residual(zero).stacked;
    out["tensor_residual_at_zero_rel_error"] = (m0 - rep.f).norm() / std::max(rep.f.norm(), 1e-300);
    out["tensor_jacobian_at_zero_rel_error"] =
        (model.jacobian(zero) - J).norm() / std::max(J.norm(), 1e-300);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    Vec d(pb.n_x());
    for (int k = 0; k < pb.n_x(); ++k) d(k) = n01(rng) * (k < pb.n_l() ? 1e-4 : 0.1);
    const Vec bf = bruteforce_tensor_residual(pb, x, d);
    const Vec tr = model.residual(d).stacked;
    out["bruteforce_tensor_rel_error"] = (bf - tr).norm() / std::max(tr.norm(), 1e-300);

    out["root_diagnostic"] = root_diagnostic_json(root_diagnostic(model.bundles()));
    const auto kr = kernel_rhs(pb, rep.per_set);
    const auto sep = separator_table(pb, model.bundles(), kr.fbar0);
    const auto kt = kernel_transform(pb, model.bundles(), sep, rep.per_set);
    const Eigen::VectorXcd kf = kernel_form(pb, kt, 0, d);
    out["kernel_form_gap"] = (kf - tr.cast<std::complex<double>>()).norm() / std::max(tr.norm(), 1e-300);
    out["beta_inversion_defect"] = beta_transform(kt, 0).inversion_defect;
    return out;
}

int cmd_check(const CheckOpts& o)
{
    json out;
    if (!o.network.empty()) {
        if (o.measurements.empty()) throw InputError("check needs --measurements with --network");
        const Network net = load_with_env(o.network);
        Problem pb(net, load_measurements(o.measurements, net.topo));
        const Vec x = o.at.empty() ? default_x0(pb) : load_state(o.at, pb);
        out["state"] = check_state(pb, x);
    }
    if (o.hessian) {
        std::mt19937_64 rng(o.seed);
        RandomNetworkOptions ro;
        ro.n_j = 3;
        ro.n_l = 4;
        ro.n_p = 2;
        const Network net = random_network(ro, rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<Vec> demands, heads;
        for (int i = 0; i < 2; ++i) {
            Vec q(net.topo.n_j);
            for (int n = 0; n < q.size(); ++n) q(n) = 1e-3 * (0.5 + 2.0 * u(rng));
            demands.push_back(q);
            heads.push_back(Vec::Constant(net.topo.n_s, 50.0));
        }
        Vec eps(net.topo.n_l);
        for (int j = 0; j < eps.size(); ++j) eps(j) = 0.05 * net.pipes.diameter(j) * u(rng);
        const auto gm = generate_measurements(net, eps, demands, heads);
        Problem pb(net, gm.sets);
        Vec x(pb.n_x());
        x.head(pb.n_l()) = eps * 1.1;
        for (int i = 0; i < pb.n_m(); ++i)
            for (int r = 0; r < pb.n_free(); ++r)
                x(pb.h_offset(i) + r) = gm.truth[i].h(net.topo.unsensed[r]) + 0.05;
        out["random_network"] = check_state(pb, x);
    }
    if (out.empty()) throw InputError("check needs --network/--measurements or --hessian-bruteforce");
    const std::string text = out.dump(2) + "\n";
    write_text(o.json_out, text);
    return 0;
}

int cmd_factor_conic(const std::vector<double>& c)
{
    const Conic q{c[0], c[1], c[2], c[3], c[4], c[5]};
    const ConicClass cls = classify(q);
    std::cout << "conic: " << fmt(q.a) << " x^2 + 2*" << fmt(q.h) << " xy + " << fmt(q.b) << " y^2 + 2*"
              << fmt(q.f) << " x + 2*" << fmt(q.g) << " y + " << fmt(q.c) << '\n';
    std::cout << "class: " << to_string(cls) << '\n';
    std::cout << "Delta = " << fmt(q.delta()) << ", Delta_hat = " << fmt(q.delta_hat()) << '\n';
    if (cls == ConicClass::non_degenerate) {
        std::cout << "non-degenerate, Delta=" << fmt(q.delta()) << '\n';
        return 0;
    }
    std::cout << "real factorizable: " << (is_real_factorizable(q) ? "yes" : "no") << '\n';
    std::cout << "feasible sign triples:";
    for (const auto& t : feasible_triples(q)) std::cout << ' ' << t.str();
    std::cout << '\n';
    for (const auto& lp : factor(q)) {
        std::cout << (lp.signs ? lp.signs->str() : std::string("direct")) << ": ";
        if (std::abs(lp.nu.imag()) <= 1e-12 * std::abs(lp.nu)) std::cout << fmt(lp.nu.real());
        else std::cout << '(' << fmt(lp.nu.real()) << fmt(lp.nu.imag(), "%+.6g") << "i)";
        std::cout << " (" << format_line(lp.first) << ")(" << format_line(lp.second) << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pipe roughness calibration for water distribution networks"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Print solver warnings to stderr");

    CalibrateOpts co;
    auto* cal = app.add_subcommand("calibrate", "Multi-start roughness calibration");
    cal->add_option("--network", co.network, "Network JSON file")->required();
    cal->add_option("--measurements", co.measurements, "Measurement CSV file")->required();
    cal->add_option("--method", co.method, "tensor or newton")->check(CLI::IsMember({"tensor", "newton"}));
    cal->add_option("--launches", co.launches, "Outer launches")->check(CLI::PositiveNumber);
    cal->add_option("--inner-runs", co.inner_runs, "Solver runs per launch")->check(CLI::PositiveNumber);
    cal->add_option("--seed", co.seed, "Random seed");
    cal->add_option("--parallel", co.parallel, "Launches solved concurrently")->check(CLI::PositiveNumber);
    cal->add_option("--x0", co.x0, "Initial state JSON");
    cal->add_option("--report", co.report, "JSON report path");
    cal->add_option("--table", co.table, "Text table path (default stdout)");
    cal->add_option("--eps-f", co.eps_f, "Residual tolerance in m^3/s");
    cal->add_option("--eps-x", co.eps_x, "Step tolerance");
    cal->add_option("--max-iter", co.max_iter, "Iterations per solver run")->check(CLI::PositiveNumber);
    cal->add_flag("--no-scaling", co.no_scaling, "Disable variable scaling in the Newton path");

    SimulateOpts so;
    auto* sim = app.add_subcommand("simulate", "Generate steady-state measurements");
    sim->add_option("--network", so.network, "Network JSON file")->required();
    sim->add_option("--roughness-file", so.roughness_file, "CSV with columns pipe,eps_mm");
    sim->add_option("--demands-file", so.demands_file, "CSV with columns set,node,q_lps,h_s_m");
    sim->add_option("--random-sets", so.random_sets, "Draw this many random demand sets");
    sim->add_option("--seed", so.seed, "Random seed");
    sim->add_option("--out", so.out, "Measurement CSV path (default stdout)");
    sim->add_option("--truth-out", so.truth_out, "Ground-truth JSON path");

    CheckOpts ko;
    auto* chk = app.add_subcommand("check", "Numerical self-checks at a state");
    chk->add_option("--network", ko.network, "Network JSON file");
    chk->add_option("--measurements", ko.measurements, "Measurement CSV file");
    chk->add_option("--at", ko.at, "State JSON");
    chk->add_flag("--hessian-bruteforce", ko.hessian, "Compare against explicit Hessians on a random network");
    chk->add_option("--seed", ko.seed, "Random seed");
    chk->add_option("--json", ko.json_out, "Output path (default stdout)");

    std::vector<double> coeffs;
    auto* fc = app.add_subcommand("factor-conic", "Factor a x^2+2hxy+by^2+2fx+2gy+c into lines");
    fc->add_option("coefficients", coeffs, "a h b f g c")->expected(6)->required()->allow_extra_args(false);
    fc->prefix_command(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }
    if (verbose) set_warning_sink([](std::string_view m) { std::cerr << "warning: " << m << '\n'; });

    try {
        if (*cal) return cmd_calibrate(co);
        if (*sim) return cmd_simulate(so);
        if (*chk) return cmd_check(ko);
        if (*fc) return cmd_factor_conic(coeffs);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
