#include "roughcal/report.hpp"

#include "roughcal/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace roughcal {

using json = nlohmann::json;

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Vec parse_state(const json& doc, const Problem& pb)
{
    try {
        const auto eps = doc.at("eps_mm").get<std::vector<double>>();
        const auto h = doc.at("h_N_m").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(eps.size()) != pb.n_l()) throw InputError("state: eps_mm needs one value per pipe");
        if (static_cast<int>(h.size()) != pb.n_m()) throw InputError("state: h_N_m needs one row per set");
        Vec x(pb.n_x());
        for (int j = 0; j < pb.n_l(); ++j) x(j) = eps[j] * 1e-3;
        for (int i = 0; i < pb.n_m(); ++i) {
            if (static_cast<int>(h[i].size()) != pb.n_free())
                throw InputError("state: h_N_m row " + std::to_string(i + 1) + " has wrong length");
            for (int r = 0; r < pb.n_free(); ++r) x(pb.h_offset(i) + r) = h[i][r];
        }
        return x;
    } catch (const json::exception& e) {
        throw InputError(std::string("state: ") + e.what());
    }
}

Vec load_state(const std::filesystem::path& path, const Problem& pb)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open state file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("state file " + path.string() + ": " + e.what());
    }
    return parse_state(doc, pb);
}

json state_json(const Problem& pb, const Vec& x)
{
    json doc;
    doc["eps_mm"] = to_std(pb.eps(x) * 1e3);
    json h = json::array();
    for (int i = 0; i < pb.n_m(); ++i) h.push_back(to_std(pb.h_N(x, i)));
    doc["h_N_m"] = h;
    return doc;
}

Vec default_x0(const Problem& pb)
{
    Vec x(pb.n_x());
    x.head(pb.n_l()) = 0.01 * pb.pipes().diameter;
    const CalibrationState b = make_state(pb, x);
    for (int k = pb.n_l(); k < pb.n_x(); ++k) x(k) = 0.5 * (b.lower(k) + b.upper(k));
    return x;
}

std::string method_name(Method m) { return m == Method::tensor ? "tensor" : "newton"; }

json campaign_report(const Problem& pb, const CampaignConfig& cfg, const CalibrationState& x0,
                     const CampaignResult& cr)
{
    json doc;
    doc["schema"] = "roughcal.calibration.v1";
    doc["method"] = method_name(cfg.method);
    doc["seed"] = cfg.seed;
    doc["launch_count"] = cfg.launches;
    doc["inner_runs"] = cfg.inner_runs;
    doc["pipe_ids"] = pb.topo().pipe_ids;
    std::vector<std::string> free_ids;
    for (int n : pb.topo().unsensed) free_ids.push_back(pb.topo().node_ids[n]);
    doc["unmeasured_node_ids"] = free_ids;
    doc["x0"] = state_json(pb, x0.x);
    doc["v_x0_m3s"] = residual(pb, x0.x).v;

    json launches = json::array();
    for (size_t l = 0; l < cr.launches.size(); ++l) {
        const auto& lr = cr.launches[l];
        json e = state_json(pb, lr.x_best);
        e["launch"] = static_cast<int>(l + 1);
        e["v_m3s"] = lr.v_best;
        e["v_lps"] = lr.v_best * 1e3;
        e["iter_of_best"] = lr.best_run;
        e["avg_iter_to_best"] = lr.avg_iter_to_best;
        e["run_iterations"] = lr.run_iterations;
        e["run_v_m3s"] = lr.run_v;
        std::vector<std::string> reasons;
        for (auto r : lr.run_reason) reasons.push_back(to_string(r));
        e["run_termination"] = reasons;
        e["failures"] = lr.failures;
        launches.push_back(e);
    }
    doc["launches"] = launches;
    json best = state_json(pb, cr.best_x);
    best["launch"] = cr.best_launch + 1;
    best["v_m3s"] = cr.best_v;
    best["v_lps"] = cr.best_v * 1e3;
    doc["best"] = best;
    return doc;
}

std::string campaign_table(const Problem& pb, const CampaignResult& cr)
{
    std::ostringstream out;
    char buf[64];
    const int n = static_cast<int>(cr.launches.size());
    auto row = [&](const std::string& label, auto cell) {
        std::snprintf(buf, sizeof buf, "%-22s", label.c_str());
        out << buf;
        for (int l = 0; l < n; ++l) out << cell(cr.launches[l]);
        out << '\n';
    };
    row("launch", [&, l = 0](const LaunchResult&) mutable {
        std::snprintf(buf, sizeof buf, "%11d", ++l);
        return std::string(buf);
    });
    for (int j = 0; j < pb.n_l(); ++j)
        row("eps_" + pb.topo().pipe_ids[j] + " [mm]", [&](const LaunchResult& lr) {
            std::snprintf(buf, sizeof buf, "%11.4f", lr.x_best(j) * 1e3);
            return std::string(buf);
        });
    for (int i = 0; i < pb.n_m(); ++i)
        for (int r = 0; r < pb.n_free(); ++r) {
            const std::string id = pb.topo().node_ids[pb.topo().unsensed[r]];
            row("h_N," + id + "^(" + std::to_string(i + 1) + ") [m]", [&](const LaunchResult& lr) {
                std::snprintf(buf, sizeof buf, "%11.3f", lr.x_best(pb.h_offset(i) + r));
                return std::string(buf);
            });
        }
    row("v [m3/s]", [&](const LaunchResult& lr) {
        std::snprintf(buf, sizeof buf, "%11.3e", lr.v_best);
        return std::string(buf);
    });
    row("v [l/s]", [&](const LaunchResult& lr) {
        std::snprintf(buf, sizeof buf, "%11.3e", lr.v_best * 1e3);
        return std::string(buf);
    });
    row("iter of best", [&](const LaunchResult& lr) {
        std::snprintf(buf, sizeof buf, "%11d", lr.best_run);
        return std::string(buf);
    });
    row("avg iter to best", [&](const LaunchResult& lr) {
        std::snprintf(buf, sizeof buf, "%11.2f", lr.avg_iter_to_best);
        return std::string(buf);
    });
    std::snprintf(buf, sizeof buf, "%.4e", cr.best_v);
    out << "best: launch " << cr.best_launch + 1 << ", v = " << buf << " m3/s\n";
    return out.str();
}

json root_diagnostic_json(const RootDiagnostic& rd)
{
    json out = json::array();
    for (size_t i = 0; i < rd.delta_expr.size(); ++i) {
        json s;
        s["set"] = static_cast<int>(i + 1);
        s["delta_expr"] = to_std(rd.delta_expr[i]);
        s["delta_hat_expr"] = to_std(rd.delta_hat_expr[i]);
        out.push_back(s);
    }
    return out;
}

}  // namespace roughcal
