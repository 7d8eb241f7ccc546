#include "roughcal/forward.hpp"

#include "roughcal/errors.hpp"
#include "roughcal/flow.hpp"
#include "roughcal/log.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <queue>
#include <string>

namespace roughcal {

namespace {

Vec depth_guess(const Network& net, const Vec& h_s)
{
    const auto& t = net.topo;
    std::vector<int> depth(t.n_j, -1);
    std::queue<int> bfs;
    for (int p = 0; p < t.n_l; ++p) {
        for (auto [a, b] : {std::pair{t.pipe_from[p], t.pipe_to[p]}, std::pair{t.pipe_to[p], t.pipe_from[p]}}) {
            if (a < 0 && b >= 0 && depth[b] < 0) {
                depth[b] = 1;
                bfs.push(b);
            }
        }
    }
    while (!bfs.empty()) {
        const int u = bfs.front();
        bfs.pop();
        for (int p = 0; p < t.n_l; ++p) {
            int v = -1;
            if (t.pipe_from[p] == u) v = t.pipe_to[p];
            else if (t.pipe_to[p] == u) v = t.pipe_from[p];
            if (v >= 0 && depth[v] < 0) {
                depth[v] = depth[u] + 1;
                bfs.push(v);
            }
        }
    }
    const double ref = h_s.mean();
    Vec H(t.n_j);
    for (int i = 0; i < t.n_j; ++i) H(i) = ref - 1.0 * std::max(depth[i], 1);
    return H;
}

}  // namespace

SteadyState solve_steady(const Network& net, const Vec& eps, const Vec& q, const Vec& h_s, const Vec& h_guess)
{
    const auto& t = net.topo;
    const auto& pipes = net.pipes;
    if (eps.size() != t.n_l || q.size() != t.n_j || h_s.size() != t.n_s)
        throw InputError("solve_steady: dimension mismatch");
    const Mat A = t.incidence.cast<double>();
    const Vec src = t.source_incidence.cast<double>().transpose() * h_s;

    SteadyState st;
    if (q.isZero(0.0) && (h_s.array() == h_s(0)).all()) {
        st.head = Vec::Constant(t.n_j, h_s(0));
        st.h = st.head - t.elevations;
        st.Q = Vec::Zero(t.n_l);
        for (int j = 0; j < t.n_l; ++j) st.non_turbulent.push_back(j);
        warn("zero demand: hydrostatic state, no pipe is turbulent");
        return st;
    }

    Vec H = h_guess.size() == t.n_j ? Vec(h_guess + t.elevations) : depth_guess(net, h_s);
    auto imbalance = [&](const Vec& head) { return Vec(A * flows(eps, src - A.transpose() * head, pipes) - q); };

    Vec F = imbalance(H);
    double norm = F.norm();
    const int max_iter = 200;
    bool done = false;
    for (int k = 0; k < max_iter && !done; ++k) {
        if (F.lpNorm<Eigen::Infinity>() <= 1e-14) break;
        Vec dh = src - A.transpose() * H;
        for (int j = 0; j < dh.size(); ++j)
            if (std::abs(dh(j)) < 1e-12) dh(j) = dh(j) < 0.0 ? -1e-12 : 1e-12;
        const auto b = derivatives(eps, dh, pipes);
        auto line_search = [&](const Vec& slope, Vec& Hb, Vec& Fb) {
            const Mat K = A * slope.asDiagonal() * A.transpose();
            const Vec step = K.ldlt().solve(F);
            for (double mu = 1.0; mu > 1e-10; mu *= 0.5) {
                Hb = H + mu * step;
                Fb = imbalance(Hb);
                if (Fb.allFinite() && Fb.norm() < norm) return true;
            }
            return false;
        };
        // tangent, secant (Q / dh) and floored tangent linearisations; the secant damps sign oscillation on
        // near-zero flows and the floor unpins nodes that start at equal head
        Vec floored = dh;
        const double floor = 1e-3 * dh.lpNorm<Eigen::Infinity>();
        for (int j = 0; j < floored.size(); ++j)
            if (std::abs(floored(j)) < floor) floored(j) = floored(j) < 0.0 ? -floor : floor;
        const Vec slopes[] = {b.p_dh, flows(eps, dh, pipes).cwiseQuotient(dh), derivatives(eps, floored, pipes).p_dh};
        bool accepted = false;
        Vec Hbest, Fbest;
        for (const Vec& slope : slopes) {
            Vec Ht, Ft;
            if (line_search(slope, Ht, Ft) && (!accepted || Ft.norm() < Fbest.norm())) {
                Hbest = std::move(Ht);
                Fbest = std::move(Ft);
                accepted = true;
            }
        }
        if (accepted) {
            H = std::move(Hbest);
            F = std::move(Fbest);
            norm = F.norm();
        }
        ++st.iterations;
        if (!accepted) done = true;
    }

    st.max_residual = F.lpNorm<Eigen::Infinity>();
    if (!(st.max_residual <= 1e-10)) {
        std::string msg = "steady-state solve did not converge, nodal residuals:";
        for (int i = 0; i < F.size(); ++i) msg += " " + std::to_string(F(i));
        throw SolveError(msg);
    }
    st.head = H;
    st.h = H - t.elevations;
    st.Q = flows(eps, src - A.transpose() * H, pipes);
    const auto ok = reynolds_ok(st.Q, pipes);
    for (int j = 0; j < t.n_l; ++j)
        if (!ok[j]) st.non_turbulent.push_back(j);
    if (!st.non_turbulent.empty()) {
        std::string msg = "pipes below Re 4000:";
        for (int j : st.non_turbulent) msg += " " + t.pipe_ids[j];
        warn(msg);
    }
    return st;
}

GeneratedMeasurements generate_measurements(const Network& net, const Vec& eps, const std::vector<Vec>& demands,
                                            const std::vector<Vec>& h_s_list)
{
    if (demands.size() != h_s_list.size()) throw InputError("one source-head vector per demand vector");
    const auto& t = net.topo;
    GeneratedMeasurements gm;
    for (size_t i = 0; i < demands.size(); ++i) {
        SteadyState st;
        try {
            st = solve_steady(net, eps, demands[i], h_s_list[i]);
        } catch (const SolveError& e) {
            throw SolveError("set " + std::to_string(i + 1) + ": " + e.what());
        }
        MeasurementSet m;
        m.id = static_cast<int>(i + 1);
        m.y_h.resize(t.n_p);
        for (int r = 0; r < t.n_p; ++r) m.y_h(r) = st.head(t.sensed[r]);
        m.q = demands[i];
        m.h_s = h_s_list[i];
        gm.sets.push_back(std::move(m));
        gm.truth.push_back(std::move(st));
    }
    return gm;
}

void write_truth(std::ostream& out, const Network& net, const Vec& eps, const GeneratedMeasurements& gm)
{
    using json = nlohmann::json;
    const auto& t = net.topo;
    json doc;
    doc["node_ids"] = t.node_ids;
    doc["pipe_ids"] = t.pipe_ids;
    std::vector<double> eps_mm(eps.size());
    for (int j = 0; j < eps.size(); ++j) eps_mm[j] = eps(j) * 1e3;
    doc["eps_mm"] = eps_mm;
    json sets = json::array();
    for (size_t i = 0; i < gm.sets.size(); ++i) {
        const auto& st = gm.truth[i];
        json s;
        s["set"] = gm.sets[i].id;
        s["pressure_head_m"] = std::vector<double>(st.h.data(), st.h.data() + st.h.size());
        s["piezometric_head_m"] = std::vector<double>(st.head.data(), st.head.data() + st.head.size());
        std::vector<double> q_lps(st.Q.size());
        for (int j = 0; j < st.Q.size(); ++j) q_lps[j] = st.Q(j) * 1e3;
        s["flow_lps"] = q_lps;
        std::vector<double> hn;
        for (int n : t.unsensed) hn.push_back(st.h(n));
        s["h_N_m"] = hn;
        s["max_residual_m3s"] = st.max_residual;
        sets.push_back(s);
    }
    doc["sets"] = sets;
    out << doc.dump(2) << '\n';
}

}  // namespace roughcal
