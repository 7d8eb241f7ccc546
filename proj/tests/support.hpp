#pragma once

#include "roughcal/forward.hpp"
#include "roughcal/system.hpp"

#include <random>
#include <vector>

namespace roughcal::testing {

struct Instance {
    Network net;
    Vec eps;
    GeneratedMeasurements gm;
    Problem pb;
    Vec truth;  // planted roughness and simulated unmeasured pressure heads
};

inline Vec planted_state(const Problem& pb, const Vec& eps, const GeneratedMeasurements& gm)
{
    Vec x(pb.n_x());
    x.head(pb.n_l()) = eps;
    for (int i = 0; i < pb.n_m(); ++i)
        for (int r = 0; r < pb.n_free(); ++r) x(pb.h_offset(i) + r) = gm.truth[i].h(pb.topo().unsensed[r]);
    return x;
}

// Random network with forward-simulated measurement sets and demands of 0.5 to 2.5 l/s.
inline Instance random_instance(std::mt19937_64& rng, const RandomNetworkOptions& opt, int n_m,
                                double source_head = 60.0)
{
    Network net = random_network(opt, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec eps(net.topo.n_l);
    for (int j = 0; j < eps.size(); ++j) eps(j) = net.pipes.diameter(j) * (0.002 + 0.03 * unit(rng));
    std::vector<Vec> demands, heads;
    for (int i = 0; i < n_m; ++i) {
        Vec q(net.topo.n_j);
        for (int n = 0; n < q.size(); ++n) q(n) = 1e-3 * (0.5 + 2.0 * unit(rng));
        demands.push_back(q);
        Vec hs(net.topo.n_s);
        for (int s = 0; s < hs.size(); ++s) hs(s) = source_head + 5.0 * unit(rng);
        heads.push_back(hs);
    }
    GeneratedMeasurements gm = generate_measurements(net, eps, demands, heads);
    Problem pb(net, gm.sets);
    Vec truth = planted_state(pb, eps, gm);
    return {std::move(net), std::move(eps), std::move(gm), std::move(pb), std::move(truth)};
}

// Truth moved by a few percent in roughness and a few centimetres in head.
inline Vec nearby_state(const Instance& in, std::mt19937_64& rng, double eps_rel = 0.2, double h_abs = 0.05)
{
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    Vec x = in.truth;
    for (int j = 0; j < in.pb.n_l(); ++j) x(j) *= 1.0 + eps_rel * sym(rng);
    for (int k = in.pb.n_l(); k < x.size(); ++k) x(k) += h_abs * sym(rng);
    return x;
}

inline bool turbulent(const Problem& pb, const Vec& x)
{
    for (int i = 0; i < pb.n_m(); ++i)
        for (bool ok : reynolds_ok(flows(pb.eps(x), pb.head_loss(x, i), pb.pipes()), pb.pipes()))
            if (!ok) return false;
    return true;
}

inline Instance turbulent_instance(std::mt19937_64& rng, const RandomNetworkOptions& opt, int n_m)
{
    for (;;) {
        Instance in = random_instance(rng, opt, n_m);
        if (turbulent(in.pb, in.truth)) return in;
    }
}

// Turbulent at the truth with a full column rank Jacobian; needs n_m n_p >= n_l.
inline Instance well_posed_instance(std::mt19937_64& rng, const RandomNetworkOptions& opt, int n_m)
{
    for (;;) {
        Instance in = turbulent_instance(rng, opt, n_m);
        if (numerical_rank(jacobian(in.pb, in.truth), 1e-8) == in.pb.n_x()) return in;
    }
}

}  // namespace roughcal::testing
