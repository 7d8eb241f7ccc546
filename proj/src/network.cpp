#include "roughcal/network.hpp"

#include "roughcal/errors.hpp"
#include "roughcal/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace roughcal {

using json = nlohmann::json;

PipeCatalog PipeCatalog::from_dimensions(const Vec& length, const Vec& diameter, const Fluid& fluid)
{
    if (length.size() != diameter.size()) throw InputError("pipe length/diameter size mismatch");
    PipeCatalog pc;
    pc.fluid = fluid;
    pc.length = length;
    pc.diameter = diameter;
    const int n = static_cast<int>(length.size());
    pc.area.resize(n);
    pc.k.resize(n);
    pc.c_l.resize(n);
    for (int j = 0; j < n; ++j) {
        if (!(length(j) > 0.0) || !(diameter(j) > 0.0))
            throw InputError("pipe " + std::to_string(j) + ": length and diameter must be positive");
        const double a = std::numbers::pi * diameter(j) * diameter(j) / 4.0;
        pc.area(j) = a;
        pc.k(j) = length(j) / (2.0 * diameter(j) * fluid.g * a * a);
        pc.c_l(j) = fluid.g * a / length(j);
    }
    return pc;
}

namespace {

int rank_of(const IMat& m)
{
    if (m.size() == 0) return 0;
    Eigen::FullPivLU<Mat> lu(m.cast<double>());
    lu.setThreshold(1e-10);
    return static_cast<int>(lu.rank());
}

}  // namespace

IMat fundamental_cycles(const NetworkTopology& t)
{
    // Vertex t.n_j stands for every source at once.
    const int root = t.n_j;
    auto vertex = [&](int end) { return end >= 0 ? end : root; };

    std::vector<std::vector<std::pair<int, int>>> adj(t.n_j + 1);
    for (int p = 0; p < t.n_l; ++p) {
        const int u = vertex(t.pipe_from[p]);
        const int v = vertex(t.pipe_to[p]);
        adj[u].push_back({v, p});
        adj[v].push_back({u, p});
    }

    std::vector<int> parent(t.n_j + 1, -1), parent_pipe(t.n_j + 1, -1), depth(t.n_j + 1, -1);
    std::vector<bool> tree_pipe(t.n_l, false);
    std::queue<int> bfs;
    bfs.push(root);
    depth[root] = 0;
    while (!bfs.empty()) {
        const int u = bfs.front();
        bfs.pop();
        for (auto [v, p] : adj[u]) {
            if (depth[v] >= 0) continue;
            depth[v] = depth[u] + 1;
            parent[v] = u;
            parent_pipe[v] = p;
            tree_pipe[p] = true;
            bfs.push(v);
        }
    }
    for (int v = 0; v <= t.n_j; ++v)
        if (depth[v] < 0) throw InputError("network is disconnected at node " + t.node_ids[v]);

    // Signed tree edge when walking from child v up to its parent.
    auto up_sign = [&](int v) {
        const int p = parent_pipe[v];
        return vertex(t.pipe_from[p]) == v ? 1 : -1;
    };

    std::vector<Eigen::RowVectorXi> rows;
    for (int p = 0; p < t.n_l; ++p) {
        if (tree_pipe[p]) continue;
        Eigen::RowVectorXi s = Eigen::RowVectorXi::Zero(t.n_l);
        s(p) = 1;
        // Close the loop from the chord head back to its tail.
        int a = vertex(t.pipe_to[p]);
        int b = vertex(t.pipe_from[p]);
        std::vector<std::pair<int, int>> down;
        while (a != b) {
            if (depth[a] >= depth[b]) {
                s(parent_pipe[a]) += up_sign(a);
                a = parent[a];
            } else {
                down.push_back({parent_pipe[b], -up_sign(b)});
                b = parent[b];
            }
        }
        for (auto [q, sign] : down) s(q) += sign;
        rows.push_back(s);
    }

    IMat S(static_cast<int>(rows.size()), t.n_l);
    for (int r = 0; r < S.rows(); ++r) S.row(r) = rows[r];
    return S;
}

void validate(const NetworkTopology& t)
{
    if (t.n_j < 1 || t.n_l < 1 || t.n_s < 1) throw InputError("network needs inner nodes, pipes and a source");
    if (t.incidence.rows() != t.n_j || t.incidence.cols() != t.n_l)
        throw InputError("incidence matrix has wrong dimensions");
    if (t.source_incidence.rows() != t.n_s || t.source_incidence.cols() != t.n_l)
        throw InputError("source incidence has wrong dimensions");
    if (t.elevations.size() != t.n_j) throw InputError("elevation vector has wrong length");

    for (int p = 0; p < t.n_l; ++p) {
        int plus = 0, minus = 0;
        for (int i = 0; i < t.n_j; ++i) {
            const int e = -t.incidence(i, p);
            plus += e == 1;
            minus += e == -1;
            if (e < -1 || e > 1) throw InputError("incidence entries must be in {-1,0,1}");
        }
        for (int s = 0; s < t.n_s; ++s) {
            const int e = t.source_incidence(s, p);
            plus += e == 1;
            minus += e == -1;
        }
        if (plus != 1 || minus != 1)
            throw InputError("pipe " + t.pipe_ids[p] + " must join two distinct nodes");
    }

    if (rank_of(t.incidence) != t.n_j) throw InputError("incidence matrix is rank deficient");
    if (t.cycle.rows() != t.n_l - t.n_j || t.cycle.cols() != t.n_l)
        throw InputError("cycle matrix has wrong dimensions");
    if ((t.cycle * t.incidence.transpose()).cwiseAbs().sum() != 0)
        throw InputError("cycle matrix is not in the kernel of the incidence matrix");
    if (rank_of(t.cycle) != t.n_l - t.n_j) throw InputError("cycle matrix is rank deficient");

    const IMat eye = t.sensor_select.transpose() * t.sensor_select +
                     t.sensor_complement.transpose() * t.sensor_complement;
    if (eye != IMat::Identity(t.n_j, t.n_j)) throw InputError("sensor selectors are not complementary");
}

Network build_network(const std::vector<NodeSpec>& nodes, const std::vector<PipeSpec>& pipes,
                      const Fluid& fluid)
{
    Network net;
    NetworkTopology& t = net.topo;
    std::unordered_map<std::string, int> index;
    std::vector<double> z, hs;
    for (const auto& n : nodes) {
        if (index.count(n.id)) throw InputError("duplicate node id " + n.id);
        if (n.source) {
            index[n.id] = -(t.n_s + 1);
            t.source_ids.push_back(n.id);
            hs.push_back(n.source_head.value_or(std::numeric_limits<double>::quiet_NaN()));
            ++t.n_s;
        } else {
            index[n.id] = t.n_j;
            t.node_ids.push_back(n.id);
            z.push_back(n.elevation);
            if (n.sensor) t.sensed.push_back(t.n_j);
            else t.unsensed.push_back(t.n_j);
            ++t.n_j;
        }
    }
    t.n_l = static_cast<int>(pipes.size());
    t.n_p = static_cast<int>(t.sensed.size());
    t.elevations = Eigen::Map<Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
    net.source_heads = Eigen::Map<Vec>(hs.data(), static_cast<Eigen::Index>(hs.size()));

    t.incidence = IMat::Zero(t.n_j, t.n_l);
    t.source_incidence = IMat::Zero(t.n_s, t.n_l);
    Vec len(t.n_l), dia(t.n_l), eps(t.n_l);
    bool all_rough = t.n_l > 0;
    std::unordered_map<std::string, int> pipe_index;
    for (int p = 0; p < t.n_l; ++p) {
        const auto& ps = pipes[p];
        if (pipe_index.count(ps.id)) throw InputError("duplicate pipe id " + ps.id);
        pipe_index[ps.id] = p;
        auto from = index.find(ps.from);
        auto to = index.find(ps.to);
        if (from == index.end() || to == index.end())
            throw InputError("pipe " + ps.id + " references an unknown node");
        if (from->second == to->second) throw InputError("pipe " + ps.id + " is a self-loop");
        if (from->second < 0 && to->second < 0)
            throw InputError("pipe " + ps.id + " joins two sources");
        t.pipe_ids.push_back(ps.id);
        t.pipe_from.push_back(from->second);
        t.pipe_to.push_back(to->second);
        if (from->second >= 0) t.incidence(from->second, p) = -1;
        else t.source_incidence(-from->second - 1, p) = 1;
        if (to->second >= 0) t.incidence(to->second, p) = 1;
        else t.source_incidence(-to->second - 1, p) = -1;
        len(p) = ps.length;
        dia(p) = ps.diameter;
        if (ps.roughness) eps(p) = *ps.roughness;
        else all_rough = false;
    }

    t.sensor_select = IMat::Zero(t.n_p, t.n_j);
    for (int r = 0; r < t.n_p; ++r) t.sensor_select(r, t.sensed[r]) = 1;
    t.sensor_complement = IMat::Zero(t.n_free(), t.n_j);
    for (int r = 0; r < t.n_free(); ++r) t.sensor_complement(r, t.unsensed[r]) = 1;

    t.cycle = fundamental_cycles(t);
    validate(t);

    net.pipes = PipeCatalog::from_dimensions(len, dia, fluid);
    if (all_rough) net.roughness = eps;
    return net;
}

Network parse_network(std::istream& in)
{
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(std::string("network file: ") + e.what());
    }
    try {
        Fluid fluid;
        if (doc.contains("fluid")) {
            const auto& f = doc.at("fluid");
            fluid.rho = f.value("rho", fluid.rho);
            fluid.eta = f.value("eta", fluid.eta);
            fluid.g = f.value("g", fluid.g);
        }
        std::vector<NodeSpec> nodes;
        for (const auto& n : doc.at("nodes")) {
            NodeSpec s;
            s.id = n.at("id").is_string() ? n.at("id").get<std::string>() : n.at("id").dump();
            s.elevation = n.value("elevation_m", 0.0);
            s.source = n.value("source", false);
            s.sensor = n.value("sensor", false);
            if (n.contains("source_head_m")) s.source_head = n.at("source_head_m").get<double>();
            nodes.push_back(std::move(s));
        }
        std::vector<PipeSpec> pipes;
        auto as_id = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        for (const auto& p : doc.at("pipes")) {
            PipeSpec s;
            s.id = as_id(p.at("id"));
            s.from = as_id(p.at("from"));
            s.to = as_id(p.at("to"));
            s.length = p.at("length_m").get<double>();
            s.diameter = p.at("diameter_m").get<double>();
            if (p.contains("roughness_mm")) s.roughness = p.at("roughness_mm").get<double>() * 1e-3;
            pipes.push_back(std::move(s));
        }
        return build_network(nodes, pipes, fluid);
    } catch (const json::exception& e) {
        throw InputError(std::string("network file: ") + e.what());
    }
}

Network load_network(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open network file " + path.string());
    return parse_network(in);
}

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, int line_no)
{
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("measurements line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

}  // namespace

std::vector<MeasurementSet> parse_measurements(std::istream& in, const NetworkTopology& t)
{
    std::string line;
    int line_no = 0;
    do {
        if (!std::getline(in, line)) throw InputError("measurement file is empty");
        ++line_no;
    } while (line.find_first_not_of(" \t\r") == std::string::npos);

    const auto header = split_csv(line);
    const std::vector<std::string> expected{"set", "node", "y_h_m", "q_lps", "h_s_m"};
    if (header != expected) throw InputError("measurement header must be set,node,y_h_m,q_lps,h_s_m");

    std::unordered_map<std::string, int> inner, source;
    for (int i = 0; i < t.n_j; ++i) inner[t.node_ids[i]] = i;
    for (int s = 0; s < t.n_s; ++s) source[t.source_ids[s]] = s;
    std::vector<int> sensor_row(t.n_j, -1);
    for (int r = 0; r < t.n_p; ++r) sensor_row[t.sensed[r]] = r;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::map<int, MeasurementSet> sets;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5)
            throw InputError("measurements line " + std::to_string(line_no) + ": expected 5 columns");
        const int id = static_cast<int>(to_double(cells[0], line_no));
        auto [it, fresh] = sets.try_emplace(id);
        MeasurementSet& m = it->second;
        if (fresh) {
            m.id = id;
            m.y_h = Vec::Constant(t.n_p, nan);
            m.q = Vec::Zero(t.n_j);
            m.h_s = Vec::Constant(t.n_s, nan);
        }
        const std::string& node = cells[1];
        if (auto s = source.find(node); s != source.end()) {
            if (!cells[4].empty()) m.h_s(s->second) = to_double(cells[4], line_no);
            continue;
        }
        auto n = inner.find(node);
        if (n == inner.end())
            throw InputError("measurements line " + std::to_string(line_no) + ": unknown node " + node);
        if (!cells[2].empty()) {
            if (sensor_row[n->second] < 0)
                throw InputError("measurements line " + std::to_string(line_no) + ": node " + node +
                                 " has no sensor");
            m.y_h(sensor_row[n->second]) = to_double(cells[2], line_no);
        }
        if (!cells[3].empty()) m.q(n->second) = to_double(cells[3], line_no) * 1e-3;
        if (!cells[4].empty()) {
            if (t.n_s != 1)
                throw InputError("measurements line " + std::to_string(line_no) +
                                 ": source head on an inner node is ambiguous with several sources");
            m.h_s(0) = to_double(cells[4], line_no);
        }
    }

    std::vector<MeasurementSet> out;
    for (auto& [id, m] : sets) {
        if (!m.y_h.allFinite()) throw InputError("set " + std::to_string(id) + ": missing sensed head");
        if (!m.h_s.allFinite()) throw InputError("set " + std::to_string(id) + ": missing source head");
        out.push_back(std::move(m));
    }
    if (out.empty()) throw InputError("measurement file has no data rows");
    if (static_cast<int>(out.size()) < t.min_sets())
        warn("only " + std::to_string(out.size()) + " measurement sets, at least " +
             std::to_string(t.min_sets()) + " needed for identifiability");
    return out;
}

std::vector<MeasurementSet> load_measurements(const std::filesystem::path& path,
                                              const NetworkTopology& topo)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open measurement file " + path.string());
    return parse_measurements(in, topo);
}

void write_measurements(std::ostream& out, const NetworkTopology& t,
                        const std::vector<MeasurementSet>& sets)
{
    std::vector<int> sensor_row(t.n_j, -1);
    for (int r = 0; r < t.n_p; ++r) sensor_row[t.sensed[r]] = r;
    out << "set,node,y_h_m,q_lps,h_s_m\n";
    char buf[64];
    for (const auto& m : sets) {
        for (int s = 0; s < t.n_s; ++s) {
            std::snprintf(buf, sizeof buf, "%.10g", m.h_s(s));
            out << m.id << ',' << t.source_ids[s] << ",,," << buf << '\n';
        }
        for (int i = 0; i < t.n_j; ++i) {
            const bool sensed = sensor_row[i] >= 0;
            if (!sensed && m.q(i) == 0.0) continue;
            out << m.id << ',' << t.node_ids[i] << ',';
            if (sensed) {
                std::snprintf(buf, sizeof buf, "%.10g", m.y_h(sensor_row[i]));
                out << buf;
            }
            std::snprintf(buf, sizeof buf, "%.10g", m.q(i) * 1e3);
            out << ',' << buf << ",\n";
        }
    }
}

Vec head_loss(const NetworkTopology& t, const Vec& z, const Vec& h_s, const Vec& y_h, const Vec& h_N)
{
    if (z.size() != t.n_j || h_s.size() != t.n_s || y_h.size() != t.n_p || h_N.size() != t.n_free())
        throw InputError("head_loss: dimension mismatch");
    Vec head(t.n_j);
    for (int r = 0; r < t.n_p; ++r) head(t.sensed[r]) = y_h(r);
    for (int r = 0; r < t.n_free(); ++r) head(t.unsensed[r]) = h_N(r) + z(t.unsensed[r]);
    return t.source_incidence.cast<double>().transpose() * h_s -
           t.incidence.cast<double>().transpose() * head;
}

Network random_network(const RandomNetworkOptions& opt, std::mt19937_64& rng)
{
    if (opt.n_l < opt.n_j) throw InputError("random_network: need n_l >= n_j");
    if (opt.n_p > opt.n_j) throw InputError("random_network: need n_p <= n_j");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](int n) { return static_cast<int>(unit(rng) * n) % n; };

    std::vector<NodeSpec> nodes;
    for (int s = 0; s < opt.n_s; ++s) nodes.push_back({"S" + std::to_string(s + 1), 0.0, true, false, {}});
    std::vector<int> order(opt.n_j);
    for (int i = 0; i < opt.n_j; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> sensor(opt.n_j, false);
    for (int r = 0; r < opt.n_p; ++r) sensor[order[r]] = true;
    for (int i = 0; i < opt.n_j; ++i)
        nodes.push_back({"N" + std::to_string(i + 1), 0.0, false, sensor[i], {}});

    auto name = [&](int v) {
        return v < opt.n_s ? "S" + std::to_string(v + 1) : "N" + std::to_string(v - opt.n_s + 1);
    };
    std::vector<PipeSpec> pipes;
    auto add = [&](int from, int to) {
        PipeSpec p;
        p.id = std::to_string(pipes.size() + 1);
        p.from = name(from);
        p.to = name(to);
        p.length = opt.l_min + (opt.l_max - opt.l_min) * unit(rng);
        p.diameter = opt.d_min + (opt.d_max - opt.d_min) * unit(rng);
        pipes.push_back(std::move(p));
    };

    // Attach inner nodes one by one; every source feeds at least one pipe.
    std::vector<int> attached;
    for (int s = 0; s < opt.n_s; ++s) attached.push_back(s);
    for (int i = 0; i < opt.n_j; ++i) {
        const int v = opt.n_s + i;
        const int u = i < opt.n_s ? i : attached[pick(static_cast<int>(attached.size()))];
        add(u, v);
        attached.push_back(v);
    }
    const int n_v = opt.n_s + opt.n_j;
    while (static_cast<int>(pipes.size()) < opt.n_l) {
        int u = pick(n_v), v = pick(n_v);
        if (u == v || (u < opt.n_s && v < opt.n_s)) continue;
        if (v < opt.n_s) std::swap(u, v);
        add(u, v);
    }
    Fluid fluid;
    return build_network(nodes, pipes, fluid);
}

}  // namespace roughcal
