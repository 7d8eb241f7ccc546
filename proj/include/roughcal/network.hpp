#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace roughcal {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IMat = Eigen::MatrixXi;

struct Fluid {
    double rho = 998.2;    // kg/m^3
    double eta = 1.002e-3; // Pa s
    double g = 9.81;       // m/s^2
};

// Pipe endpoints are encoded as inner index (>= 0) or source s as -(s + 1).
struct NetworkTopology {
    int n_j = 0;
    int n_s = 0;
    int n_l = 0;
    int n_p = 0;
    IMat incidence;         // A: +1 where the pipe enters the inner node
    IMat source_incidence;  // +1 where the pipe leaves the source
    IMat cycle;             // S
    IMat sensor_select;     // C_h
    IMat sensor_complement; // complement selector
    Vec elevations;         // z of inner nodes
    std::vector<std::string> node_ids;
    std::vector<std::string> source_ids;
    std::vector<std::string> pipe_ids;
    std::vector<int> pipe_from;
    std::vector<int> pipe_to;
    std::vector<int> sensed;
    std::vector<int> unsensed;

    int n_free() const { return n_j - n_p; }
    int min_sets() const { return n_p == 0 ? 0 : (n_l + n_p - 1) / n_p; }
};

struct PipeRow {
    double length;
    double diameter;
    double area;
    double k;
};

struct PipeCatalog {
    Vec length;
    Vec diameter;
    Vec area;
    Vec k;    // l / (2 d g A^2)
    Vec c_l;  // g A / l
    Fluid fluid;

    int size() const { return static_cast<int>(length.size()); }
    PipeRow row(int j) const { return {length(j), diameter(j), area(j), k(j)}; }

    static PipeCatalog from_dimensions(const Vec& length, const Vec& diameter, const Fluid& fluid);
};

struct Network {
    NetworkTopology topo;
    PipeCatalog pipes;
    Vec roughness;      // planted roughness in m, empty when the file has none
    Vec source_heads;   // default source heads in m, NaN where absent
};

struct MeasurementSet {
    int id = 0;
    Vec y_h;  // sensed piezometric heads, m
    Vec q;    // consumptions, m^3/s
    Vec h_s;  // source heads, m
};

struct NodeSpec {
    std::string id;
    double elevation = 0.0;
    bool source = false;
    bool sensor = false;
    std::optional<double> source_head;
};

struct PipeSpec {
    std::string id;
    std::string from;
    std::string to;
    double length = 0.0;
    double diameter = 0.0;
    std::optional<double> roughness;
};

Network build_network(const std::vector<NodeSpec>& nodes, const std::vector<PipeSpec>& pipes,
                      const Fluid& fluid = {});

Network parse_network(std::istream& in);
Network load_network(const std::filesystem::path& path);

std::vector<MeasurementSet> parse_measurements(std::istream& in, const NetworkTopology& topo);
std::vector<MeasurementSet> load_measurements(const std::filesystem::path& path,
                                              const NetworkTopology& topo);
void write_measurements(std::ostream& out, const NetworkTopology& topo,
                        const std::vector<MeasurementSet>& sets);

// Fundamental cycles of a BFS spanning tree with all sources merged into one root.
IMat fundamental_cycles(const NetworkTopology& topo);

void validate(const NetworkTopology& topo);

// Per-pipe head loss for one set. y_h is piezometric, h_N are pressure heads.
Vec head_loss(const NetworkTopology& topo, const Vec& z, const Vec& h_s, const Vec& y_h,
              const Vec& h_N);

struct RandomNetworkOptions {
    int n_j = 5;
    int n_l = 8;
    int n_s = 1;
    int n_p = 3;
    double d_min = 0.03;
    double d_max = 0.1;
    double l_min = 5.0;
    double l_max = 50.0;
};

// Spanning tree plus random chords, no source-to-source pipes.
Network random_network(const RandomNetworkOptions& opt, std::mt19937_64& rng);

}  // namespace roughcal
