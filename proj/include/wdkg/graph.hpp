#ifndef WDKG_GRAPH_HPP
#define WDKG_GRAPH_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wdkg/matrix.hpp"

namespace wdkg {

// The three influence-edge categories of the wireless data KG.
enum class Relation : std::uint8_t { Causal = 0, Explicit = 1, Implicit = 2 };
inline constexpr int kRelationCount = 3;

enum class Layer : std::uint8_t { SDAP, PDCP, RLC, MAC, PHY };

// Nine physical-attribute categories of data-field nodes.
enum class NodeType : std::uint8_t {
    Throughput,
    Power,
    SchedulingIndication,
    ModulationEncodingIndication,
    ResourceBlocks,
    BlockErrorRate,
    SwitchIndication,
    AntennaConfigIndication,
    FrameStructure,
};
inline constexpr int kNodeTypeCount = 9;

std::string to_string(Relation r);
std::string to_string(Layer l);
std::string to_string(NodeType t);
Relation relation_from_string(const std::string& s);
Layer layer_from_string(const std::string& s);
NodeType node_type_from_string(const std::string& s);

struct NodeMeta {
    int id = 0;
    std::string name;
    NodeType node_type = NodeType::Throughput;
    Layer layer = Layer::PHY;
    bool adjustable = false;

    friend bool operator==(const NodeMeta&, const NodeMeta&) = default;
};

// Undirected edge stored canonically with src < dst.
struct Edge {
    int src = 0;
    int dst = 0;
    Relation rel = Relation::Causal;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(int a, int b, Relation r) {
    return a < b ? Edge{a, b, r} : Edge{b, a, r};
}

// One coherence block: fixed topology plus the N x T_c telemetry matrix.
struct GraphSlice {
    int index = 0;
    std::vector<Edge> edges; // sorted, canonical, no self-loops/duplicates
    Matrix data;             // row = node, column = sample tick
    int t_start = 0;
    int t_end = 0;

    int tick_count() const { return t_end - t_start; }
    bool has_edge(int a, int b) const;

    friend bool operator==(const GraphSlice&, const GraphSlice&) = default;
};

struct WirelessKG {
    std::vector<NodeMeta> nodes;
    std::vector<GraphSlice> slices;
    int tc_samples = 0;

    std::size_t node_count() const { return nodes.size(); }
    // -1 when no node carries that name.
    int node_by_name(const std::string& name) const;

    // Checks every structural invariant; throws SchemaViolation naming the
    // offending field.
    void validate() const;

    // Telemetry of all slices concatenated: N x (M * tc_samples).
    Matrix full_telemetry() const;

    friend bool operator==(const WirelessKG&, const WirelessKG&) = default;
};

// Coherence time lambda / (v cos theta). Throws DegenerateMotion when the
// denominator vanishes; the caller must cap explicitly instead.
double coherence_time(double wavelength_m, double speed_mps, double angle_rad);

struct NormalizedAdjacency {
    Matrix a_tilde;            // A + I
    Matrix d_tilde_inv_sqrt;   // diagonal
    Matrix propagation;        // D^-1/2 (A+I) D^-1/2, symmetric
};

NormalizedAdjacency normalize_adjacency(const Matrix& a);

// 0/1 symmetric adjacency of a slice, optionally restricted to one relation.
Matrix adjacency_of(const GraphSlice& slice, std::size_t n_nodes,
                    std::optional<Relation> rel = std::nullopt);

// Same node set and telemetry, only the edges of one relation kept.
GraphSlice metapath_subgraph(const GraphSlice& slice, Relation rel);

// Sorted neighbor ids under one relation; always contains the node itself.
std::vector<int> metapath_neighbors(const GraphSlice& slice, int node, Relation rel);

// Overlapping windows [s, s+frame_len) with stride s steps; frames never
// leave the slice.
std::vector<Matrix> frame_data(const GraphSlice& slice, int frame_len, int stride);

// Directory layout: kg.json (structure) + telemetry.csv (tick series).
void save_kg(const WirelessKG& kg, const std::filesystem::path& dir);
WirelessKG load_kg(const std::filesystem::path& dir);

} // namespace wdkg

#endif
