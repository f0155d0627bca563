#include "wdkg/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wdkg/errors.hpp"
#include "wdkg/io.hpp"

namespace wdkg {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Relation r) {
    switch (r) {
        case Relation::Causal: return "causal";
        case Relation::Explicit: return "explicit";
        case Relation::Implicit: return "implicit";
    }
    return "?";
}

std::string to_string(Layer l) {
    switch (l) {
        case Layer::SDAP: return "SDAP";
        case Layer::PDCP: return "PDCP";
        case Layer::RLC: return "RLC";
        case Layer::MAC: return "MAC";
        case Layer::PHY: return "PHY";
    }
    return "?";
}

std::string to_string(NodeType t) {
    switch (t) {
        case NodeType::Throughput: return "throughput";
        case NodeType::Power: return "power";
        case NodeType::SchedulingIndication: return "scheduling_indication";
        case NodeType::ModulationEncodingIndication: return "modulation_encoding_indication";
        case NodeType::ResourceBlocks: return "resource_blocks";
        case NodeType::BlockErrorRate: return "block_error_rate";
        case NodeType::SwitchIndication: return "switch_indication";
        case NodeType::AntennaConfigIndication: return "antenna_config_indication";
        case NodeType::FrameStructure: return "frame_structure";
    }
    return "?";
}

Relation relation_from_string(const std::string& s) {
    if (s == "causal") return Relation::Causal;
    if (s == "explicit") return Relation::Explicit;
    if (s == "implicit") return Relation::Implicit;
    throw SchemaViolation("unknown relation: \"" + s + "\"");
}

Layer layer_from_string(const std::string& s) {
    if (s == "SDAP") return Layer::SDAP;
    if (s == "PDCP") return Layer::PDCP;
    if (s == "RLC") return Layer::RLC;
    if (s == "MAC") return Layer::MAC;
    if (s == "PHY") return Layer::PHY;
    throw SchemaViolation("unknown layer: \"" + s + "\"");
}

NodeType node_type_from_string(const std::string& s) {
    for (int i = 0; i < kNodeTypeCount; ++i) {
        const auto t = static_cast<NodeType>(i);
        if (to_string(t) == s) return t;
    }
    throw SchemaViolation("unknown node type: \"" + s + "\"");
}

bool GraphSlice::has_edge(int a, int b) const {
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    return std::any_of(edges.begin(), edges.end(),
                       [&](const Edge& e) { return e.src == a && e.dst == b; });
}

int WirelessKG::node_by_name(const std::string& name) const {
    for (const auto& n : nodes)
        if (n.name == name) return n.id;
    return -1;
}

void WirelessKG::validate() const {
    const int n = static_cast<int>(nodes.size());
    std::set<std::string> names;
    for (int i = 0; i < n; ++i) {
        if (nodes[i].id != i)
            throw SchemaViolation("nodes[" + std::to_string(i) + "].id: ids must be dense 0..N-1");
        if (!names.insert(nodes[i].name).second)
            throw SchemaViolation("nodes[" + std::to_string(i) + "].name: duplicate \"" + nodes[i].name + "\"");
        if (nodes[i].name.find_first_of(",\n\r") != std::string::npos)
            throw SchemaViolation("nodes[" + std::to_string(i) + "].name: contains CSV delimiter");
    }
    if (slices.empty()) throw SchemaViolation("slices: at least one graph slice required");
    if (tc_samples < 1) throw SchemaViolation("tc_samples: must be >= 1");
    int expected_start = slices.front().t_start;
    for (std::size_t m = 0; m < slices.size(); ++m) {
        const auto& s = slices[m];
        const std::string at = "slices[" + std::to_string(m) + "]";
        if (s.t_end - s.t_start != tc_samples)
            throw SchemaViolation(at + ": tick range must span tc_samples");
        if (s.t_start != expected_start)
            throw SchemaViolation(at + ".t_start: slices must be contiguous");
        expected_start = s.t_end;
        if (s.data.rows != static_cast<std::size_t>(n) ||
            s.data.cols != static_cast<std::size_t>(tc_samples))
            throw SchemaViolation(at + ".data: expected " + std::to_string(n) + " x " +
                                  std::to_string(tc_samples));
        std::set<std::pair<int, int>> seen;
        for (std::size_t k = 0; k < s.edges.size(); ++k) {
            const auto& e = s.edges[k];
            const std::string eat = at + ".edges[" + std::to_string(k) + "]";
            if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n)
                throw SchemaViolation(eat + ": node id out of range");
            if (e.src == e.dst) throw SchemaViolation(eat + ": self-loop");
            if (e.src > e.dst) throw SchemaViolation(eat + ": not stored canonically (src < dst)");
            if (!seen.insert({e.src, e.dst}).second)
                throw SchemaViolation(eat + ": duplicate edge");
        }
    }
}

Matrix WirelessKG::full_telemetry() const {
    const std::size_t n = nodes.size();
    const std::size_t total = slices.size() * static_cast<std::size_t>(tc_samples);
    Matrix out(n, total);
    for (std::size_t m = 0; m < slices.size(); ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (int t = 0; t < tc_samples; ++t)
                out(i, m * tc_samples + t) = slices[m].data(i, t);
    return out;
}

double coherence_time(double wavelength_m, double speed_mps, double angle_rad) {
    if (wavelength_m <= 0.0) throw ConfigInvalid("coherence_time: wavelength must be positive");
    if (speed_mps < 0.0) throw ConfigInvalid("coherence_time: speed must be nonnegative");
    const double denom = speed_mps * std::cos(angle_rad);
    if (denom <= 1e-12)
        throw DegenerateMotion("coherence_time: v*cos(theta) <= 1e-12, coherence time unbounded");
    return wavelength_m / denom;
}

NormalizedAdjacency normalize_adjacency(const Matrix& a) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw ShapeMismatch("normalize_adjacency: adjacency must be square");
    for (std::size_t i = 0; i < n; ++i) {
        if (a(i, i) != 0.0) throw ShapeMismatch("normalize_adjacency: diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            if (a(i, j) != 0.0 && a(i, j) != 1.0)
                throw ShapeMismatch("normalize_adjacency: entries must be 0/1");
            if (a(i, j) != a(j, i))
                throw ShapeMismatch("normalize_adjacency: adjacency must be symmetric");
        }
    }
    NormalizedAdjacency out;
    out.a_tilde = a;
    for (std::size_t i = 0; i < n; ++i) out.a_tilde(i, i) = 1.0; // self-loops added
    out.d_tilde_inv_sqrt = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += out.a_tilde(i, j);
        out.d_tilde_inv_sqrt(i, i) = 1.0 / std::sqrt(deg);
    }
    out.propagation = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.propagation(i, j) =
                out.d_tilde_inv_sqrt(i, i) * out.a_tilde(i, j) * out.d_tilde_inv_sqrt(j, j);
    return out;
}

Matrix adjacency_of(const GraphSlice& slice, std::size_t n_nodes, std::optional<Relation> rel) {
    Matrix a(n_nodes, n_nodes);
    for (const auto& e : slice.edges) {
        if (rel && e.rel != *rel) continue;
        a(static_cast<std::size_t>(e.src), static_cast<std::size_t>(e.dst)) = 1.0;
        a(static_cast<std::size_t>(e.dst), static_cast<std::size_t>(e.src)) = 1.0;
    }
    return a;
}

GraphSlice metapath_subgraph(const GraphSlice& slice, Relation rel) {
    GraphSlice out = slice;
    out.edges.clear();
    for (const auto& e : slice.edges)
        if (e.rel == rel) out.edges.push_back(e);
    return out;
}

std::vector<int> metapath_neighbors(const GraphSlice& slice, int node, Relation rel) {
    std::set<int> ids{node}; // the node itself is always a neighbor
    for (const auto& e : slice.edges) {
        if (e.rel != rel) continue;
        if (e.src == node) ids.insert(e.dst);
        if (e.dst == node) ids.insert(e.src);
    }
    return {ids.begin(), ids.end()};
}

std::vector<Matrix> frame_data(const GraphSlice& slice, int frame_len, int stride) {
    const int tc = slice.tick_count();
    if (frame_len > tc)
        throw FrameTooLong("frame_data: frame_len " + std::to_string(frame_len) +
                           " exceeds coherence block of " + std::to_string(tc) + " ticks");
    if (frame_len < 1) throw ConfigInvalid("frame_data: frame_len must be >= 1");
    if (stride < 1 || stride > frame_len)
        throw ConfigInvalid("frame_data: stride must be in [1, frame_len]");
    std::vector<Matrix> frames;
    for (int s = 0; s + frame_len <= tc; s += stride) {
        Matrix f(slice.data.rows, static_cast<std::size_t>(frame_len));
        for (std::size_t i = 0; i < slice.data.rows; ++i)
            for (int t = 0; t < frame_len; ++t) f(i, static_cast<std::size_t>(t)) = slice.data(i, s + t);
        frames.push_back(std::move(f));
    }
    return frames;
}

// --- serialization ---------------------------------------------------------

namespace {

const ordered_json& require(const ordered_json& j, const char* key, const std::string& at) {
    if (!j.contains(key)) throw SchemaViolation(at + ": missing `" + key + "` key");
    return j.at(key);
}

double parse_double_token(const std::string& tok, const std::string& at) {
    double x = 0.0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(b, e, x);
    if (ec != std::errc() || p != e)
        throw SchemaViolation(at + ": malformed number \"" + tok + "\"");
    return x;
}

} // namespace

void save_kg(const WirelessKG& kg, const std::filesystem::path& dir) {
    kg.validate();
    ordered_json root;
    root["nodes"] = ordered_json::array();
    for (const auto& n : kg.nodes) {
        root["nodes"].push_back({{"id", n.id},
                                 {"name", n.name},
                                 {"type", to_string(n.node_type)},
                                 {"layer", to_string(n.layer)},
                                 {"adjustable", n.adjustable}});
    }
    root["tc_samples"] = kg.tc_samples;
    root["slices"] = ordered_json::array();
    for (const auto& s : kg.slices) {
        ordered_json edges = ordered_json::array();
        for (const auto& e : s.edges)
            edges.push_back(ordered_json::array({e.src, e.dst, to_string(e.rel)}));
        root["slices"].push_back({{"index", s.index}, {"edges", edges}, {"t_start", s.t_start}});
    }
    io::atomic_write(dir / "kg.json", root.dump(2) + "\n");

    // Telemetry: one row per tick across all slices, columns named by node.
    std::string csv = "tick";
    for (const auto& n : kg.nodes) csv += "," + n.name;
    csv += "\n";
    for (const auto& s : kg.slices) {
        for (int t = 0; t < kg.tc_samples; ++t) {
            csv += std::to_string(s.t_start + t);
            for (std::size_t i = 0; i < kg.nodes.size(); ++i)
                csv += "," + io::format_double(s.data(i, static_cast<std::size_t>(t)));
            csv += "\n";
        }
    }
    io::atomic_write(dir / "telemetry.csv", csv);
}

WirelessKG load_kg(const std::filesystem::path& dir) {
    ordered_json root;
    try {
        root = ordered_json::parse(io::read_file(dir / "kg.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaViolation("kg.json: " + std::string(e.what()));
    }
    if (!root.is_object()) throw SchemaViolation("kg.json: root must be an object");

    WirelessKG kg;
    const auto& jn = require(root, "nodes", "kg.json");
    if (!jn.is_array()) throw SchemaViolation("nodes: must be an array");
    for (std::size_t i = 0; i < jn.size(); ++i) {
        const std::string at = "nodes[" + std::to_string(i) + "]";
        const auto& e = jn.at(i);
        if (!e.is_object()) throw SchemaViolation(at + ": must be an object");
        NodeMeta n;
        try {
            n.id = require(e, "id", at).get<int>();
            n.name = require(e, "name", at).get<std::string>();
            n.node_type = node_type_from_string(require(e, "type", at).get<std::string>());
            n.layer = layer_from_string(require(e, "layer", at).get<std::string>());
            n.adjustable = require(e, "adjustable", at).get<bool>();
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaViolation(at + ": " + ex.what());
        }
        kg.nodes.push_back(std::move(n));
    }
    try {
        kg.tc_samples = require(root, "tc_samples", "kg.json").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaViolation(std::string("tc_samples: ") + ex.what());
    }

    const auto& js = require(root, "slices", "kg.json");
    if (!js.is_array()) throw SchemaViolation("slices: must be an array");
    const std::size_t n = kg.nodes.size();
    for (std::size_t m = 0; m < js.size(); ++m) {
        const std::string at = "slices[" + std::to_string(m) + "]";
        const auto& e = js.at(m);
        GraphSlice s;
        try {
            s.index = require(e, "index", at).get<int>();
            s.t_start = require(e, "t_start", at).get<int>();
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaViolation(at + ": " + ex.what());
        }
        s.t_end = s.t_start + kg.tc_samples;
        const auto& je = require(e, "edges", at);
        if (!je.is_array()) throw SchemaViolation(at + ".edges: must be an array");
        for (std::size_t k = 0; k < je.size(); ++k) {
            const std::string eat = at + ".edges[" + std::to_string(k) + "]";
            const auto& t = je.at(k);
            if (!t.is_array() || t.size() != 3)
                throw SchemaViolation(eat + ": expected [src, dst, relation]");
            Edge edge;
            try {
                edge = make_edge(t.at(0).get<int>(), t.at(1).get<int>(),
                                 relation_from_string(t.at(2).get<std::string>()));
            } catch (const nlohmann::json::exception& ex) {
                throw SchemaViolation(eat + ": " + ex.what());
            }
            // Duplicates (in either orientation) are generator bugs: reject.
            for (const auto& prev : s.edges)
                if (prev.src == edge.src && prev.dst == edge.dst)
                    throw SchemaViolation(eat + ": duplicate edge (" + std::to_string(edge.src) +
                                          "," + std::to_string(edge.dst) + ")");
            s.edges.push_back(edge);
        }
        std::sort(s.edges.begin(), s.edges.end());
        s.data = Matrix(n, static_cast<std::size_t>(kg.tc_samples));
        kg.slices.push_back(std::move(s));
    }

    // telemetry.csv: header `tick,<node names...>`, one row per tick.
    const std::string csv = io::read_file(dir / "telemetry.csv");
    std::istringstream lines(csv);
    std::string line;
    if (!std::getline(lines, line)) throw SchemaViolation("telemetry.csv: empty file");
    {
        std::istringstream hdr(line);
        std::string col;
        if (!std::getline(hdr, col, ',') || col != "tick")
            throw SchemaViolation("telemetry.csv: first column must be `tick`");
        std::size_t i = 0;
        while (std::getline(hdr, col, ',')) {
            if (i >= n || col != kg.nodes[i].name)
                throw SchemaViolation("telemetry.csv: header column " + std::to_string(i + 1) +
                                      " does not match node order");
            ++i;
        }
        if (i != n) throw SchemaViolation("telemetry.csv: header has too few columns");
    }
    std::size_t row = 0;
    const std::size_t total = kg.slices.size() * static_cast<std::size_t>(kg.tc_samples);
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        if (row >= total) throw SchemaViolation("telemetry.csv: more rows than slice ticks");
        std::istringstream cells(line);
        std::string cell;
        const std::string at = "telemetry.csv row " + std::to_string(row + 2);
        if (!std::getline(cells, cell, ',')) throw SchemaViolation(at + ": missing tick");
        const std::size_t m = row / static_cast<std::size_t>(kg.tc_samples);
        const std::size_t t = row % static_cast<std::size_t>(kg.tc_samples);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(cells, cell, ','))
                throw SchemaViolation(at + ": missing column " + std::to_string(i + 1));
            kg.slices[m].data(i, t) = parse_double_token(cell, at);
        }
        ++row;
    }
    if (row != total) throw SchemaViolation("telemetry.csv: fewer rows than slice ticks");

    kg.validate();
    return kg;
}

} // namespace wdkg
