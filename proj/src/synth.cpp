#include "wdkg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "wdkg/errors.hpp"
#include "wdkg/rng.hpp"

namespace wdkg::synth {

namespace {

constexpr double kArCoeff = 0.9; // coherence-block smoothness

constexpr std::uint64_t kStreamTopology = 0x10;
constexpr std::uint64_t kStreamFlips = 0x20000;
constexpr std::uint64_t kStreamTelemetry = 0x30000;

// Coupling strength by relation class. Causal links are tight and mostly
// sign-preserving, implicit ones loose and sign-ambiguous, which is what
// gives the heterogeneous attention something to exploit.
struct CouplingProfile {
    double lo, hi, neg_prob;
};

CouplingProfile profile_for(Relation r) {
    switch (r) {
        case Relation::Causal: return {0.75, 0.95, 0.15};
        case Relation::Explicit: return {0.50, 0.75, 0.30};
        case Relation::Implicit: return {0.10, 0.30, 0.50};
    }
    return {0.5, 0.5, 0.0};
}

std::string node_name(int id, const SynthConfig& cfg) {
    if (id == cfg.kpi_node) return "PHY_ul_throughput";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "field_%03d", id);
    return buf;
}

} // namespace

void SynthConfig::validate() const {
    if (n_nodes < 2) throw ConfigInvalid("synth: n_nodes must be >= 2");
    if (n_types < 1 || n_types > kNodeTypeCount)
        throw ConfigInvalid("synth: n_types must be in [1, 9]");
    if (n_edges < 0) throw ConfigInvalid("synth: n_edges must be >= 0");
    const long long max_pairs = static_cast<long long>(n_nodes) * (n_nodes - 1) / 2;
    if (n_edges > max_pairs)
        throw ConfigInvalid("synth: n_edges exceeds the number of node pairs");
    if (n_slices < 1) throw ConfigInvalid("synth: n_slices must be >= 1");
    if (tc_samples < 1) throw ConfigInvalid("synth: tc_samples must be >= 1");
    if (edge_flip_prob < 0.0 || edge_flip_prob >= 1.0)
        throw ConfigInvalid("synth: edge_flip_prob must be in [0, 1)");
    if (noise_sigma < 0.0) throw ConfigInvalid("synth: noise_sigma must be >= 0");
    if (relation_mix[0] < 0 || relation_mix[1] < 0 || relation_mix[2] < 0 ||
        relation_mix[0] + relation_mix[1] + relation_mix[2] <= 0)
        throw ConfigInvalid("synth: relation_mix weights must be nonnegative with positive sum");
    if (kpi_node < 0 || kpi_node >= n_nodes) throw ConfigInvalid("synth: kpi_node out of range");
    std::set<int> parents(kpi_parents.begin(), kpi_parents.end());
    if (parents.size() != kpi_parents.size())
        throw ConfigInvalid("synth: kpi_parents must be distinct");
    for (int p : kpi_parents) {
        if (p == kpi_node) throw ConfigInvalid("synth: kpi_parents must exclude kpi_node");
        if (p < 0 || p >= n_nodes) throw ConfigInvalid("synth: kpi_parent id out of range");
    }
    // Non-KPI pair capacity must still hold the random remainder.
    const long long used_parents =
        std::min<long long>(static_cast<long long>(kpi_parents.size()), n_edges);
    const long long capacity = static_cast<long long>(n_nodes - 1) * (n_nodes - 2) / 2;
    if (n_edges - used_parents > capacity)
        throw ConfigInvalid("synth: n_edges exceeds capacity of non-KPI node pairs");
}

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_nodes;

    Rng topo = Rng::derive(cfg.seed, kStreamTopology);

    // --- base topology --------------------------------------------------
    // KPI-incident edges are exactly the configured parents. Causal and
    // explicit edges prefer nearby nodes in a latent plane, giving the
    // clustered, hub-and-neighborhood look of protocol-derived KGs;
    // implicit edges are loose long-range associations drawn uniformly.
    // n_edges == 0 means a fully edgeless KG (the KPI then has no parents).
    std::vector<Edge> base;
    std::set<std::pair<int, int>> taken;
    std::vector<int> used_parents;
    for (int p : cfg.kpi_parents) {
        if (static_cast<int>(base.size()) >= cfg.n_edges) break;
        Edge e = make_edge(cfg.kpi_node, p, Relation::Causal);
        base.push_back(e);
        taken.insert({e.src, e.dst});
        used_parents.push_back(p);
    }
    {
        std::vector<std::pair<double, double>> pos(static_cast<std::size_t>(n));
        for (auto& [x, y] : pos) {
            x = topo.uniform();
            y = topo.uniform();
        }
        // The KPI's drivers form one related group of fields: co-locating
        // them wires them to each other, so their series move together the
        // way interacting counters do.
        // Spread controls how much the drivers overlap: wide enough that one
        // field cannot stand in for the group, close enough to stay related.
        for (std::size_t k = 0; k < used_parents.size(); ++k) {
            const double angle = 6.283185307179586 * static_cast<double>(k) /
                                 static_cast<double>(used_parents.size());
            const double radius = 0.12 + topo.uniform(-0.02, 0.02);
            pos[static_cast<std::size_t>(used_parents[k])] = {0.5 + radius * std::cos(angle),
                                                              0.5 + radius * std::sin(angle)};
        }
        struct Cand {
            double dist;
            int a, b;
        };
        std::vector<Cand> cands;
        for (int a = 0; a < n; ++a) {
            if (a == cfg.kpi_node) continue;
            for (int b = a + 1; b < n; ++b) {
                if (b == cfg.kpi_node) continue;
                const double dx = pos[static_cast<std::size_t>(a)].first -
                                  pos[static_cast<std::size_t>(b)].first;
                const double dy = pos[static_cast<std::size_t>(a)].second -
                                  pos[static_cast<std::size_t>(b)].second;
                cands.push_back({dx * dx + dy * dy, a, b});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
            if (x.dist != y.dist) return x.dist < y.dist;
            return std::pair{x.a, x.b} < std::pair{y.a, y.b};
        });
        std::size_t next_near = 0;
        while (static_cast<int>(base.size()) < cfg.n_edges) {
            const double w0 = cfg.relation_mix[0];
            const double w1 = cfg.relation_mix[1];
            const double w2 = cfg.relation_mix[2];
            const double pick = topo.uniform() * (w0 + w1 + w2);
            const Relation rel = pick < w0 ? Relation::Causal
                                           : (pick < w0 + w1 ? Relation::Explicit
                                                             : Relation::Implicit);
            if (rel == Relation::Implicit) {
                // Loose associations bridge unrelated regions: drawn from
                // the far half of the distance ordering.
                const auto lo = cands.size() / 2;
                const auto pick_idx = lo + static_cast<std::size_t>(topo.uniform_int(
                                               0, static_cast<std::int64_t>(cands.size() - lo) - 1));
                const auto& c = cands[pick_idx];
                if (!taken.insert({c.a, c.b}).second) continue;
                base.push_back(Edge{c.a, c.b, rel});
            } else {
                while (next_near < cands.size() &&
                       taken.count({cands[next_near].a, cands[next_near].b}))
                    ++next_near;
                if (next_near >= cands.size()) break; // locality pool exhausted
                const auto& c = cands[next_near++];
                taken.insert({c.a, c.b});
                base.push_back(Edge{c.a, c.b, rel});
            }
        }
        // Exhausted locality pool (dense configs): fill uniformly.
        while (static_cast<int>(base.size()) < cfg.n_edges) {
            int a = static_cast<int>(topo.uniform_int(0, n - 1));
            int b = static_cast<int>(topo.uniform_int(0, n - 1));
            if (a == b || a == cfg.kpi_node || b == cfg.kpi_node) continue;
            if (a > b) std::swap(a, b);
            if (!taken.insert({a, b}).second) continue;
            base.push_back(Edge{a, b, Relation::Implicit});
        }
    }
    std::sort(base.begin(), base.end());

    // Fixed per-edge couplings, drawn once so correlations persist across
    // slices. Edge (i,j) with i < j drives j from i; the KPI is generated
    // last regardless of its id.
    std::map<std::pair<int, int>, double> coupling;
    for (const auto& e : base) {
        if (e.src == cfg.kpi_node || e.dst == cfg.kpi_node) {
            coupling[{e.src, e.dst}] = topo.uniform(0.6, 0.95); // KPI map stays positive
        } else {
            const auto prof = profile_for(e.rel);
            double w = topo.uniform(prof.lo, prof.hi);
            if (topo.bernoulli(prof.neg_prob)) w = -w;
            coupling[{e.src, e.dst}] = w;
        }
    }

    // --- node metadata ---------------------------------------------------
    WirelessKG kg;
    kg.tc_samples = cfg.tc_samples;
    for (int i = 0; i < n; ++i) {
        NodeMeta m;
        m.id = i;
        m.name = node_name(i, cfg);
        if (i == cfg.kpi_node) {
            m.node_type = NodeType::Throughput;
            m.layer = Layer::PHY;
            m.adjustable = false;
        } else {
            m.node_type = static_cast<NodeType>(i % cfg.n_types);
            m.layer = static_cast<Layer>(static_cast<int>(topo.uniform_int(0, 4)));
            m.adjustable = topo.bernoulli(0.5);
        }
        kg.nodes.push_back(std::move(m));
    }

    // Generation order: non-KPI nodes by ascending id, KPI last.
    std::vector<int> gen_order;
    std::vector<int> order_pos(n, 0);
    for (int i = 0; i < n; ++i)
        if (i != cfg.kpi_node) gen_order.push_back(i);
    gen_order.push_back(cfg.kpi_node);
    for (int k = 0; k < n; ++k) order_pos[gen_order[static_cast<std::size_t>(k)]] = k;

    // --- slices ----------------------------------------------------------
    for (int m = 0; m < cfg.n_slices; ++m) {
        GraphSlice slice;
        slice.index = m;
        slice.t_start = m * cfg.tc_samples;
        slice.t_end = slice.t_start + cfg.tc_samples;

        Rng flips = Rng::derive(cfg.seed, kStreamFlips + static_cast<std::uint64_t>(m));
        for (const auto& e : base) {
            const bool kpi_incident = e.src == cfg.kpi_node || e.dst == cfg.kpi_node;
            // Draw unconditionally so the stream stays aligned across configs.
            const bool drop = flips.bernoulli(cfg.edge_flip_prob);
            if (!kpi_incident && drop) continue;
            slice.edges.push_back(e);
        }

        // Structural telemetry: roots are AR(1), children mix the series of
        // their already-generated slice neighbors plus Gaussian noise.
        Rng tel = Rng::derive(cfg.seed, kStreamTelemetry + static_cast<std::uint64_t>(m));
        slice.data = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(cfg.tc_samples));
        const double innov = std::sqrt(1.0 - kArCoeff * kArCoeff);
        // Structural pass over the non-KPI fields first; the KPI follows as
        // an exact linear map of its parents' observed series.
        auto parents_of = [&](int node) {
            std::vector<std::pair<int, double>> parents; // (node, coupling)
            for (const auto& e : slice.edges) {
                int other = -1;
                if (e.src == node) other = e.dst;
                else if (e.dst == node) other = e.src;
                else continue;
                if (order_pos[other] < order_pos[node])
                    parents.emplace_back(other, coupling.at({e.src, e.dst}));
            }
            return parents;
        };
        auto mix_parents = [&](int node, const std::vector<std::pair<int, double>>& parents) {
            const auto row = static_cast<std::size_t>(node);
            const double scale = 1.0 / std::sqrt(static_cast<double>(parents.size()));
            for (int t = 0; t < cfg.tc_samples; ++t) {
                double x = 0.0;
                for (const auto& [p, w] : parents)
                    x += w * slice.data(static_cast<std::size_t>(p), static_cast<std::size_t>(t));
                x *= scale;
                x += cfg.noise_sigma * tel.normal();
                slice.data(row, static_cast<std::size_t>(t)) = x;
            }
        };
        for (int node : gen_order) {
            if (node == cfg.kpi_node) continue;
            const auto parents = parents_of(node);
            const auto row = static_cast<std::size_t>(node);
            if (parents.empty()) {
                double x = tel.normal();
                slice.data(row, 0) = x;
                for (int t = 1; t < cfg.tc_samples; ++t) {
                    x = kArCoeff * x + innov * tel.normal();
                    slice.data(row, static_cast<std::size_t>(t)) = x;
                }
            } else {
                mix_parents(node, parents);
            }
        }
        {
            const auto parents = parents_of(cfg.kpi_node);
            const auto row = static_cast<std::size_t>(cfg.kpi_node);
            if (parents.empty()) {
                double x = tel.normal();
                slice.data(row, 0) = x;
                for (int t = 1; t < cfg.tc_samples; ++t) {
                    x = kArCoeff * x + innov * tel.normal();
                    slice.data(row, static_cast<std::size_t>(t)) = x;
                }
            } else {
                mix_parents(cfg.kpi_node, parents);
            }
        }
        kg.slices.push_back(std::move(slice));
    }

    kg.validate();
    SynthResult out;
    out.kg = std::move(kg);
    out.truth.base_edges = std::move(base);
    out.truth.kpi_node = cfg.kpi_node;
    out.truth.kpi_parents = std::move(used_parents);
    return out;
}

} // namespace wdkg::synth
