#ifndef WDKG_SYNTH_HPP
#define WDKG_SYNTH_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "wdkg/graph.hpp"

namespace wdkg::synth {

// Desk-scale stand-in for a live telemetry testbed: a latent base topology,
// per-slice edge dropouts, and a structural-causal telemetry model so that
// link prediction and feature selection both have recoverable ground truth.
struct SynthConfig {
    int n_nodes = 82;
    int n_types = 9;
    std::array<double, 3> relation_mix = {70.0, 35.0, 28.0}; // causal : explicit : implicit
    int n_edges = 133;
    int n_slices = 30;
    int tc_samples = 100;
    double edge_flip_prob = 0.05; // per-slice dropout of non-KPI base edges
    double noise_sigma = 0.1;
    int kpi_node = 0;
    std::vector<int> kpi_parents = {1, 2, 3, 4};
    std::uint64_t seed = 5;

    void validate() const; // throws ConfigInvalid with the reason
};

struct GroundTruth {
    std::vector<Edge> base_edges; // latent topology, sorted
    int kpi_node = 0;
    std::vector<int> kpi_parents;
};

struct SynthResult {
    WirelessKG kg;
    GroundTruth truth;
};

// Deterministic in config.seed: same config yields byte-identical artifacts.
SynthResult generate(const SynthConfig& config);

inline const GroundTruth& ground_truth(const SynthResult& r) { return r.truth; }

} // namespace wdkg::synth

#endif
