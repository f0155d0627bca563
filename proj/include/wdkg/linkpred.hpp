#ifndef WDKG_LINKPRED_HPP
#define WDKG_LINKPRED_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "wdkg/graph.hpp"

namespace wdkg::linkpred {

using Pair = std::pair<int, int>; // canonical i < j

// Per-slice masking protocol: held-out positives are removed from the
// training view, negatives are sampled from pairs that are non-edges in
// every slice.
struct MaskedView {
    double mask_ratio = 0.0;
    int neg_ratio = 0;
    std::vector<std::vector<Edge>> train_edges; // per slice
    std::vector<std::vector<Pair>> heldout;     // per slice positives
    std::vector<std::vector<Pair>> negatives;   // per slice sampled non-edges
};

MaskedView mask_edges(const WirelessKG& kg, double ratio, std::uint64_t seed);

// Fills view.negatives; throws InsufficientNonEdges when the global
// non-edge pool is smaller than any slice demands.
MaskedView sample_negatives(const WirelessKG& kg, MaskedView view, int neg_ratio,
                            std::uint64_t seed);

struct CosineResult {
    Matrix c;
    bool zero_row = false; // some embedding row had zero norm
};

// Pairwise cosine similarity of matrix rows; zero-norm rows score 0.
CosineResult cosine_matrix(const Matrix& z);

// Top-k thresholding over the strict upper triangle. Exactly k pairs are
// returned; ties at the threshold resolve to the lexicographically
// smallest (i, j).
std::vector<Pair> predict_links(const Matrix& c, std::size_t k);

struct ScoredPair {
    double score = 0.0;
    bool predicted = false;
};

struct MetricsReport {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0, auc = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Confusion metrics from the binary predictions, AUC from the raw scores
// by rank statistic with ties counted half. When one class is empty the
// AUC is reported as 0.5 (no ranking information).
MetricsReport evaluate(const std::vector<ScoredPair>& positives,
                       const std::vector<ScoredPair>& negatives);

// Full per-slice protocol: similarity[m] scores slice m, the top-|E_m|
// pairs become predictions, metrics are computed over held-out positives
// and sampled negatives. Whether slice aggregation should be micro (pool
// all pairs) or macro (average per-slice metrics) is unsettled, so both
// are reported.
struct SliceEvaluation {
    std::vector<MetricsReport> per_slice;
    MetricsReport micro;
    MetricsReport macro_mean;
};

SliceEvaluation evaluate_slices(const WirelessKG& kg, const MaskedView& view,
                                const std::vector<Matrix>& similarity);

} // namespace wdkg::linkpred

#endif
