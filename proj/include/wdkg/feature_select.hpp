#ifndef WDKG_FEATURE_SELECT_HPP
#define WDKG_FEATURE_SELECT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wdkg/matrix.hpp"

namespace wdkg::fsel {

struct AssociationMatrix {
    Matrix omega;         // edge-masked, clamped to [0, 1]
    std::string c_source; // provenance of the similarity matrix
    std::string a_source; // provenance of the adjacency mask
};

// omega(i,j) = 0 where a(i,j) = 0, else max(c(i,j), 0). Negative
// similarities clamp so path products stay in [0, 1].
AssociationMatrix association_matrix(const Matrix& c, const Matrix& a,
                                     std::string c_source = "",
                                     std::string a_source = "");

// Maximum product of edge associations over any path from source to kpi;
// 0 when disconnected. Most-reliable-path search: with weights in [0, 1]
// extending a path never increases its product, so a Dijkstra sweep that
// always settles the highest product is exact (equivalently, shortest
// path under -log weights).
double impact(const Matrix& omega, int source, int kpi);

struct ImportanceRow {
    int node = 0;
    double impact = 0.0;
};

// Impact of every node on the KPI, descending, ties by ascending id.
// The KPI itself is excluded.
std::vector<ImportanceRow> rank_features(const Matrix& omega, int kpi);

struct RegressorSpec {
    std::vector<int> hidden = {32, 32, 32}; // rectifier units per hidden layer
    double train_fraction = 0.8;            // chronological split
    int epochs = 200;
    std::uint64_t seed = 5;
};

// Trains the configured fully-connected network on the chronological split
// and returns the validation coefficient of determination.
double fit_regressor(const std::vector<std::vector<double>>& feature_columns,
                     const std::vector<double>& kpi_series, const RegressorSpec& spec);

struct FeatureDataset {
    std::vector<int> nodes;         // prefix of the importance table
    std::vector<std::string> names; // resolved field names (when provided)
    double achieved_fit = 0.0;      // d'
    double threshold = 0.0;         // d
    double compression_percent = 0.0;
    bool reached = false; // false = threshold never met, all candidates kept
};

// Walks the table in order, refitting after each addition, and stops at the
// first fit >= d. telemetry holds one row per node over the full period.
FeatureDataset greedy_select(const std::vector<ImportanceRow>& table, const Matrix& telemetry,
                             int kpi, double d, const RegressorSpec& spec,
                             const std::vector<std::string>& node_names = {});

// 100 * (1 - selected/total); reports round it to two decimals.
double compression_ratio(int n_selected, int n_total);

struct CostReport {
    long long params = 0;
    long long flops = 0;       // per forward pass
    double gflops = 0.0;       // flops / 1e9
    double wall_time_s = 0.0;  // filled by the caller from a real fit
};

CostReport cost_report(const RegressorSpec& spec, int n_inputs);

} // namespace wdkg::fsel

#endif
