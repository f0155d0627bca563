#include "wdkg/feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "wdkg/errors.hpp"
#include "wdkg/rng.hpp"
#include "wdkg/tape.hpp"

namespace wdkg::fsel {

AssociationMatrix association_matrix(const Matrix& c, const Matrix& a, std::string c_source,
                                     std::string a_source) {
    if (!c.same_shape(a) || c.rows != c.cols)
        throw ShapeMismatch("association_matrix: similarity and adjacency must be square and equal");
    AssociationMatrix out;
    out.c_source = std::move(c_source);
    out.a_source = std::move(a_source);
    out.omega = Matrix(c.rows, c.cols);
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.cols; ++j)
            if (i != j && a(i, j) != 0.0) out.omega(i, j) = std::max(c(i, j), 0.0);
    return out;
}

namespace {

void check_omega(const Matrix& omega) {
    if (omega.rows != omega.cols)
        throw ShapeMismatch("impact: association matrix must be square");
    for (double w : omega.v)
        if (!(w >= 0.0 && w <= 1.0))
            throw ConfigInvalid("impact: association weights must lie in [0, 1]");
}

// Highest path product from `source` to every node.
std::vector<double> best_products(const Matrix& omega, int source) {
    const std::size_t n = omega.rows;
    std::vector<double> best(n, 0.0);
    std::vector<char> settled(n, 0);
    best[static_cast<std::size_t>(source)] = 1.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item> heap;
    heap.push({1.0, source});
    while (!heap.empty()) {
        auto [prod, v] = heap.top();
        heap.pop();
        const auto vi = static_cast<std::size_t>(v);
        if (settled[vi]) continue;
        settled[vi] = 1;
        for (std::size_t w = 0; w < n; ++w) {
            if (w == vi || settled[w]) continue;
            const double edge = omega(vi, w);
            if (edge <= 0.0) continue;
            const double cand = prod * edge;
            if (cand > best[w]) {
                best[w] = cand;
                heap.push({cand, static_cast<int>(w)});
            }
        }
    }
    return best;
}

} // namespace

double impact(const Matrix& omega, int source, int kpi) {
    check_omega(omega);
    const int n = static_cast<int>(omega.rows);
    if (source < 0 || source >= n || kpi < 0 || kpi >= n)
        throw ConfigInvalid("impact: node id out of range");
    if (source == kpi) throw ConfigInvalid("impact: source must differ from kpi");
    return best_products(omega, source)[static_cast<std::size_t>(kpi)];
}

std::vector<ImportanceRow> rank_features(const Matrix& omega, int kpi) {
    check_omega(omega);
    const int n = static_cast<int>(omega.rows);
    if (kpi < 0 || kpi >= n) throw ConfigInvalid("rank_features: kpi out of range");
    // One sweep from the KPI covers every source (omega is symmetric).
    const std::vector<double> best = best_products(omega, kpi);
    std::vector<ImportanceRow> table;
    for (int v = 0; v < n; ++v)
        if (v != kpi) table.push_back({v, best[static_cast<std::size_t>(v)]});
    std::stable_sort(table.begin(), table.end(), [](const ImportanceRow& a, const ImportanceRow& b) {
        if (a.impact != b.impact) return a.impact > b.impact;
        return a.node < b.node;
    });
    return table;
}

// --- regressor ---------------------------------------------------------------

namespace {

struct Standardizer {
    double mean = 0.0, sd = 1.0;
    void fit(const double* x, std::size_t n) {
        mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
        sd = std::sqrt(var / static_cast<double>(n));
        if (sd < 1e-12) sd = 1.0;
    }
    double fwd(double x) const { return (x - mean) / sd; }
    double inv(double z) const { return z * sd + mean; }
};

struct Mlp {
    std::vector<ad::Tensor> weights, biases;

    static Mlp init(int n_in, const std::vector<int>& hidden, Rng& rng) {
        Mlp net;
        std::vector<int> dims;
        dims.push_back(n_in);
        for (int h : hidden) dims.push_back(h);
        dims.push_back(1);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const auto in = static_cast<std::size_t>(dims[l]);
            const auto out = static_cast<std::size_t>(dims[l + 1]);
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            ad::Tensor w({in, out});
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
            net.weights.push_back(std::move(w));
            net.biases.emplace_back(ad::Shape{out});
        }
        return net;
    }

    ad::Var forward(ad::Tape& t, ad::Var x, const std::vector<ad::Var>& wv,
                    const std::vector<ad::Var>& bv) const {
        ad::Var h = x;
        for (std::size_t l = 0; l < wv.size(); ++l) {
            h = t.add_rowvec(t.matmul(h, wv[l]), bv[l]);
            if (l + 1 < wv.size()) h = t.relu(h);
        }
        return h;
    }
};

struct AdamState {
    std::vector<ad::Tensor> m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int step = 0;

    void init(const std::vector<ad::Tensor*>& params) {
        for (auto* p : params) {
            m.emplace_back(p->shape());
            v.emplace_back(p->shape());
        }
    }
    void update(std::vector<ad::Tensor*>& params, const std::vector<ad::Tensor>& grads, double lr) {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, step);
        const double c2 = 1.0 - std::pow(beta2, step);
        for (std::size_t p = 0; p < params.size(); ++p) {
            ad::Tensor& x = *params[p];
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double g = grads[p][i];
                m[p][i] = beta1 * m[p][i] + (1.0 - beta1) * g;
                v[p][i] = beta2 * v[p][i] + (1.0 - beta2) * g * g;
                x[i] -= lr * (m[p][i] / c1) / (std::sqrt(v[p][i] / c2) + eps);
            }
        }
    }
};

} // namespace

double fit_regressor(const std::vector<std::vector<double>>& feature_columns,
                     const std::vector<double>& kpi_series, const RegressorSpec& spec) {
    if (feature_columns.empty()) throw ConfigInvalid("fit_regressor: at least one feature required");
    const std::size_t total = kpi_series.size();
    for (const auto& col : feature_columns)
        if (col.size() != total)
            throw ShapeMismatch("fit_regressor: feature and KPI series lengths differ");
    for (int h : spec.hidden)
        if (h < 1) throw ConfigInvalid("fit_regressor: hidden layer widths must be positive");

    {
        double mean = 0.0;
        for (double y : kpi_series) mean += y;
        mean /= static_cast<double>(total);
        double var = 0.0;
        for (double y : kpi_series) var += (y - mean) * (y - mean);
        if (var == 0.0) throw DegenerateTarget("fit_regressor: KPI series is constant");
    }

    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(total)));
    if (n_train < 1 || n_train >= total)
        throw ConfigInvalid("fit_regressor: split leaves an empty train or validation set");
    const std::size_t n_val = total - n_train;
    const std::size_t f = feature_columns.size();

    // Standardize with training statistics only.
    std::vector<Standardizer> fstd(f);
    for (std::size_t j = 0; j < f; ++j) fstd[j].fit(feature_columns[j].data(), n_train);
    Standardizer ystd;
    ystd.fit(kpi_series.data(), n_train);

    ad::Tensor x_train({n_train, f}), y_train({n_train, 1});
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t j = 0; j < f; ++j) x_train.at(i, j) = fstd[j].fwd(feature_columns[j][i]);
        y_train.at(i, 0) = ystd.fwd(kpi_series[i]);
    }
    ad::Tensor x_val({n_val, f});
    for (std::size_t i = 0; i < n_val; ++i)
        for (std::size_t j = 0; j < f; ++j)
            x_val.at(i, j) = fstd[j].fwd(feature_columns[j][n_train + i]);

    Rng rng(spec.seed);
    Mlp net = Mlp::init(static_cast<int>(f), spec.hidden, rng);
    std::vector<ad::Tensor*> params;
    for (auto& w : net.weights) params.push_back(&w);
    for (auto& b : net.biases) params.push_back(&b);
    AdamState adam;
    adam.init(params);

    const double lr = 1e-2;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        ad::Tape t;
        std::vector<ad::Var> wv, bv;
        for (auto& w : net.weights) wv.push_back(t.param(w));
        for (auto& b : net.biases) bv.push_back(t.param(b));
        ad::Var pred = net.forward(t, t.constant(x_train), wv, bv);
        ad::Var diff = t.sub(pred, t.constant(y_train));
        ad::Var loss = t.mean_all(t.mul(diff, diff));
        t.backward(loss);
        std::vector<ad::Tensor> grads;
        for (ad::Var v : wv) grads.push_back(t.grad(v));
        for (ad::Var v : bv) grads.push_back(t.grad(v));
        adam.update(params, grads, lr);
    }

    // Validation predictions back in original units.
    ad::Tape t;
    std::vector<ad::Var> wv, bv;
    for (auto& w : net.weights) wv.push_back(t.constant(w));
    for (auto& b : net.biases) bv.push_back(t.constant(b));
    const ad::Tensor& pred = t.value(net.forward(t, t.constant(x_val), wv, bv));

    double mean_val = 0.0;
    for (std::size_t i = 0; i < n_val; ++i) mean_val += kpi_series[n_train + i];
    mean_val /= static_cast<double>(n_val);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n_val; ++i) {
        const double y = kpi_series[n_train + i];
        const double yhat = ystd.inv(pred.at(i, 0));
        ss_res += (y - yhat) * (y - yhat);
        ss_tot += (y - mean_val) * (y - mean_val);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

FeatureDataset greedy_select(const std::vector<ImportanceRow>& table, const Matrix& telemetry,
                             int kpi, double d, const RegressorSpec& spec,
                             const std::vector<std::string>& node_names) {
    if (d < 0.0 || d > 1.0) throw ConfigInvalid("greedy_select: threshold must be in [0, 1]");
    if (table.empty()) throw ConfigInvalid("greedy_select: empty importance table");
    std::vector<double> kpi_series(telemetry.cols);
    for (std::size_t t = 0; t < telemetry.cols; ++t)
        kpi_series[t] = telemetry(static_cast<std::size_t>(kpi), t);

    FeatureDataset out;
    out.threshold = d;
    std::vector<std::vector<double>> cols;
    for (const auto& row : table) {
        std::vector<double> col(telemetry.cols);
        for (std::size_t t = 0; t < telemetry.cols; ++t)
            col[t] = telemetry(static_cast<std::size_t>(row.node), t);
        cols.push_back(std::move(col));
        out.nodes.push_back(row.node);
        out.achieved_fit = fit_regressor(cols, kpi_series, spec);
        if (out.achieved_fit >= d) {
            out.reached = true;
            break;
        }
    }
    if (!node_names.empty())
        for (int node : out.nodes) out.names.push_back(node_names[static_cast<std::size_t>(node)]);
    out.compression_percent =
        compression_ratio(static_cast<int>(out.nodes.size()), static_cast<int>(table.size()));
    return out;
}

double compression_ratio(int n_selected, int n_total) {
    if (n_selected < 1 || n_selected > n_total)
        throw ConfigInvalid("compression_ratio: need 1 <= n_selected <= n_total");
    return 100.0 * (1.0 - static_cast<double>(n_selected) / static_cast<double>(n_total));
}

CostReport cost_report(const RegressorSpec& spec, int n_inputs) {
    if (n_inputs < 1) throw ConfigInvalid("cost_report: n_inputs must be >= 1");
    for (int h : spec.hidden)
        if (h < 1) throw ConfigInvalid("cost_report: hidden layer widths must be positive");
    std::vector<long long> dims;
    dims.push_back(n_inputs);
    for (int h : spec.hidden) dims.push_back(h);
    dims.push_back(1);
    CostReport r;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        r.params += dims[l] * dims[l + 1] + dims[l + 1];
        r.flops += 2 * dims[l] * dims[l + 1] + dims[l + 1];
    }
    r.gflops = static_cast<double>(r.flops) / 1e9;
    return r;
}

} // namespace wdkg::fsel
