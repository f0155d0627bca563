#include "wdkg/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "wdkg/errors.hpp"
#include "wdkg/rng.hpp"

namespace wdkg::linkpred {

namespace {
constexpr std::uint64_t kStreamMask = 0x40000;
constexpr std::uint64_t kStreamNeg = 0x50000;
} // namespace

MaskedView mask_edges(const WirelessKG& kg, double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw ConfigInvalid("mask_edges: ratio must be in [0, 1)");
    MaskedView view;
    view.mask_ratio = ratio;
    for (std::size_t m = 0; m < kg.slices.size(); ++m) {
        const auto& edges = kg.slices[m].edges;
        const auto n_mask = static_cast<std::size_t>(ratio * static_cast<double>(edges.size()));
        std::vector<std::size_t> idx(edges.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng = Rng::derive(seed, kStreamMask + m);
        rng.shuffle(idx);
        std::set<std::size_t> masked(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_mask));
        std::vector<Edge> train;
        std::vector<Pair> held;
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (masked.count(i)) held.emplace_back(edges[i].src, edges[i].dst);
            else train.push_back(edges[i]);
        }
        std::sort(held.begin(), held.end());
        view.train_edges.push_back(std::move(train));
        view.heldout.push_back(std::move(held));
    }
    view.negatives.resize(kg.slices.size());
    return view;
}

MaskedView sample_negatives(const WirelessKG& kg, MaskedView view, int neg_ratio,
                            std::uint64_t seed) {
    if (neg_ratio < 0) throw ConfigInvalid("sample_negatives: neg_ratio must be >= 0");
    view.neg_ratio = neg_ratio;
    const int n = static_cast<int>(kg.node_count());

    // True non-edges: pairs absent from every slice.
    std::set<Pair> ever;
    for (const auto& s : kg.slices)
        for (const auto& e : s.edges) ever.insert({e.src, e.dst});
    const std::size_t pool =
        static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2 - ever.size();

    view.negatives.assign(kg.slices.size(), {});
    for (std::size_t m = 0; m < kg.slices.size(); ++m) {
        const std::size_t want = view.heldout[m].size() * static_cast<std::size_t>(neg_ratio);
        if (want > pool)
            throw InsufficientNonEdges("sample_negatives: need " + std::to_string(want) +
                                       " non-edges but only " + std::to_string(pool) + " exist");
        Rng rng = Rng::derive(seed, kStreamNeg + m);
        std::set<Pair> chosen;
        while (chosen.size() < want) {
            int a = static_cast<int>(rng.uniform_int(0, n - 1));
            int b = static_cast<int>(rng.uniform_int(0, n - 1));
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (ever.count({a, b})) continue;
            chosen.insert({a, b});
        }
        view.negatives[m].assign(chosen.begin(), chosen.end());
    }
    return view;
}

CosineResult cosine_matrix(const Matrix& z) {
    const std::size_t n = z.rows;
    CosineResult out;
    out.c = Matrix(n, n);
    std::vector<double> norm(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < z.cols; ++j) s += z(i, j) * z(i, j);
        norm[i] = std::sqrt(s);
        if (norm[i] == 0.0) out.zero_row = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double c = 0.0;
            if (norm[i] > 0.0 && norm[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t k = 0; k < z.cols; ++k) dot += z(i, k) * z(j, k);
                c = dot / (norm[i] * norm[j]);
            }
            out.c(i, j) = c;
            out.c(j, i) = c;
        }
    }
    return out;
}

std::vector<Pair> predict_links(const Matrix& c, std::size_t k) {
    const std::size_t n = c.rows;
    if (c.cols != n) throw ShapeMismatch("predict_links: similarity matrix must be square");
    const std::size_t n_pairs = n * (n - 1) / 2;
    if (k < 1 || k > n_pairs)
        throw ConfigInvalid("predict_links: k must be in [1, " + std::to_string(n_pairs) + "]");

    struct Entry {
        double score;
        Pair p;
    };
    std::vector<Entry> entries;
    entries.reserve(n_pairs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            entries.push_back({c(i, j), {static_cast<int>(i), static_cast<int>(j)}});
    // Descending score; lexicographically smallest pair wins inside a tie.
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.p < b.p;
    });
    std::vector<Pair> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(entries[i].p);
    std::sort(out.begin(), out.end());
    return out;
}

MetricsReport evaluate(const std::vector<ScoredPair>& positives,
                       const std::vector<ScoredPair>& negatives) {
    const std::size_t p = positives.size(), q = negatives.size();
    if (p + q == 0) throw EmptyTestSet("evaluate: no labeled pairs");

    MetricsReport r;
    for (const auto& s : positives) (s.predicted ? r.tp : r.fn)++;
    for (const auto& s : negatives) (s.predicted ? r.fp : r.tn)++;
    const double total = static_cast<double>(p + q);
    r.accuracy = static_cast<double>(r.tp + r.tn) / total;
    r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;

    if (p == 0 || q == 0) {
        r.auc = 0.5;
        return r;
    }
    // Rank statistic: AUC = (R_pos - p(p+1)/2) / (p*q), ties share ranks.
    struct Scored {
        double score;
        bool is_pos;
    };
    std::vector<Scored> all;
    all.reserve(p + q);
    for (const auto& s : positives) all.push_back({s.score, true});
    for (const auto& s : negatives) all.push_back({s.score, false});
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (all[t].is_pos) rank_sum += avg_rank;
        i = j;
    }
    const double pd = static_cast<double>(p), qd = static_cast<double>(q);
    r.auc = (rank_sum - pd * (pd + 1.0) / 2.0) / (pd * qd);
    return r;
}

SliceEvaluation evaluate_slices(const WirelessKG& kg, const MaskedView& view,
                                const std::vector<Matrix>& similarity) {
    if (similarity.size() != kg.slices.size())
        throw ShapeMismatch("evaluate_slices: one similarity matrix per slice required");
    SliceEvaluation out;
    std::vector<ScoredPair> pooled_pos, pooled_neg;
    for (std::size_t m = 0; m < kg.slices.size(); ++m) {
        const Matrix& c = similarity[m];
        const std::size_t k = kg.slices[m].edges.size(); // paper protocol: k = |E_m|
        const auto predicted_list = predict_links(c, k);
        const std::set<Pair> predicted(predicted_list.begin(), predicted_list.end());
        std::vector<ScoredPair> pos, neg;
        for (const auto& [i, j] : view.heldout[m])
            pos.push_back({c(static_cast<std::size_t>(i), static_cast<std::size_t>(j)),
                           predicted.count({i, j}) > 0});
        for (const auto& [i, j] : view.negatives[m])
            neg.push_back({c(static_cast<std::size_t>(i), static_cast<std::size_t>(j)),
                           predicted.count({i, j}) > 0});
        out.per_slice.push_back(evaluate(pos, neg));
        pooled_pos.insert(pooled_pos.end(), pos.begin(), pos.end());
        pooled_neg.insert(pooled_neg.end(), neg.begin(), neg.end());
    }
    out.micro = evaluate(pooled_pos, pooled_neg);
    MetricsReport& macro = out.macro_mean;
    for (const auto& r : out.per_slice) {
        macro.accuracy += r.accuracy;
        macro.precision += r.precision;
        macro.recall += r.recall;
        macro.f1 += r.f1;
        macro.auc += r.auc;
        macro.tp += r.tp;
        macro.fp += r.fp;
        macro.tn += r.tn;
        macro.fn += r.fn;
    }
    const double inv = 1.0 / static_cast<double>(out.per_slice.size());
    macro.accuracy *= inv;
    macro.precision *= inv;
    macro.recall *= inv;
    macro.f1 *= inv;
    macro.auc *= inv;
    return out;
}

} // namespace wdkg::linkpred
