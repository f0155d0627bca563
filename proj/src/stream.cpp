#include "wdkg/stream.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "wdkg/errors.hpp"
#include "wdkg/io.hpp"
#include "wdkg/rng.hpp"

namespace wdkg::stream {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kAttnLeakSlope = 0.2;
constexpr std::uint64_t kStreamInit = 0x600;
constexpr std::uint64_t kStreamShuffle = 0x700;

// T sizes entering each layer; index n_layers holds the final extent.
std::vector<int> time_plan(const StreamConfig& cfg) {
    std::vector<int> t;
    t.push_back(cfg.frame_len);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const int cur = t.back();
        t.push_back(l % 3 == 1 ? cur : cur - (cfg.temporal_kernel - 1));
    }
    return t;
}

int channels_in(const StreamConfig& cfg, int layer) {
    return layer == 0 ? 1 : cfg.channels[static_cast<std::size_t>(layer - 1)];
}

void glorot_fill(ad::Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

Matrix standardize_rows(const Matrix& data) {
    Matrix out(data.rows, data.cols);
    for (std::size_t i = 0; i < data.rows; ++i) {
        double mean = 0.0;
        for (std::size_t t = 0; t < data.cols; ++t) mean += data(i, t);
        mean /= static_cast<double>(data.cols);
        double var = 0.0;
        for (std::size_t t = 0; t < data.cols; ++t) var += (data(i, t) - mean) * (data(i, t) - mean);
        double sd = std::sqrt(var / static_cast<double>(data.cols));
        if (sd < 1e-12) sd = 1.0;
        for (std::size_t t = 0; t < data.cols; ++t) out(i, t) = (data(i, t) - mean) / sd;
    }
    return out;
}

} // namespace

void StreamConfig::validate(std::size_t n_nodes) const {
    if (embed_dim < 1) throw ConfigInvalid("stream: embed_dim must be >= 1");
    if (n_layers < 3 || n_layers % 3 != 0)
        throw ConfigInvalid("stream: n_layers must be a positive multiple of 3");
    if (channels.size() != static_cast<std::size_t>(n_layers))
        throw ConfigInvalid("stream: channels must list one output width per layer");
    for (int c : channels)
        if (c < 1) throw ConfigInvalid("stream: channel widths must be positive");
    if (temporal_kernel < 1 || temporal_kernel > frame_len)
        throw ConfigInvalid("stream: temporal_kernel must be in [1, frame_len]");
    if (spatial_kernel < 1 || spatial_kernel > static_cast<int>(n_nodes))
        throw ConfigInvalid("stream: spatial_kernel must be in [1, N]");
    if (spatial_kernel != 1)
        throw ConfigInvalid("stream: the stacked model requires spatial_kernel = 1 "
                            "(the spatial layers need the node axis preserved)");
    if (attention_dim < 1) throw ConfigInvalid("stream: attention_dim must be >= 1");
    if (frame_len < 1) throw ConfigInvalid("stream: frame_len must be >= 1");
    if (stride < 1 || stride > frame_len)
        throw ConfigInvalid("stream: stride must be in [1, frame_len]");
    if (epochs < 0) throw ConfigInvalid("stream: epochs must be >= 0");
    if (batch_size < 1) throw ConfigInvalid("stream: batch_size must be >= 1");
    if (lr < 0.0) throw ConfigInvalid("stream: lr must be >= 0");
    if (lr_decay <= 0.0) throw ConfigInvalid("stream: lr_decay must be positive");
    if (lr_decay_every < 1) throw ConfigInvalid("stream: lr_decay_every must be >= 1");
    const auto plan = time_plan(*this);
    if (plan.back() < 1)
        throw ConfigInvalid("stream: temporal kernels consume the whole frame; "
                            "increase frame_len or reduce layers/kernel");
}

StreamParams StreamParams::init(const StreamConfig& cfg, std::size_t n_nodes) {
    cfg.validate(n_nodes);
    Rng rng = Rng::derive(cfg.seed, kStreamInit);
    const auto plan = time_plan(cfg);
    // Kernels start near paired signed identity taps (output channel 2k/2k+1
    // passes +/- input channel k, plus small noise). The rectifier then
    // splits each signal losslessly into its two half-waves, so the
    // untrained stack is already a graph-smoothing filter of the telemetry
    // instead of a random projection, and a few plain-gradient epochs are
    // enough to specialize it.
    constexpr double kIdentNoise = 0.15;
    StreamParams p;
    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto ci = static_cast<std::size_t>(channels_in(cfg, l));
        const auto co = static_cast<std::size_t>(cfg.channels[static_cast<std::size_t>(l)]);
        const auto t = static_cast<std::size_t>(plan[static_cast<std::size_t>(l)]);
        if (l % 3 == 1) {
            HgatParams h;
            const std::size_t d = t * co;
            for (int rel = 0; rel < kRelationCount; ++rel) {
                auto& o = h.gcn_o[rel];
                o = ad::Tensor({co, ci, t, t});
                glorot_fill(o, t * ci, t * co, rng);
                for (std::size_t i = 0; i < o.size(); ++i) o[i] *= kIdentNoise;
                // Tightness prior over edge classes: causal links start at
                // full strength, loose implicit associations damped.
                // Training is free to rescale.
                const double tightness =
                    rel == static_cast<int>(Relation::Causal) ? 1.0
                    : rel == static_cast<int>(Relation::Explicit) ? 0.7
                                                                  : 0.15;
                for (std::size_t j = 0; j < co; ++j) {
                    const std::size_t src = (j / 2) % ci;
                    const double sign = (j % 2 == 0) ? tightness : -tightness;
                    for (std::size_t tt = 0; tt < t; ++tt)
                        o[((j * ci + src) * t + tt) * t + tt] += sign;
                }
                h.attn_a[rel] = ad::Tensor({2 * d});
                // Small attention logits keep the initial softmax close to a
                // uniform neighborhood average; training sharpens it.
                glorot_fill(h.attn_a[rel], 2 * d, 1, rng);
                for (std::size_t i = 0; i < h.attn_a[rel].size(); ++i) h.attn_a[rel][i] *= 0.05;
            }
            const auto q = static_cast<std::size_t>(cfg.attention_dim);
            h.q = ad::Tensor({q, d});
            glorot_fill(h.q, d, q, rng);
            h.b = ad::Tensor({q}); // zero bias
            // Zero scorer: meta-path weights start exactly uniform and the
            // first gradients go into reweighting the paths.
            h.r = ad::Tensor({q});
            p.hgat.push_back(std::move(h));
        } else {
            const auto ks = static_cast<std::size_t>(cfg.spatial_kernel);
            const auto kt = static_cast<std::size_t>(cfg.temporal_kernel);
            ad::Tensor k({co, ks, kt, ci});
            glorot_fill(k, ks * kt * ci, co, rng);
            for (std::size_t i = 0; i < k.size(); ++i) k[i] *= kIdentNoise;
            for (std::size_t j = 0; j < co; ++j) {
                const std::size_t src = (j / 2) % ci;
                const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                k[((j * ks + 0) * kt + 0) * ci + src] += sign;
            }
            p.tcn_kernels.push_back(std::move(k));
        }
    }
    const auto d_out = static_cast<std::size_t>(plan.back()) *
                       static_cast<std::size_t>(cfg.channels.back());
    p.out_w = ad::Tensor({d_out, static_cast<std::size_t>(cfg.embed_dim)});
    glorot_fill(p.out_w, d_out, static_cast<std::size_t>(cfg.embed_dim), rng);
    p.out_b = ad::Tensor({static_cast<std::size_t>(cfg.embed_dim)}); // zero bias
    return p;
}

std::vector<std::pair<std::string, ad::Tensor*>> StreamParams::entries() {
    std::vector<std::pair<std::string, ad::Tensor*>> out;
    for (std::size_t i = 0; i < tcn_kernels.size(); ++i)
        out.emplace_back("tcn" + std::to_string(i) + ".kernel", &tcn_kernels[i]);
    for (std::size_t m = 0; m < hgat.size(); ++m) {
        const std::string base = "hgat" + std::to_string(m) + ".";
        for (int rel = 0; rel < kRelationCount; ++rel) {
            const std::string rn = to_string(static_cast<Relation>(rel));
            out.emplace_back(base + rn + ".gcn_kernel", &hgat[m].gcn_o[static_cast<std::size_t>(rel)]);
            out.emplace_back(base + rn + ".attn", &hgat[m].attn_a[static_cast<std::size_t>(rel)]);
        }
        out.emplace_back(base + "q", &hgat[m].q);
        out.emplace_back(base + "b", &hgat[m].b);
        out.emplace_back(base + "r", &hgat[m].r);
    }
    out.emplace_back("output.weight", &out_w);
    out.emplace_back("output.bias", &out_b);
    return out;
}

bool StreamParams::all_finite() const {
    auto ok = [](const ad::Tensor& t) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!std::isfinite(t[i])) return false;
        return true;
    };
    for (const auto& k : tcn_kernels)
        if (!ok(k)) return false;
    for (const auto& h : hgat) {
        for (const auto& t : h.gcn_o)
            if (!ok(t)) return false;
        for (const auto& t : h.attn_a)
            if (!ok(t)) return false;
        if (!ok(h.q) || !ok(h.b) || !ok(h.r)) return false;
    }
    return ok(out_w) && ok(out_b);
}

SliceContext make_context(std::size_t n_nodes, const std::vector<Edge>& train_edges,
                          const std::vector<std::pair<int, int>>& excluded_pairs,
                          const Matrix& telemetry, int frame_len, int stride) {
    SliceContext ctx;
    ctx.n_nodes = n_nodes;

    GraphSlice pseudo;
    pseudo.edges = train_edges;
    std::sort(pseudo.edges.begin(), pseudo.edges.end());

    for (int rel = 0; rel < kRelationCount; ++rel) {
        const Matrix a = adjacency_of(pseudo, n_nodes, static_cast<Relation>(rel));
        bool any = false;
        for (double x : a.v) any = any || x != 0.0;
        if (any) ctx.relations_present.push_back(rel);
        ctx.prop[static_cast<std::size_t>(rel)] = normalize_adjacency(a).propagation;
        ad::Tensor mask({n_nodes, n_nodes});
        for (std::size_t i = 0; i < n_nodes; ++i) {
            mask.at(i, i) = 1.0; // a node is always its own neighbor
            for (std::size_t j = 0; j < n_nodes; ++j)
                if (a(i, j) != 0.0) mask.at(i, j) = 1.0;
        }
        ctx.neighbor_mask[static_cast<std::size_t>(rel)] = std::move(mask);
    }
    const Matrix a_union = adjacency_of(pseudo, n_nodes);
    ctx.prop_union = normalize_adjacency(a_union).propagation;
    {
        ad::Tensor mask({n_nodes, n_nodes});
        for (std::size_t i = 0; i < n_nodes; ++i) {
            mask.at(i, i) = 1.0;
            for (std::size_t j = 0; j < n_nodes; ++j)
                if (a_union(i, j) != 0.0) mask.at(i, j) = 1.0;
        }
        ctx.mask_union = std::move(mask);
    }

    ctx.target_adj = a_union;
    ctx.pair_mask = ad::Tensor({n_nodes, n_nodes});
    for (std::size_t i = 0; i < n_nodes; ++i)
        for (std::size_t j = i + 1; j < n_nodes; ++j) ctx.pair_mask.at(i, j) = 1.0;
    for (const auto& [a, b] : excluded_pairs) {
        const auto i = static_cast<std::size_t>(std::min(a, b));
        const auto j = static_cast<std::size_t>(std::max(a, b));
        ctx.pair_mask.at(i, j) = 0.0;
    }

    const Matrix standardized = standardize_rows(telemetry);
    GraphSlice window;
    window.data = standardized;
    window.t_start = 0;
    window.t_end = static_cast<int>(standardized.cols);
    ctx.frames = frame_data(window, frame_len, stride);
    return ctx;
}

// --- layer operations -------------------------------------------------------

ad::Var gcn_layer(ad::Tape& t, ad::Var h, const Matrix& propagation, ad::Var o) {
    const ad::Tensor& hv = t.value(h);
    const ad::Tensor& ov = t.value(o);
    if (hv.rank() != 3 || ov.rank() != 4)
        throw ShapeMismatch("gcn_layer: input " + ad::shape_str(hv.shape()) + " vs kernels " +
                            ad::shape_str(ov.shape()));
    const std::size_t n = hv.shape()[0], tt = hv.shape()[1], ci = hv.shape()[2];
    const std::size_t co = ov.shape()[0];
    if (ov.shape()[1] != ci || ov.shape()[2] != tt || ov.shape()[3] != tt ||
        propagation.rows != n || propagation.cols != n)
        throw ShapeMismatch("gcn_layer: input " + ad::shape_str(hv.shape()) + " vs kernels " +
                            ad::shape_str(ov.shape()));

    ad::Var p = t.constant(ad::Tensor::from_matrix(propagation));
    std::vector<ad::Var> propagated; // P * H_i, shared across output kernels
    for (std::size_t i = 0; i < ci; ++i) {
        ad::Var hi = t.reshape(t.slice(h, 2, i, 1), {n, tt});
        propagated.push_back(t.matmul(p, hi));
    }
    std::vector<ad::Var> outs;
    for (std::size_t j = 0; j < co; ++j) {
        ad::Var acc{};
        for (std::size_t i = 0; i < ci; ++i) {
            ad::Var oji = t.reshape(t.slice(t.slice(o, 0, j, 1), 1, i, 1), {tt, tt});
            ad::Var term = t.relu(t.matmul(propagated[i], oji));
            acc = acc.valid() ? t.add(acc, term) : term;
        }
        outs.push_back(t.reshape(acc, {n, tt, 1}));
    }
    return t.concat(outs, 2);
}

ad::Var node_attention(ad::Tape& t, ad::Var h, const ad::Tensor& neighbor_mask, ad::Var a_phi) {
    const ad::Tensor& hv = t.value(h);
    if (hv.rank() != 3 && hv.rank() != 2)
        throw ShapeMismatch("node_attention: input " + ad::shape_str(hv.shape()));
    const std::size_t n = hv.shape()[0];
    const std::size_t d = hv.size() / n;
    const ad::Tensor& av = t.value(a_phi);
    if (av.rank() != 1 || av.shape()[0] != 2 * d)
        throw ShapeMismatch("node_attention: attention vector " + ad::shape_str(av.shape()) +
                            " for features of width " + std::to_string(d));
    ad::Var hf = t.reshape(h, {n, d});
    ad::Var a_self = t.reshape(t.slice(a_phi, 0, 0, d), {d, 1});
    ad::Var a_peer = t.reshape(t.slice(a_phi, 0, d, d), {d, 1});
    ad::Var u = t.reshape(t.matmul(hf, a_self), {n});
    ad::Var w = t.reshape(t.matmul(hf, a_peer), {n});
    ad::Var logits = t.leaky_relu(t.outer_sum(u, w), kAttnLeakSlope);
    return t.masked_row_softmax(logits, neighbor_mask);
}

ad::Var node_aggregate(ad::Tape& t, ad::Var s, ad::Var h) {
    const ad::Tensor& hv = t.value(h);
    const ad::Tensor& sv = t.value(s);
    const std::size_t n = hv.shape()[0];
    if (sv.rank() != 2 || sv.shape()[0] != n || sv.shape()[1] != n)
        throw ShapeMismatch("node_aggregate: coefficients " + ad::shape_str(sv.shape()) +
                            " vs embedding " + ad::shape_str(hv.shape()));
    const ad::Shape orig = hv.shape();
    ad::Var hf = t.reshape(h, {n, hv.size() / n});
    return t.reshape(t.matmul(s, hf), orig);
}

ad::Var metapath_attention(ad::Tape& t, const std::vector<ad::Var>& h_phis, ad::Var q, ad::Var b,
                           ad::Var r) {
    if (h_phis.empty()) throw ShapeMismatch("metapath_attention: no meta-path embeddings");
    std::vector<ad::Var> scores;
    const std::size_t qdim = t.value(q).shape()[0];
    for (ad::Var h : h_phis) {
        const ad::Tensor& hv = t.value(h);
        const std::size_t n = hv.shape()[0];
        const std::size_t d = hv.size() / n;
        if (t.value(q).shape()[1] != d)
            throw ShapeMismatch("metapath_attention: scorer " + ad::shape_str(t.value(q).shape()) +
                                " vs features of width " + std::to_string(d));
        ad::Var hf = t.reshape(h, {n, d});
        ad::Var scored = t.tanh_op(t.add_rowvec(t.matmul(hf, t.transpose(q)), b));
        ad::Var per_node = t.matmul(scored, t.reshape(r, {qdim, 1})); // (n, 1)
        scores.push_back(t.mean_all(per_node));
    }
    return t.softmax(t.concat(scores, 0), 0);
}

ad::Var metapath_fuse(ad::Tape& t, ad::Var weights, const std::vector<ad::Var>& h_phis) {
    const ad::Tensor& wv = t.value(weights);
    if (wv.rank() != 1 || wv.shape()[0] != h_phis.size())
        throw ShapeMismatch("metapath_fuse: " + std::to_string(h_phis.size()) +
                            " embeddings vs weights " + ad::shape_str(wv.shape()));
    ad::Var acc{};
    for (std::size_t p = 0; p < h_phis.size(); ++p) {
        ad::Var wp = t.slice(weights, 0, p, 1);
        ad::Var term = t.scale_by(h_phis[p], wp);
        acc = acc.valid() ? t.add(acc, term) : term;
    }
    return acc;
}

ad::Var temporal_conv(ad::Tape& t, ad::Var h, ad::Var kernels) {
    return t.relu(t.conv2d(h, kernels));
}

// --- model-level ------------------------------------------------------------

ParamVars group_param_vars(const StreamParams& p, const std::vector<ad::Var>& flat) {
    ParamVars pv;
    pv.flat = flat;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < p.tcn_kernels.size(); ++i) pv.tcn.push_back(pv.flat[idx++]);
    for (std::size_t m = 0; m < p.hgat.size(); ++m) {
        ParamVars::H h;
        for (int rel = 0; rel < kRelationCount; ++rel) {
            h.o[static_cast<std::size_t>(rel)] = pv.flat[idx++];
            h.a[static_cast<std::size_t>(rel)] = pv.flat[idx++];
        }
        h.q = pv.flat[idx++];
        h.b = pv.flat[idx++];
        h.r = pv.flat[idx++];
        pv.hgat.push_back(h);
    }
    pv.out_w = pv.flat[idx++];
    pv.out_b = pv.flat[idx++];
    return pv;
}

ParamVars register_params(ad::Tape& t, StreamParams& p) {
    std::vector<ad::Var> flat;
    for (const auto& [name, tensor] : p.entries()) flat.push_back(t.param(*tensor));
    return group_param_vars(p, flat);
}

namespace {

ad::Var hgat_forward(ad::Tape& t, const StreamConfig& cfg, const ParamVars::H& p,
                     const SliceContext& ctx, ad::Var h) {
    auto single = [&](const Matrix& prop, const ad::Tensor& mask, std::size_t slot) {
        ad::Var hg = gcn_layer(t, h, prop, p.o[slot]);
        ad::Var s = node_attention(t, hg, mask, p.a[slot]);
        return node_aggregate(t, s, hg);
    };
    // Homogeneous ablation and edgeless slices both collapse onto the union
    // graph with the first parameter slot and no meta-path fusion.
    if (!cfg.heterogeneous || ctx.relations_present.empty())
        return single(ctx.prop_union, ctx.mask_union, 0);

    std::vector<ad::Var> h_phis;
    for (int rel : ctx.relations_present) {
        const auto slot = static_cast<std::size_t>(rel);
        h_phis.push_back(single(ctx.prop[slot], ctx.neighbor_mask[slot], slot));
    }
    ad::Var weights = metapath_attention(t, h_phis, p.q, p.b, p.r);
    return metapath_fuse(t, weights, h_phis);
}

} // namespace

ad::Var forward_frame(ad::Tape& t, const StreamConfig& cfg, const ParamVars& pv,
                      const SliceContext& ctx, const Matrix& frame) {
    const std::size_t n = frame.rows;
    ad::Var h = t.constant(ad::Tensor({n, frame.cols, 1}, frame.v));
    std::size_t tcn_idx = 0, hgat_idx = 0;
    for (int l = 0; l < cfg.n_layers; ++l) {
        if (l % 3 == 1) h = hgat_forward(t, cfg, pv.hgat[hgat_idx++], ctx, h);
        else h = temporal_conv(t, h, pv.tcn[tcn_idx++]);
    }
    const ad::Tensor& hv = t.value(h);
    ad::Var flat = t.reshape(h, {n, hv.size() / n});
    return t.add_rowvec(t.matmul(flat, pv.out_w), pv.out_b);
}

ad::Var frame_loss(ad::Tape& t, const StreamConfig& cfg, const ParamVars& pv,
                   const SliceContext& ctx, const Matrix& frame) {
    ad::Var z = forward_frame(t, cfg, pv, ctx, frame);
    ad::Var zn = t.normalize_rows(z);
    ad::Var c = t.matmul(zn, t.transpose(zn));
    ad::Var diff = t.sub(c, t.constant(ad::Tensor::from_matrix(ctx.target_adj)));
    ad::Var masked = t.mul(diff, t.constant(ctx.pair_mask));
    // Both (i,j) and (j,i) orientations of each unmasked pair count, as in
    // the squared-error sum over the full similarity matrix; the constant
    // diagonal is dropped.
    return t.scale(t.sum_all(t.mul(masked, masked)), 2.0);
}

Matrix forward(const StreamConfig& cfg, StreamParams& params, const SliceContext& ctx) {
    Matrix z(ctx.n_nodes, static_cast<std::size_t>(cfg.embed_dim));
    for (const auto& frame : ctx.frames) {
        ad::Tape t;
        ParamVars pv = register_params(t, params);
        const ad::Tensor& zf = t.value(forward_frame(t, cfg, pv, ctx, frame));
        for (std::size_t i = 0; i < z.size(); ++i) z.v[i] += zf[i];
    }
    const double inv = 1.0 / static_cast<double>(ctx.frames.size());
    for (double& x : z.v) x *= inv;
    return z;
}

namespace {

std::vector<SliceContext> build_contexts(const WirelessKG& kg, const linkpred::MaskedView* view,
                                         const StreamConfig& cfg) {
    std::vector<SliceContext> contexts;
    for (std::size_t m = 0; m < kg.slices.size(); ++m) {
        const std::vector<Edge>& edges = view ? view->train_edges[m] : kg.slices[m].edges;
        const std::vector<std::pair<int, int>> excluded =
            view ? view->heldout[m] : std::vector<std::pair<int, int>>{};
        contexts.push_back(make_context(kg.node_count(), edges, excluded, kg.slices[m].data,
                                        cfg.frame_len, cfg.stride));
    }
    return contexts;
}

double macro_train_f1(const WirelessKG& kg, const linkpred::MaskedView& view,
                      const StreamConfig& cfg, StreamParams& params,
                      std::vector<SliceContext>& contexts) {
    double f1_sum = 0.0;
    for (std::size_t m = 0; m < contexts.size(); ++m) {
        const Matrix z = forward(cfg, params, contexts[m]);
        const Matrix c = linkpred::cosine_matrix(z).c;
        const auto& train = view.train_edges[m];
        if (train.empty()) continue;
        const auto predicted = linkpred::predict_links(c, train.size());
        std::set<std::pair<int, int>> pred(predicted.begin(), predicted.end());
        std::set<std::pair<int, int>> excluded(view.heldout[m].begin(), view.heldout[m].end());
        std::vector<linkpred::ScoredPair> pos, neg;
        std::set<std::pair<int, int>> train_pairs;
        for (const auto& e : train) train_pairs.insert({e.src, e.dst});
        const int n = static_cast<int>(kg.node_count());
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (excluded.count({i, j})) continue; // not visible during training
                linkpred::ScoredPair sp{c(static_cast<std::size_t>(i), static_cast<std::size_t>(j)),
                                        pred.count({i, j}) > 0};
                if (train_pairs.count({i, j})) pos.push_back(sp);
                else neg.push_back(sp);
            }
        f1_sum += linkpred::evaluate(pos, neg).f1;
    }
    return f1_sum / static_cast<double>(contexts.size());
}

} // namespace

TrainResult train(const WirelessKG& kg, const linkpred::MaskedView& view, const StreamConfig& cfg,
                  bool track_train_f1) {
    cfg.validate(kg.node_count());
    if (view.train_edges.size() != kg.slices.size())
        throw ConfigInvalid("train: masked view does not match the KG slice count");

    std::vector<SliceContext> contexts = build_contexts(kg, &view, cfg);

    TrainResult result;
    result.params = StreamParams::init(cfg, kg.node_count());
    auto entries = result.params.entries();

    std::vector<std::pair<std::size_t, std::size_t>> frames; // (slice, frame)
    for (std::size_t m = 0; m < contexts.size(); ++m)
        for (std::size_t f = 0; f < contexts[m].frames.size(); ++f) frames.emplace_back(m, f);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_now =
            cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_decay_every));
        Rng shuffle_rng = Rng::derive(cfg.seed, kStreamShuffle + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(frames);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < frames.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(frames.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<ad::Tensor> grad_sum;
            for (const auto& [name, tensor] : entries) grad_sum.emplace_back(tensor->shape());
            for (std::size_t fi = start; fi < stop; ++fi) {
                const auto [m, f] = frames[fi];
                ad::Tape t;
                ParamVars pv = register_params(t, result.params);
                ad::Var loss = frame_loss(t, cfg, pv, contexts[m], contexts[m].frames[f]);
                const double lv = t.value(loss)[0];
                if (!std::isfinite(lv)) throw Diverged("train: loss became non-finite");
                epoch_loss += lv;
                t.backward(loss);
                for (std::size_t p = 0; p < entries.size(); ++p) {
                    const ad::Tensor& g = t.grad(pv.flat[p]);
                    for (std::size_t i = 0; i < g.size(); ++i) grad_sum[p][i] += g[i];
                }
            }
            const double step = lr_now / static_cast<double>(stop - start);
            for (std::size_t p = 0; p < entries.size(); ++p) {
                ad::Tensor& w = *entries[p].second;
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * grad_sum[p][i];
            }
            if (!result.params.all_finite())
                throw Diverged("train: parameters became non-finite");
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(frames.size()));
        if (track_train_f1)
            result.train_f1_curve.push_back(
                macro_train_f1(kg, view, cfg, result.params, contexts));
    }
    return result;
}

std::vector<Matrix> slice_embeddings(const WirelessKG& kg, const linkpred::MaskedView* view,
                                     const StreamConfig& cfg, StreamParams& params) {
    cfg.validate(kg.node_count());
    std::vector<SliceContext> contexts = build_contexts(kg, view, cfg);
    std::vector<Matrix> out;
    for (auto& ctx : contexts) out.push_back(forward(cfg, params, ctx));
    return out;
}

// --- checkpoint --------------------------------------------------------------

namespace {

ordered_json config_to_json(const StreamConfig& cfg) {
    ordered_json j;
    j["embed_dim"] = cfg.embed_dim;
    j["n_layers"] = cfg.n_layers;
    j["temporal_kernel"] = cfg.temporal_kernel;
    j["spatial_kernel"] = cfg.spatial_kernel;
    j["channels"] = cfg.channels;
    j["attention_dim"] = cfg.attention_dim;
    j["frame_len"] = cfg.frame_len;
    j["stride"] = cfg.stride;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["lr_decay"] = cfg.lr_decay;
    j["lr_decay_every"] = cfg.lr_decay_every;
    j["heterogeneous"] = cfg.heterogeneous;
    j["seed"] = cfg.seed;
    return j;
}

StreamConfig config_from_json(const ordered_json& j) {
    StreamConfig cfg;
    try {
        cfg.embed_dim = j.at("embed_dim").get<int>();
        cfg.n_layers = j.at("n_layers").get<int>();
        cfg.temporal_kernel = j.at("temporal_kernel").get<int>();
        cfg.spatial_kernel = j.at("spatial_kernel").get<int>();
        cfg.channels = j.at("channels").get<std::vector<int>>();
        cfg.attention_dim = j.at("attention_dim").get<int>();
        cfg.frame_len = j.at("frame_len").get<int>();
        cfg.stride = j.at("stride").get<int>();
        cfg.epochs = j.at("epochs").get<int>();
        cfg.batch_size = j.at("batch_size").get<int>();
        cfg.lr = j.at("lr").get<double>();
        cfg.lr_decay = j.at("lr_decay").get<double>();
        cfg.lr_decay_every = j.at("lr_decay_every").get<int>();
        cfg.heterogeneous = j.at("heterogeneous").get<bool>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("manifest.json config: ") + e.what());
    }
    return cfg;
}

} // namespace

void save_model(const std::filesystem::path& dir, const StreamConfig& cfg, StreamParams& params,
                std::size_t n_nodes, double mask_ratio, std::uint64_t mask_seed) {
    ordered_json manifest;
    manifest["format"] = "wdkg-model/1";
    manifest["n_nodes"] = n_nodes;
    manifest["mask_ratio"] = mask_ratio;
    manifest["mask_seed"] = mask_seed;
    manifest["config"] = config_to_json(cfg);
    manifest["tensors"] = ordered_json::array();
    std::vector<std::uint8_t> blob;
    std::size_t offset = 0;
    for (const auto& [name, tensor] : params.entries()) {
        ordered_json meta;
        meta["name"] = name;
        meta["shape"] = tensor->shape();
        meta["offset"] = offset;
        meta["count"] = tensor->size();
        manifest["tensors"].push_back(meta);
        for (std::size_t i = 0; i < tensor->size(); ++i) io::append_le_double(blob, (*tensor)[i]);
        offset += tensor->size();
    }
    io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
    io::atomic_write(dir / "params.bin", blob);
}

LoadedModel load_model(const std::filesystem::path& dir) {
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(io::read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaViolation("manifest.json: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "wdkg-model/1")
        throw SchemaViolation("manifest.json: unknown format");
    LoadedModel out;
    out.n_nodes = manifest.at("n_nodes").get<std::size_t>();
    out.mask_ratio = manifest.value("mask_ratio", 0.0);
    out.mask_seed = manifest.value("mask_seed", std::uint64_t{0});
    out.config = config_from_json(manifest.at("config"));
    out.params = StreamParams::init(out.config, out.n_nodes);

    const auto blob = io::read_bytes(dir / "params.bin");
    auto entries = out.params.entries();
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != entries.size())
        throw SchemaViolation("manifest.json: tensor count does not match the architecture");
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& meta = tensors.at(k);
        if (meta.at("name").get<std::string>() != entries[k].first)
            throw SchemaViolation("manifest.json: tensors[" + std::to_string(k) + "] name mismatch");
        const auto shape = meta.at("shape").get<ad::Shape>();
        if (shape != entries[k].second->shape())
            throw SchemaViolation("manifest.json: tensors[" + std::to_string(k) + "] shape mismatch");
        const auto offset = meta.at("offset").get<std::size_t>();
        const auto count = meta.at("count").get<std::size_t>();
        if (count != entries[k].second->size() || (offset + count) * 8 > blob.size())
            throw SchemaViolation("manifest.json: tensors[" + std::to_string(k) + "] bad extent");
        for (std::size_t i = 0; i < count; ++i)
            (*entries[k].second)[i] = io::read_le_double(blob.data() + (offset + i) * 8);
    }
    return out;
}

} // namespace wdkg::stream
