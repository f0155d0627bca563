#ifndef WDKG_STREAM_HPP
#define WDKG_STREAM_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wdkg/graph.hpp"
#include "wdkg/linkpred.hpp"
#include "wdkg/tape.hpp"

namespace wdkg::stream {

// Two stacked ST-Conv modules by default (temporal conv, heterogeneous
// attention spatial conv, temporal conv), then a linear output head that
// collapses the remaining time axis into the embedding dimension.
struct StreamConfig {
    int embed_dim = 128;                      // c
    int n_layers = 6;                         // 3 per ST-Conv module
    int temporal_kernel = 3;                  // K_T
    int spatial_kernel = 1;                   // K_S; the stacked model needs 1
    std::vector<int> channels = {8, 8, 8, 8, 8, 8}; // c_out per layer
    int attention_dim = 16;                   // width of the meta-path scorer
    int frame_len = 20;
    int stride = 10;
    int epochs = 5;
    int batch_size = 50;
    double lr = 1e-4;
    double lr_decay = 0.7;
    int lr_decay_every = 5;
    bool heterogeneous = true; // false = homogeneous ablation on the union graph
    std::uint64_t seed = 5;

    void validate(std::size_t n_nodes) const;
    int modules() const { return n_layers / 3; }
};

struct HgatParams {
    std::array<ad::Tensor, kRelationCount> gcn_o;  // (c_out, c_in, T, T) per meta-path
    std::array<ad::Tensor, kRelationCount> attn_a; // (2 * T * c_out)
    ad::Tensor q, b, r;                            // meta-path level scorer
};

struct StreamParams {
    std::vector<ad::Tensor> tcn_kernels; // (c_out, K_S, K_T, c_in) per temporal layer
    std::vector<HgatParams> hgat;        // one per ST-Conv module
    ad::Tensor out_w, out_b;

    static StreamParams init(const StreamConfig& cfg, std::size_t n_nodes);
    // Stable traversal used for updates and checkpoints.
    std::vector<std::pair<std::string, ad::Tensor*>> entries();
    bool all_finite() const;
};

// Per-slice precomputation shared by every frame: propagation matrices and
// neighbor masks from the training edges, the loss target/mask, and the
// standardized telemetry windows.
struct SliceContext {
    std::size_t n_nodes = 0;
    std::vector<int> relations_present;               // meta-path set of this slice
    std::array<Matrix, kRelationCount> prop;          // per-relation propagation
    std::array<ad::Tensor, kRelationCount> neighbor_mask;
    Matrix prop_union;
    ad::Tensor mask_union;
    Matrix target_adj;   // training adjacency (loss target)
    ad::Tensor pair_mask; // strict upper triangle, held-out pairs excluded
    std::vector<Matrix> frames;
};

SliceContext make_context(std::size_t n_nodes, const std::vector<Edge>& train_edges,
                          const std::vector<std::pair<int, int>>& excluded_pairs,
                          const Matrix& telemetry, int frame_len, int stride);

// --- layer operations (tape-level building blocks) -------------------------

// Graph convolution: for output kernel j, sum over input channels i of
// relu(propagation * H_i * O_{j,i}).
ad::Var gcn_layer(ad::Tape& t, ad::Var h, const Matrix& propagation, ad::Var o);

// Row-stochastic attention over the neighbor mask; exact zeros off-mask.
ad::Var node_attention(ad::Tape& t, ad::Var h, const ad::Tensor& neighbor_mask, ad::Var a_phi);

ad::Var node_aggregate(ad::Tape& t, ad::Var s, ad::Var h);

// Softmax-normalized importance of each meta-path embedding.
ad::Var metapath_attention(ad::Tape& t, const std::vector<ad::Var>& h_phis, ad::Var q, ad::Var b,
                           ad::Var r);

ad::Var metapath_fuse(ad::Tape& t, ad::Var weights, const std::vector<ad::Var>& h_phis);

// Valid cross-correlation over (node, time) followed by the rectifier.
ad::Var temporal_conv(ad::Tape& t, ad::Var h, ad::Var kernels);

// --- model-level ------------------------------------------------------------

struct ParamVars {
    std::vector<ad::Var> flat; // aligned with StreamParams::entries()
    std::vector<ad::Var> tcn;
    struct H {
        std::array<ad::Var, kRelationCount> o, a;
        ad::Var q, b, r;
    };
    std::vector<H> hgat;
    ad::Var out_w, out_b;
};

ParamVars register_params(ad::Tape& t, StreamParams& p);

// Groups an entries()-ordered flat var list into the structured view; used
// by register_params and by gradient-checking harnesses that own the vars.
ParamVars group_param_vars(const StreamParams& p, const std::vector<ad::Var>& flat);

// Embedding of one telemetry frame: N x embed_dim.
ad::Var forward_frame(ad::Tape& t, const StreamConfig& cfg, const ParamVars& pv,
                      const SliceContext& ctx, const Matrix& frame);

// Squared-error link loss of one frame against the context's training
// adjacency, restricted to the unmasked pair mask.
ad::Var frame_loss(ad::Tape& t, const StreamConfig& cfg, const ParamVars& pv,
                   const SliceContext& ctx, const Matrix& frame);

// Per-slice embedding: mean over the frame embeddings.
Matrix forward(const StreamConfig& cfg, StreamParams& params, const SliceContext& ctx);

struct TrainResult {
    StreamParams params;
    std::vector<double> loss_curve;     // mean per-frame loss per epoch
    std::vector<double> train_f1_curve; // empty unless tracking was requested
};

TrainResult train(const WirelessKG& kg, const linkpred::MaskedView& view,
                  const StreamConfig& cfg, bool track_train_f1 = false);

// Embeddings for every slice; when view is non-null the training edges are
// used for propagation (the held-out edges stay invisible).
std::vector<Matrix> slice_embeddings(const WirelessKG& kg, const linkpred::MaskedView* view,
                                     const StreamConfig& cfg, StreamParams& params);

// Checkpoint: manifest.json plus a little-endian double blob.
void save_model(const std::filesystem::path& dir, const StreamConfig& cfg, StreamParams& params,
                std::size_t n_nodes, double mask_ratio, std::uint64_t mask_seed);

struct LoadedModel {
    StreamConfig config;
    StreamParams params;
    std::size_t n_nodes = 0;
    double mask_ratio = 0.0;
    std::uint64_t mask_seed = 0;
};

LoadedModel load_model(const std::filesystem::path& dir);

} // namespace wdkg::stream

#endif
