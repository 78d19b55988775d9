#pragma once

#include <cstdint>
#include <optional>

namespace shardplan {

/// Backbone geometry for the cost model: a 36-layer stack of 12 dual-stream,
/// 16 single-stream, and 8 decoder layers, hidden dim 1536, fed by a VAE
/// with 8x8 spatial / 4x temporal compression and a 2x2x1 patch kernel.
struct ModelGeometry {
    int hidden_dim = 1536;
    int head_dim = 128;
    int heads = 12;
    int dual_layers = 12;
    int single_layers = 16;
    int decoder_layers = 8;
    int ffn_multiplier = 4;
    int vae_spatial = 8;
    int vae_temporal = 4;
    int patch_spatial = 2;
    int patch_temporal = 1;
    std::int64_t text_tokens = 512;

    int total_layers() const { return dual_layers + single_layers + decoder_layers; }
    void validate() const;  // throws std::invalid_argument
};

struct TokenCount {
    std::int64_t video_tokens = 0;
    std::int64_t text_tokens = 0;
    std::int64_t total = 0;
};

/// Latent frames = (frames-1)/vae_temporal + 1; video tokens =
/// (w / (vae_spatial*patch_spatial)) * (h / ...) * latent_frames.
/// Width/height must divide evenly and frames must be 1 mod vae_temporal;
/// violations name the offending axis.
TokenCount token_count(int width, int height, std::int64_t frames,
                       const ModelGeometry& geometry);

/// Token routing window: layers in [route_start, route_end] process only
/// text + (1 - drop_ratio) video tokens during training.
struct TreadConfig {
    int route_start_layer = 4;
    int route_end_layer = 25;
    double drop_ratio = 0.5;
    bool inference_enabled = false;  // routing is a training-time mechanism

    void validate(int total_layers) const;
};

struct FlopsOptions {
    /// The attention N^2 terms are accounting-convention dependent; excluding
    /// them gives the linear (projection + ffn) model.
    bool include_attention = true;
};

struct LayerClassFlops {
    double projection = 0.0;
    double attention = 0.0;
    double ffn = 0.0;
    double cross_stream = 0.0;  // dual-stream interaction, projection-cost

    double total() const { return projection + attention + ffn + cross_stream; }
};

struct FlopsBreakdown {
    LayerClassFlops dual;
    LayerClassFlops single_stream;
    LayerClassFlops decoder;
    double total = 0.0;
};

/// Per-layer costs with N effective tokens and hidden dim d:
///   projection = 8 N d^2, attention = 4 N^2 d, ffn = 4 N d (mult * d).
/// Dual-stream layers run text and video streams separately plus a
/// cross-stream term at projection cost. Routed layers use the reduced token
/// count; tread = nullopt (or drop_ratio 0) reproduces the full model exactly.
FlopsBreakdown flops_estimate(const ModelGeometry& geometry, const TokenCount& tokens,
                              const std::optional<TreadConfig>& tread,
                              const FlopsOptions& options = {});

struct Speedup {
    double theoretical = 0.0;
    double adjusted = 0.0;
};

/// theoretical = full/tread; adjusted multiplies in a routing-overhead factor.
Speedup speedup_estimate(double flops_full, double flops_tread,
                         double overhead_factor = 0.95);

}  // namespace shardplan
