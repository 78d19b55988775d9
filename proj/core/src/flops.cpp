#include "shardplan/flops.hpp"

#include <stdexcept>
#include <string>

namespace shardplan {

void ModelGeometry::validate() const {
    if (hidden_dim < 1 || head_dim < 1 || heads < 1 || dual_layers < 1 ||
        single_layers < 1 || decoder_layers < 1 || ffn_multiplier < 1 ||
        vae_spatial < 1 || vae_temporal < 1 || patch_spatial < 1 || patch_temporal < 1 ||
        text_tokens < 0)
        throw std::invalid_argument("model geometry: all counts must be >= 1");
    if (heads * head_dim != hidden_dim)
        throw std::invalid_argument("model geometry: heads * head_dim must equal hidden_dim");
}

TokenCount token_count(int width, int height, std::int64_t frames,
                       const ModelGeometry& geometry) {
    geometry.validate();
    const int spatial = geometry.vae_spatial * geometry.patch_spatial;
    if (width <= 0 || width % spatial != 0)
        throw std::invalid_argument("token_count: width " + std::to_string(width) +
                                    " is not divisible by " + std::to_string(spatial));
    if (height <= 0 || height % spatial != 0)
        throw std::invalid_argument("token_count: height " + std::to_string(height) +
                                    " is not divisible by " + std::to_string(spatial));
    if (frames < 1 || (frames - 1) % geometry.vae_temporal != 0)
        throw std::invalid_argument("token_count: frames " + std::to_string(frames) +
                                    " must be 1 mod " + std::to_string(geometry.vae_temporal));

    std::int64_t latent_frames = (frames - 1) / geometry.vae_temporal + 1;
    if (geometry.patch_temporal > 1) latent_frames /= geometry.patch_temporal;

    TokenCount tokens;
    tokens.video_tokens = static_cast<std::int64_t>(width / spatial) *
                          static_cast<std::int64_t>(height / spatial) * latent_frames;
    tokens.text_tokens = geometry.text_tokens;
    tokens.total = tokens.video_tokens + tokens.text_tokens;
    return tokens;
}

void TreadConfig::validate(int total_layers) const {
    if (route_start_layer < 1 || route_end_layer < route_start_layer ||
        route_end_layer > total_layers)
        throw std::invalid_argument("tread config: need 1 <= start <= end <= " +
                                    std::to_string(total_layers));
    if (drop_ratio < 0.0 || drop_ratio >= 1.0)
        throw std::invalid_argument("tread config: drop_ratio must lie in [0, 1)");
}

namespace {

struct LayerCost {
    double d = 0.0;
    double ffn_mult = 0.0;
    bool include_attention = true;

    double projection(double n) const { return 8.0 * n * d * d; }
    double attention(double n) const { return include_attention ? 4.0 * n * n * d : 0.0; }
    double ffn(double n) const { return 4.0 * n * d * (ffn_mult * d); }
};

}  // namespace

FlopsBreakdown flops_estimate(const ModelGeometry& geometry, const TokenCount& tokens,
                              const std::optional<TreadConfig>& tread,
                              const FlopsOptions& options) {
    geometry.validate();

    double drop = 0.0;
    int route_start = 0, route_end = -1;
    if (tread && !tread->inference_enabled) {
        tread->validate(geometry.total_layers());
        drop = tread->drop_ratio;
        route_start = tread->route_start_layer;
        route_end = tread->route_end_layer;
    }

    LayerCost cost{static_cast<double>(geometry.hidden_dim),
                   static_cast<double>(geometry.ffn_multiplier), options.include_attention};

    const double text = static_cast<double>(tokens.text_tokens);
    const double video_full = static_cast<double>(tokens.video_tokens);

    FlopsBreakdown breakdown;
    for (int layer = 1; layer <= geometry.total_layers(); ++layer) {
        const bool routed = layer >= route_start && layer <= route_end;
        const double video = routed ? (1.0 - drop) * video_full : video_full;
        const double joint = text + video;

        if (layer <= geometry.dual_layers) {
            // Dual stream: text and video attend separately; the cross-stream
            // exchange is costed as one more projection pass over both.
            breakdown.dual.projection += cost.projection(text) + cost.projection(video);
            breakdown.dual.attention += cost.attention(text) + cost.attention(video);
            breakdown.dual.ffn += cost.ffn(text) + cost.ffn(video);
            breakdown.dual.cross_stream += cost.projection(joint);
        } else if (layer <= geometry.dual_layers + geometry.single_layers) {
            breakdown.single_stream.projection += cost.projection(joint);
            breakdown.single_stream.attention += cost.attention(joint);
            breakdown.single_stream.ffn += cost.ffn(joint);
        } else {
            breakdown.decoder.projection += cost.projection(joint);
            breakdown.decoder.attention += cost.attention(joint);
            breakdown.decoder.ffn += cost.ffn(joint);
        }
    }
    breakdown.total =
        breakdown.dual.total() + breakdown.single_stream.total() + breakdown.decoder.total();
    return breakdown;
}

Speedup speedup_estimate(double flops_full, double flops_tread, double overhead_factor) {
    if (flops_tread <= 0.0)
        throw std::invalid_argument("speedup_estimate: flops_tread must be positive");
    Speedup s;
    s.theoretical = flops_full / flops_tread;
    s.adjusted = s.theoretical * overhead_factor;
    return s;
}

}  // namespace shardplan
