#pragma once

#include "gaseraser/attention.hpp"

#include <string>
#include <vector>

namespace gaseraser {

/// Sidecar metadata stored next to the binary payload in `<path>.meta`.
struct TraceMetadata {
    std::string model_name;
    std::vector<int> monitored_dims;
};

struct Trace {
    TokenContext context;
    std::vector<AttentionTensor> layers;
    TraceMetadata metadata;
};

/// Binary layout (documented in docs/trace_format.md): fixed little-endian
/// header (magic "GETR", version, L, H, S, d, image span, flags) followed by
/// the hidden-state matrix [S x d] and L attention tensors [H x S x S], all
/// 32-bit floats. Token roles live in the sidecar.
void write_trace(const std::string & path, const TokenContext & ctx,
                 const std::vector<AttentionTensor> & layers, const TraceMetadata & metadata);

/// Validates magic, version and exact payload length before reading; attention
/// rows are checked stochastic within 1e-4 (32-bit source tolerance).
Trace read_trace(const std::string & path);

} // namespace gaseraser
