#pragma once

#include "gaseraser/errors.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace gaseraser {

enum class TokenRole : uint8_t {
    system,
    image,
    question,
    option,
    gaslight,
    answer,
};

const char * role_name(TokenRole role);
std::optional<TokenRole> role_from_name(std::string_view name);

/// Half-open index interval [begin, end).
struct Span {
    int begin = 0;
    int end   = 0;

    int  size() const { return end - begin; }
    bool contains(int i) const { return i >= begin && i < end; }
    bool operator==(const Span &) const = default;
};

/// Strictly increasing, duplicate-free set of token positions.
class IndexSet {
public:
    IndexSet() = default;

    // Sorts and deduplicates; rejects negative indices.
    static IndexSet of(std::vector<int> indices);

    bool contains(int i) const;
    bool empty() const { return indices_.empty(); }
    size_t size() const { return indices_.size(); }
    const std::vector<int> & indices() const { return indices_; }

    IndexSet intersect_span(Span span) const;
    IndexSet difference(const IndexSet & other) const;

    bool operator==(const IndexSet &) const = default;

private:
    std::vector<int> indices_;
};

/// Post-softmax multi-head attention weights for one layer, shape [H x S x S],
/// stored row-major. Immutable after construction. Rows are checked stochastic
/// at ingestion; tensors produced by an intervention may carry relaxed row sums
/// and are built through `unchecked`.
class AttentionTensor {
public:
    // Validates shape, finiteness, non-negativity and row sums (1 +- row_sum_tol).
    AttentionTensor(std::vector<double> weights, int heads, int seq, int layer_index,
                    double row_sum_tol = 1e-5);

    static AttentionTensor unchecked(std::vector<double> weights, int heads, int seq,
                                     int layer_index);

    int heads() const { return heads_; }
    int seq() const { return seq_; }
    int layer_index() const { return layer_index_; }

    const double * row(int head, int source) const {
        return weights_.data() + (static_cast<size_t>(head) * seq_ + source) * seq_;
    }
    double at(int head, int source, int target) const { return row(head, source)[target]; }

    const std::vector<double> & weights() const { return weights_; }
    std::vector<double> take_weights() && { return std::move(weights_); }

private:
    AttentionTensor() = default;

    std::vector<double> weights_;
    int heads_       = 0;
    int seq_         = 0;
    int layer_index_ = 0;
};

/// Token embeddings [S x d] (row-major) plus the image-token span and
/// per-token role labels for one sequence.
class TokenContext {
public:
    TokenContext(std::vector<double> embeddings, int seq, int dim, Span image_span,
                 std::vector<TokenRole> roles);

    int seq() const { return seq_; }
    int dim() const { return dim_; }
    Span image_span() const { return image_span_; }
    const std::vector<TokenRole> & roles() const { return roles_; }
    const double * embedding(int token) const {
        return embeddings_.data() + static_cast<size_t>(token) * dim_;
    }
    const std::vector<double> & embeddings() const { return embeddings_; }

private:
    std::vector<double> embeddings_;
    int seq_ = 0;
    int dim_ = 0;
    Span image_span_;
    std::vector<TokenRole> roles_;
};

/// Sum of weights[head, source, j] over j in `columns`, accumulated in
/// ascending column order.
double row_mass(const AttentionTensor & t, int head, int source, const IndexSet & columns);

/// Same, over a contiguous span.
double row_mass(const AttentionTensor & t, int head, int source, Span columns);

} // namespace gaseraser
