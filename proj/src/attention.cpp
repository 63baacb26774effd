#include "gaseraser/attention.hpp"

#include <algorithm>
#include <cmath>

namespace gaseraser {

const char * error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonStochasticRow:    return "NonStochasticRow";
        case ErrorCode::NegativeWeight:      return "NegativeWeight";
        case ErrorCode::NonFiniteValue:      return "NonFiniteValue";
        case ErrorCode::IndexOutOfRange:     return "IndexOutOfRange";
        case ErrorCode::DimensionOutOfRange: return "DimensionOutOfRange";
        case ErrorCode::DimensionMismatch:   return "DimensionMismatch";
        case ErrorCode::ShapeMismatch:       return "ShapeMismatch";
        case ErrorCode::InvalidP:            return "InvalidP";
        case ErrorCode::InvalidParams:       return "InvalidParams";
        case ErrorCode::EmptyInput:          return "EmptyInput";
        case ErrorCode::BadMagic:            return "BadMagic";
        case ErrorCode::VersionMismatch:     return "VersionMismatch";
        case ErrorCode::TruncatedPayload:    return "TruncatedPayload";
        case ErrorCode::IoFailure:           return "IoFailure";
        case ErrorCode::BadConfig:           return "BadConfig";
    }
    return "UnknownError";
}

const char * role_name(TokenRole role) {
    switch (role) {
        case TokenRole::system:   return "system";
        case TokenRole::image:    return "image";
        case TokenRole::question: return "question";
        case TokenRole::option:   return "option";
        case TokenRole::gaslight: return "gaslight";
        case TokenRole::answer:   return "answer";
    }
    return "unknown";
}

std::optional<TokenRole> role_from_name(std::string_view name) {
    if (name == "system")   return TokenRole::system;
    if (name == "image")    return TokenRole::image;
    if (name == "question") return TokenRole::question;
    if (name == "option")   return TokenRole::option;
    if (name == "gaslight") return TokenRole::gaslight;
    if (name == "answer")   return TokenRole::answer;
    return std::nullopt;
}

IndexSet IndexSet::of(std::vector<int> indices) {
    for (int i : indices) {
        if (i < 0) {
            fail(ErrorCode::IndexOutOfRange, "negative token index " + std::to_string(i));
        }
    }
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    IndexSet s;
    s.indices_ = std::move(indices);
    return s;
}

bool IndexSet::contains(int i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

IndexSet IndexSet::intersect_span(Span span) const {
    IndexSet out;
    for (int i : indices_) {
        if (span.contains(i)) {
            out.indices_.push_back(i);
        }
    }
    return out;
}

IndexSet IndexSet::difference(const IndexSet & other) const {
    IndexSet out;
    for (int i : indices_) {
        if (!other.contains(i)) {
            out.indices_.push_back(i);
        }
    }
    return out;
}

AttentionTensor::AttentionTensor(std::vector<double> weights, int heads, int seq,
                                 int layer_index, double row_sum_tol) {
    if (heads < 1 || seq < 1) {
        fail(ErrorCode::ShapeMismatch, "attention tensor needs H >= 1 and S >= 1");
    }
    const size_t expected = static_cast<size_t>(heads) * seq * seq;
    if (weights.size() != expected) {
        fail(ErrorCode::ShapeMismatch,
             "weight count " + std::to_string(weights.size()) + " does not match H*S*S = " +
                 std::to_string(expected));
    }
    for (int h = 0; h < heads; ++h) {
        for (int s = 0; s < seq; ++s) {
            const double * row = weights.data() + (static_cast<size_t>(h) * seq + s) * seq;
            double sum = 0.0;
            for (int j = 0; j < seq; ++j) {
                const double w = row[j];
                if (!std::isfinite(w)) {
                    fail(ErrorCode::NonFiniteValue,
                         "weight at (" + std::to_string(h) + "," + std::to_string(s) + "," +
                             std::to_string(j) + ") is not finite");
                }
                if (w < 0.0) {
                    fail(ErrorCode::NegativeWeight,
                         "weight at (" + std::to_string(h) + "," + std::to_string(s) + "," +
                             std::to_string(j) + ") is negative");
                }
                sum += w;
            }
            if (std::abs(sum - 1.0) > row_sum_tol) {
                fail(ErrorCode::NonStochasticRow,
                     "row (" + std::to_string(h) + "," + std::to_string(s) + ") sums to " +
                         std::to_string(sum));
            }
        }
    }
    weights_     = std::move(weights);
    heads_       = heads;
    seq_         = seq;
    layer_index_ = layer_index;
}

AttentionTensor AttentionTensor::unchecked(std::vector<double> weights, int heads, int seq,
                                           int layer_index) {
    const size_t expected = static_cast<size_t>(heads) * seq * seq;
    if (heads < 1 || seq < 1 || weights.size() != expected) {
        fail(ErrorCode::ShapeMismatch, "bad shape for unchecked attention tensor");
    }
    AttentionTensor t;
    t.weights_     = std::move(weights);
    t.heads_       = heads;
    t.seq_         = seq;
    t.layer_index_ = layer_index;
    return t;
}

TokenContext::TokenContext(std::vector<double> embeddings, int seq, int dim, Span image_span,
                           std::vector<TokenRole> roles) {
    if (seq < 1 || dim < 1) {
        fail(ErrorCode::ShapeMismatch, "token context needs S >= 1 and d >= 1");
    }
    if (embeddings.size() != static_cast<size_t>(seq) * dim) {
        fail(ErrorCode::ShapeMismatch, "embedding count does not match S*d");
    }
    if (roles.size() != static_cast<size_t>(seq)) {
        fail(ErrorCode::ShapeMismatch, "role count does not match S");
    }
    if (!(0 <= image_span.begin && image_span.begin < image_span.end && image_span.end <= seq)) {
        fail(ErrorCode::IndexOutOfRange, "image span [" + std::to_string(image_span.begin) + "," +
                                             std::to_string(image_span.end) + ") out of range");
    }
    for (int i = 0; i < seq; ++i) {
        const bool in_span = image_span.contains(i);
        const bool is_img  = roles[i] == TokenRole::image;
        if (in_span != is_img) {
            fail(ErrorCode::InvalidParams,
                 "token " + std::to_string(i) + " role does not match the image span");
        }
    }
    for (double v : embeddings) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteValue, "embedding contains a non-finite value");
        }
    }
    embeddings_ = std::move(embeddings);
    seq_        = seq;
    dim_        = dim;
    image_span_ = image_span;
    roles_      = std::move(roles);
}

double row_mass(const AttentionTensor & t, int head, int source, const IndexSet & columns) {
    if (head < 0 || head >= t.heads() || source < 0 || source >= t.seq()) {
        fail(ErrorCode::IndexOutOfRange, "row_mass head/source out of range");
    }
    const double * row = t.row(head, source);
    double sum = 0.0;
    for (int j : columns.indices()) {
        if (j >= t.seq()) {
            fail(ErrorCode::IndexOutOfRange, "row_mass column " + std::to_string(j) +
                                                 " out of range for S = " + std::to_string(t.seq()));
        }
        sum += row[j];
    }
    return sum;
}

double row_mass(const AttentionTensor & t, int head, int source, Span columns) {
    if (head < 0 || head >= t.heads() || source < 0 || source >= t.seq()) {
        fail(ErrorCode::IndexOutOfRange, "row_mass head/source out of range");
    }
    if (columns.begin < 0 || columns.end > t.seq() || columns.begin > columns.end) {
        fail(ErrorCode::IndexOutOfRange, "row_mass span out of range");
    }
    const double * row = t.row(head, source);
    double sum = 0.0;
    for (int j = columns.begin; j < columns.end; ++j) {
        sum += row[j];
    }
    return sum;
}

} // namespace gaseraser
