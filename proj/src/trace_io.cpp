#include "gaseraser/trace_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gaseraser {

namespace {

constexpr char     kMagic[4]  = {'G', 'E', 'T', 'R'};
constexpr uint32_t kVersion   = 1;
constexpr size_t   kHeaderLen = 4 + 8 * sizeof(uint32_t);

void put_u32(std::string & buf, uint32_t v) {
    // little-endian
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char * p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void put_f32(std::string & buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(buf, bits);
}

float get_f32(const unsigned char * p) {
    const uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string sidecar_path(const std::string & path) { return path + ".meta"; }

std::string join_ints(const std::vector<int> & v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

void write_trace(const std::string & path, const TokenContext & ctx,
                 const std::vector<AttentionTensor> & layers, const TraceMetadata & metadata) {
    const int seq = ctx.seq();
    for (const AttentionTensor & t : layers) {
        if (t.seq() != seq) {
            fail(ErrorCode::ShapeMismatch, "layer sequence length does not match the context");
        }
        if (t.heads() != layers.front().heads()) {
            fail(ErrorCode::ShapeMismatch, "layers disagree on head count");
        }
    }

    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<uint32_t>(layers.size()));
    put_u32(buf, layers.empty() ? 0u : static_cast<uint32_t>(layers.front().heads()));
    put_u32(buf, static_cast<uint32_t>(seq));
    put_u32(buf, static_cast<uint32_t>(ctx.dim()));
    put_u32(buf, static_cast<uint32_t>(ctx.image_span().begin));
    put_u32(buf, static_cast<uint32_t>(ctx.image_span().end));
    put_u32(buf, 0u); // flags, reserved

    for (double v : ctx.embeddings()) {
        put_f32(buf, static_cast<float>(v));
    }
    for (const AttentionTensor & t : layers) {
        for (double w : t.weights()) {
            put_f32(buf, static_cast<float>(w));
        }
    }

    // temp-file + rename so a crashed writer never leaves a half-written trace
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(buf.data(), static_cast<std::streamsize>(buf.size()))) {
            fail(ErrorCode::IoFailure, "failed writing " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "failed renaming " + tmp + " to " + path);
    }

    std::ostringstream meta;
    meta << "model_name = " << metadata.model_name << "\n";
    meta << "monitored_dims = " << join_ints(metadata.monitored_dims) << "\n";
    meta << "roles = ";
    for (int i = 0; i < seq; ++i) {
        if (i) {
            meta << ",";
        }
        meta << role_name(ctx.roles()[i]);
    }
    meta << "\n";
    const std::string meta_tmp = sidecar_path(path) + ".tmp";
    {
        std::ofstream out(meta_tmp, std::ios::binary | std::ios::trunc);
        if (!out || !(out << meta.str())) {
            fail(ErrorCode::IoFailure, "failed writing " + meta_tmp);
        }
    }
    std::filesystem::rename(meta_tmp, sidecar_path(path), ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "failed renaming sidecar for " + path);
    }
}

Trace read_trace(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path);
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (data.size() < kHeaderLen) {
        fail(ErrorCode::TruncatedPayload, "file shorter than the fixed header");
    }
    const auto * p = reinterpret_cast<const unsigned char *>(data.data());
    if (std::memcmp(p, kMagic, 4) != 0) {
        fail(ErrorCode::BadMagic, "not a trace file: " + path);
    }
    const uint32_t version = get_u32(p + 4);
    if (version != kVersion) {
        fail(ErrorCode::VersionMismatch,
             "trace version " + std::to_string(version) + ", expected " + std::to_string(kVersion));
    }
    const uint32_t layers    = get_u32(p + 8);
    const uint32_t heads     = get_u32(p + 12);
    const uint32_t seq       = get_u32(p + 16);
    const uint32_t dim       = get_u32(p + 20);
    const uint32_t img_begin = get_u32(p + 24);
    const uint32_t img_end   = get_u32(p + 28);

    const size_t hidden_count = static_cast<size_t>(seq) * dim;
    const size_t attn_count   = static_cast<size_t>(layers) * heads * seq * seq;
    const size_t expected     = kHeaderLen + 4 * (hidden_count + attn_count);
    if (data.size() != expected) {
        fail(ErrorCode::TruncatedPayload, "payload is " + std::to_string(data.size()) +
                                              " bytes, header arithmetic requires " +
                                              std::to_string(expected));
    }

    // sidecar
    TraceMetadata metadata;
    std::vector<TokenRole> roles;
    {
        std::ifstream ms(sidecar_path(path), std::ios::binary);
        if (!ms) {
            fail(ErrorCode::IoFailure, "missing sidecar " + sidecar_path(path));
        }
        std::string line;
        while (std::getline(ms, line)) {
            const size_t eq = line.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            auto trim = [](std::string s) {
                const size_t a = s.find_first_not_of(" \t\r\n");
                if (a == std::string::npos) {
                    return std::string();
                }
                const size_t b = s.find_last_not_of(" \t\r\n");
                return s.substr(a, b - a + 1);
            };
            const std::string key   = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "model_name") {
                metadata.model_name = value;
            } else if (key == "monitored_dims") {
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (!trim(item).empty()) {
                        metadata.monitored_dims.push_back(std::stoi(trim(item)));
                    }
                }
            } else if (key == "roles") {
                std::stringstream ss(value);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    auto role = role_from_name(trim(item));
                    if (!role) {
                        fail(ErrorCode::InvalidParams, "unknown role in sidecar: " + item);
                    }
                    roles.push_back(*role);
                }
            }
        }
    }
    if (roles.size() != seq) {
        fail(ErrorCode::InvalidParams, "sidecar role count does not match the header");
    }

    const unsigned char * cursor = p + kHeaderLen;
    std::vector<double> hidden(hidden_count);
    for (size_t i = 0; i < hidden_count; ++i, cursor += 4) {
        hidden[i] = static_cast<double>(get_f32(cursor));
    }
    TokenContext ctx(std::move(hidden), static_cast<int>(seq), static_cast<int>(dim),
                     Span{static_cast<int>(img_begin), static_cast<int>(img_end)},
                     std::move(roles));

    std::vector<AttentionTensor> tensors;
    tensors.reserve(layers);
    const size_t per_layer = static_cast<size_t>(heads) * seq * seq;
    for (uint32_t l = 0; l < layers; ++l) {
        std::vector<double> w(per_layer);
        for (size_t i = 0; i < per_layer; ++i, cursor += 4) {
            w[i] = static_cast<double>(get_f32(cursor));
        }
        tensors.emplace_back(std::move(w), static_cast<int>(heads), static_cast<int>(seq),
                             static_cast<int>(l), /*row_sum_tol=*/1e-4);
    }

    return Trace{std::move(ctx), std::move(tensors), std::move(metadata)};
}

} // namespace gaseraser
