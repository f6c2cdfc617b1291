#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "gdk/rng.hpp"

namespace gdk {

// Deterministic stand-ins for frozen pretrained encoders. Each modality yields
// a pooled vector plus a per-token/per-patch sequence in a shared cond_dim;
// a real encoder can be swapped in behind the same interface.

struct ModalityFeatures {
    std::vector<double> pooled;               // cond_dim
    std::vector<std::vector<double>> tokens;  // L x cond_dim

    // Sequence fed to cross-attention: pooled row first, then the tokens.
    std::vector<double> sequence() const {
        std::vector<double> seq;
        seq.reserve((tokens.size() + 1) * pooled.size());
        seq.insert(seq.end(), pooled.begin(), pooled.end());
        for (const auto& t : tokens) seq.insert(seq.end(), t.begin(), t.end());
        return seq;
    }
    int sequence_rows() const { return static_cast<int>(tokens.size()) + 1; }
};

struct ConditionBundle {
    std::optional<ModalityFeatures> text;
    std::optional<ModalityFeatures> image;
};

inline constexpr int kTextTableRows = 4096;
inline constexpr int kMaxTextTokens = 77;
inline constexpr int kSketchSize = 64;
inline constexpr int kSketchPatch = 8;

// Splits on whitespace, trims non-alphanumeric rim characters, lowercases.
// Interior punctuation ("a-line") stays part of the token.
inline std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&]() {
        std::size_t b = 0, e = cur.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(cur[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(cur[e - 1]))) --e;
        if (e > b) tokens.push_back(cur.substr(b, e - b));
        cur.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    if (tokens.size() > kMaxTextTokens) tokens.resize(kMaxTextTokens);
    return tokens;
}

inline void l2_normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0)
        for (double& x : v) x /= n;
    // all-zero input stays the zero vector
}

// Token rows come from a seed-fixed 4096 x cond_dim table addressed by the
// 64-bit FNV-1a hash of each token; pooled is the L2-normalized token mean.
inline ModalityFeatures encode_text(const std::string& text, int cond_dim, std::uint64_t seed) {
    const auto tokens = tokenize_text(text);
    if (tokens.empty()) throw ValidationError("encode_text: empty text");
    Rng rng(Rng::mix(seed, "text-table"));
    std::vector<double> table(static_cast<std::size_t>(kTextTableRows) * cond_dim);
    for (double& v : table) v = rng.normal();

    ModalityFeatures feats;
    feats.pooled.assign(static_cast<std::size_t>(cond_dim), 0.0);
    for (const std::string& tok : tokens) {
        const std::size_t row = static_cast<std::size_t>(fnv1a64(tok) % kTextTableRows);
        std::vector<double> vec(table.begin() + static_cast<std::ptrdiff_t>(row * cond_dim),
                                table.begin() + static_cast<std::ptrdiff_t>((row + 1) * cond_dim));
        for (int d = 0; d < cond_dim; ++d) feats.pooled[static_cast<std::size_t>(d)] += vec[static_cast<std::size_t>(d)];
        feats.tokens.push_back(std::move(vec));
    }
    for (double& v : feats.pooled) v /= static_cast<double>(tokens.size());
    l2_normalize(feats.pooled);
    return feats;
}

// 64x64 sketch -> 64 patch rows (8x8 patches, row-major) through a seed-fixed
// random projection; pooled is the L2-normalized mean patch feature.
inline ModalityFeatures encode_sketch(const std::vector<double>& image, int cond_dim,
                                      std::uint64_t seed) {
    if (image.size() != static_cast<std::size_t>(kSketchSize) * kSketchSize)
        throw ShapeError("encode_sketch: expected a 64x64 image");
    const int patch_px = kSketchPatch * kSketchPatch;
    Rng rng(Rng::mix(seed, "sketch-proj"));
    std::vector<double> proj(static_cast<std::size_t>(patch_px) * cond_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(patch_px));
    for (double& v : proj) v = rng.normal() * scale;

    const int grid = kSketchSize / kSketchPatch;
    ModalityFeatures feats;
    feats.pooled.assign(static_cast<std::size_t>(cond_dim), 0.0);
    for (int pr = 0; pr < grid; ++pr) {
        for (int pc = 0; pc < grid; ++pc) {
            std::vector<double> patch(static_cast<std::size_t>(patch_px));
            for (int dr = 0; dr < kSketchPatch; ++dr)
                for (int dc = 0; dc < kSketchPatch; ++dc)
                    patch[static_cast<std::size_t>(dr * kSketchPatch + dc)] =
                        image[static_cast<std::size_t>((pr * kSketchPatch + dr) * kSketchSize +
                                                       pc * kSketchPatch + dc)];
            std::vector<double> row(static_cast<std::size_t>(cond_dim), 0.0);
            for (int p = 0; p < patch_px; ++p) {
                const double pv = patch[static_cast<std::size_t>(p)];
                if (pv == 0.0) continue;
                const double* prow = proj.data() + static_cast<std::size_t>(p) * cond_dim;
                for (int d = 0; d < cond_dim; ++d) row[static_cast<std::size_t>(d)] += pv * prow[d];
            }
            for (int d = 0; d < cond_dim; ++d) feats.pooled[static_cast<std::size_t>(d)] += row[static_cast<std::size_t>(d)];
            feats.tokens.push_back(std::move(row));
        }
    }
    for (double& v : feats.pooled) v /= static_cast<double>(feats.tokens.size());
    l2_normalize(feats.pooled);
    return feats;
}

}  // namespace gdk
