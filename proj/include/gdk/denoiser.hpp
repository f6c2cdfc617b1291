#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gdk/conditioning.hpp"
#include "gdk/params.hpp"
#include "gdk/tensor.hpp"

namespace gdk {

struct DenoiserConfig {
    int embed_dim = 64;   // C
    int ffn_dim = 96;
    int n_blocks = 2;
    int n_heads = 4;
    int cond_dim = 64;
    int token_width = 13;  // D
    int max_panels = 10;   // M
    int max_edges = 10;    // N

    int rows() const { return max_panels * max_edges; }

    void validate() const {
        if (embed_dim <= 0 || embed_dim % 2 != 0) throw UsageError("embed_dim must be positive and even");
        if (embed_dim % n_heads != 0) throw UsageError("embed_dim must be divisible by n_heads");
        if (ffn_dim <= 0 || n_blocks <= 0 || cond_dim <= 0) throw UsageError("invalid denoiser config");
    }
};

// "paper": the full-scale block stack; "desk": small enough to train on a CPU.
inline DenoiserConfig denoiser_preset(const std::string& name) {
    if (name == "paper") return {768, 1024, 12, 8, 768, 16, 37, 39};
    if (name == "desk") return {64, 96, 2, 4, 64, 13, 10, 10};
    throw UsageError("unknown denoiser preset: " + name);
}

inline nlohmann::ordered_json denoiser_config_to_json(const DenoiserConfig& c) {
    return {{"embed_dim", c.embed_dim}, {"ffn_dim", c.ffn_dim},     {"n_blocks", c.n_blocks},
            {"n_heads", c.n_heads},     {"cond_dim", c.cond_dim},   {"token_width", c.token_width},
            {"max_panels", c.max_panels}, {"max_edges", c.max_edges}};
}

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    try {
        c.embed_dim = j.at("embed_dim").get<int>();
        c.ffn_dim = j.at("ffn_dim").get<int>();
        c.n_blocks = j.at("n_blocks").get<int>();
        c.n_heads = j.at("n_heads").get<int>();
        c.cond_dim = j.at("cond_dim").get<int>();
        c.token_width = j.at("token_width").get<int>();
        c.max_panels = j.at("max_panels").get<int>();
        c.max_edges = j.at("max_edges").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed denoiser config: ") + e.what());
    }
    c.validate();
    return c;
}

// Sinusoidal step encoding with C/2 frequency pairs, interleaved [sin, cos].
inline std::vector<double> time_embedding(int t, int dim) {
    if (t < 0) throw UsageError("time_embedding: negative step");
    if (dim % 2 != 0) throw UsageError("time_embedding: dim must be even");
    std::vector<double> emb(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim / 2; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / dim);
        emb[static_cast<std::size_t>(2 * k)] = std::sin(t * freq);
        emb[static_cast<std::size_t>(2 * k + 1)] = std::cos(t * freq);
    }
    return emb;
}

// Diffusion transformer over edge tokens: token embedding, pre-norm DiT
// blocks (self-attention, decoupled multimodal cross-attention, feed-forward)
// and a linear noise-prediction head back to token width.
template <class Real>
class Denoiser {
public:
    explicit Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        register_params();
    }

    const DenoiserConfig& config() const { return cfg_; }
    ParamStore<Real>& params() { return params_; }
    const ParamStore<Real>& params() const { return params_; }

    // Truncated-normal projections and tables; zero biases; zero head so the
    // untrained model predicts zero noise. Every residual branch's output
    // projection also starts at zero, which keeps the early stream equal to
    // the token embedding and breaks the slow-start plateau at desk scale.
    void init(Rng& rng) {
        const double sigma = 0.02;
        for (auto& e : params_.entries()) {
            const std::size_t dot = e.name.rfind('.');
            const std::string leaf = dot == std::string::npos ? e.name : e.name.substr(dot + 1);
            const bool residual_out = leaf == "wo" || (leaf == "w2" && e.name.find(".ffn.") != std::string::npos);
            if (leaf == "gain") {
                std::fill(e.value.begin(), e.value.end(), Real(1));
            } else if (leaf[0] == 'b' || e.name == "head.w" || residual_out) {
                std::fill(e.value.begin(), e.value.end(), Real(0));
            } else if (e.name == "emb_panel" || e.name == "emb_edge") {
                // rows must be separable from step one for content addressing
                init_trunc_normal(e.value, rng, 0.25);
            } else {
                init_trunc_normal(e.value, rng, sigma);
            }
        }
    }

    // Forward output plus the tape leaf of every parameter (registry order),
    // so a training step can read per-parameter gradients after backward().
    // embedded is the post-token-embedding stream, exposed for inspection.
    struct Forward {
        Tensor<Real> out;
        Tensor<Real> embedded;
        std::vector<Tensor<Real>> leaves;
    };

    struct CrossAttnWeights {
        Tensor<Real> wq, bq;
        Tensor<Real> wk_text, bk_text, wv_text, bv_text;
        Tensor<Real> wk_image, bk_image, wv_image, bv_image;
        Tensor<Real> wo, bo;
    };

    // Decoupled multimodal cross-attention: shared query projection, separate
    // key/value projections per modality, the two attention outputs summed and
    // output-projected.
    static Tensor<Real> decoupled_cross_attention(Tensor<Real> x, Tensor<Real> text_seq,
                                                  Tensor<Real> image_seq,
                                                  const CrossAttnWeights& w, int n_heads) {
        Tensor<Real> q = linear(x, w.wq, w.bq);
        Tensor<Real> kt = linear(text_seq, w.wk_text, w.bk_text);
        Tensor<Real> vt = linear(text_seq, w.wv_text, w.bv_text);
        Tensor<Real> ki = linear(image_seq, w.wk_image, w.bk_image);
        Tensor<Real> vi = linear(image_seq, w.wv_image, w.bv_image);
        Tensor<Real> fused = add(multihead_attention(q, kt, vt, n_heads),
                                 multihead_attention(q, ki, vi, n_heads));
        return linear(fused, w.wo, w.bo);
    }

    // Full forward pass on the given tape. grid is the (M*N) x D noised token
    // matrix, row-major; absent modalities fall back to the learned null rows.
    Forward forward(Tape<Real>& tape, const std::vector<Real>& grid, int t,
                    const ConditionBundle& conds, bool train_mode) {
        const int S = cfg_.rows();
        const int D = cfg_.token_width;
        const int C = cfg_.embed_dim;
        if (grid.size() != static_cast<std::size_t>(S) * D)
            throw ShapeError("denoiser forward: grid does not match config");

        Forward fwd;
        fwd.leaves.reserve(params_.entries().size());
        for (auto& e : params_.entries())
            fwd.leaves.push_back(make_tensor(tape, e.rows, e.cols, e.value, train_mode));
        auto P = [&](const std::string& name) { return fwd.leaves[params_.index_of(name)]; };
        Tensor<Real> x_in = make_constant(tape, S, D, grid);

        // Token embedding: phi(row) + Emb_P(panel) + Emb_E(edge) + T(t).
        Tensor<Real> h = linear(x_in, P("phi.w1"), P("phi.b1"));
        h = gelu(h);
        h = linear(h, P("phi.w2"), P("phi.b2"));

        std::vector<int> panel_idx(static_cast<std::size_t>(S)), edge_idx(static_cast<std::size_t>(S));
        for (int r = 0; r < S; ++r) {
            panel_idx[static_cast<std::size_t>(r)] = r / cfg_.max_edges;
            edge_idx[static_cast<std::size_t>(r)] = r % cfg_.max_edges;
        }
        h = add(h, embedding_lookup(P("emb_panel"), panel_idx));
        h = add(h, embedding_lookup(P("emb_edge"), edge_idx));

        const std::vector<double> temb = time_embedding(t, C);
        std::vector<Real> temb_r(temb.begin(), temb.end());
        Tensor<Real> tvec = make_constant(tape, 1, C, temb_r);
        tvec = linear(tvec, P("time.w1"), P("time.b1"));
        tvec = gelu(tvec);
        tvec = linear(tvec, P("time.w2"), P("time.b2"));
        h = add(h, tvec);
        fwd.embedded = h;

        Tensor<Real> text_seq = conds.text ? condition_sequence(tape, *conds.text)
                                           : P("null.text");
        Tensor<Real> image_seq = conds.image ? condition_sequence(tape, *conds.image)
                                             : P("null.image");

        for (int b = 0; b < cfg_.n_blocks; ++b) {
            const std::string pre = "block" + std::to_string(b) + ".";
            // self-attention
            {
                Tensor<Real> n1 = layer_norm(h, P(pre + "ln1.gain"), P(pre + "ln1.bias"));
                Tensor<Real> q = linear(n1, P(pre + "attn.wq"), P(pre + "attn.bq"));
                Tensor<Real> k = linear(n1, P(pre + "attn.wk"), P(pre + "attn.bk"));
                Tensor<Real> v = linear(n1, P(pre + "attn.wv"), P(pre + "attn.bv"));
                Tensor<Real> attn = multihead_attention(q, k, v, cfg_.n_heads);
                h = add(h, linear(attn, P(pre + "attn.wo"), P(pre + "attn.bo")));
            }
            // decoupled cross-attention: shared Q, per-modality K/V, summed.
            {
                Tensor<Real> n2 = layer_norm(h, P(pre + "ln2.gain"), P(pre + "ln2.bias"));
                CrossAttnWeights w{P(pre + "cross.wq"),       P(pre + "cross.bq"),
                                   P(pre + "cross.wk_text"),  P(pre + "cross.bk_text"),
                                   P(pre + "cross.wv_text"),  P(pre + "cross.bv_text"),
                                   P(pre + "cross.wk_image"), P(pre + "cross.bk_image"),
                                   P(pre + "cross.wv_image"), P(pre + "cross.bv_image"),
                                   P(pre + "cross.wo"),       P(pre + "cross.bo")};
                h = add(h, decoupled_cross_attention(n2, text_seq, image_seq, w, cfg_.n_heads));
            }
            // feed-forward
            {
                Tensor<Real> n3 = layer_norm(h, P(pre + "ln3.gain"), P(pre + "ln3.bias"));
                Tensor<Real> f = linear(n3, P(pre + "ffn.w1"), P(pre + "ffn.b1"));
                f = gelu(f);
                f = linear(f, P(pre + "ffn.w2"), P(pre + "ffn.b2"));
                h = add(h, f);
            }
        }

        Tensor<Real> out = layer_norm(h, P("head.ln.gain"), P("head.ln.bias"));
        fwd.out = linear(out, P("head.w"), P("head.b"));
        return fwd;
    }

    // Convenience: forward without gradients, returning the raw prediction.
    std::vector<double> predict(const std::vector<double>& grid, int t,
                                const ConditionBundle& conds) {
        Tape<Real> tape;
        std::vector<Real> g(grid.begin(), grid.end());
        Forward fwd = forward(tape, g, t, conds, false);
        return std::vector<double>(fwd.out.val().begin(), fwd.out.val().end());
    }

    static Tensor<Real> linear(Tensor<Real> x, Tensor<Real> w, Tensor<Real> b) {
        return add(matmul(x, w), b);
    }

    // Per-head scaled dot-product attention; scale is 1/sqrt(head_dim).
    static Tensor<Real> multihead_attention(Tensor<Real> q, Tensor<Real> k, Tensor<Real> v,
                                            int n_heads) {
        const int C = q.cols();
        const int dh = C / n_heads;
        const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
        std::vector<Tensor<Real>> heads;
        heads.reserve(static_cast<std::size_t>(n_heads));
        for (int hd = 0; hd < n_heads; ++hd) {
            Tensor<Real> qh = slice_cols(q, hd * dh, dh);
            Tensor<Real> kh = slice_cols(k, hd * dh, dh);
            Tensor<Real> vh = slice_cols(v, hd * dh, dh);
            Tensor<Real> scores = scale(matmul_nt(qh, kh), att_scale);
            heads.push_back(matmul(softmax_rows(scores), vh));
        }
        return concat_cols(heads);
    }

private:
    Tensor<Real> condition_sequence(Tape<Real>& tape, const ModalityFeatures& feats) {
        const auto seq = feats.sequence();
        if (static_cast<int>(seq.size()) != feats.sequence_rows() * cfg_.cond_dim)
            throw ShapeError("condition feature width does not match cond_dim");
        std::vector<Real> seq_r(seq.begin(), seq.end());
        return make_constant(tape, feats.sequence_rows(), cfg_.cond_dim, seq_r);
    }

    void register_params() {
        const int C = cfg_.embed_dim, D = cfg_.token_width, F = cfg_.ffn_dim, E = cfg_.cond_dim;
        params_.add("phi.w1", D, C);
        params_.add("phi.b1", 1, C);
        params_.add("phi.w2", C, C);
        params_.add("phi.b2", 1, C);
        params_.add("time.w1", C, C);
        params_.add("time.b1", 1, C);
        params_.add("time.w2", C, C);
        params_.add("time.b2", 1, C);
        params_.add("emb_panel", cfg_.max_panels, C);
        params_.add("emb_edge", cfg_.max_edges, C);
        params_.add("null.text", 1, E);
        params_.add("null.image", 1, E);
        for (int b = 0; b < cfg_.n_blocks; ++b) {
            const std::string pre = "block" + std::to_string(b) + ".";
            params_.add(pre + "ln1.gain", 1, C);
            params_.add(pre + "ln1.bias", 1, C);
            params_.add(pre + "attn.wq", C, C);
            params_.add(pre + "attn.bq", 1, C);
            params_.add(pre + "attn.wk", C, C);
            params_.add(pre + "attn.bk", 1, C);
            params_.add(pre + "attn.wv", C, C);
            params_.add(pre + "attn.bv", 1, C);
            params_.add(pre + "attn.wo", C, C);
            params_.add(pre + "attn.bo", 1, C);
            params_.add(pre + "ln2.gain", 1, C);
            params_.add(pre + "ln2.bias", 1, C);
            params_.add(pre + "cross.wq", C, C);
            params_.add(pre + "cross.bq", 1, C);
            params_.add(pre + "cross.wk_text", E, C);
            params_.add(pre + "cross.bk_text", 1, C);
            params_.add(pre + "cross.wv_text", E, C);
            params_.add(pre + "cross.bv_text", 1, C);
            params_.add(pre + "cross.wk_image", E, C);
            params_.add(pre + "cross.bk_image", 1, C);
            params_.add(pre + "cross.wv_image", E, C);
            params_.add(pre + "cross.bv_image", 1, C);
            params_.add(pre + "cross.wo", C, C);
            params_.add(pre + "cross.bo", 1, C);
            params_.add(pre + "ln3.gain", 1, C);
            params_.add(pre + "ln3.bias", 1, C);
            params_.add(pre + "ffn.w1", C, F);
            params_.add(pre + "ffn.b1", 1, F);
            params_.add(pre + "ffn.w2", F, C);
            params_.add(pre + "ffn.b2", 1, C);
        }
        params_.add("head.ln.gain", 1, C);
        params_.add("head.ln.bias", 1, C);
        params_.add("head.w", C, D);
        params_.add("head.b", 1, D);
    }

    DenoiserConfig cfg_;
    ParamStore<Real> params_;
};

}  // namespace gdk
