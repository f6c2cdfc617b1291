// Acceptance suite: one pass/fail line per criterion, exit code = #failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "gdk/engine.hpp"
#include "gdk/metrics.hpp"
#include "helpers.hpp"

using namespace gdk;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Harness {
    int failures = 0;
    int index = 0;

    void run(const std::string& name, const std::function<void(std::ostringstream&)>& fn) {
        ++index;
        std::ostringstream detail;
        const auto t0 = Clock::now();
        bool ok = true;
        try {
            fn(detail);
        } catch (const std::exception& e) {
            ok = false;
            detail << " unexpected error: " << e.what();
        }
        const double dt = seconds_since(t0);
        if (!ok) ++failures;
        std::printf("%s [%2d] %-28s (%.1fs)%s\n", ok ? "PASS" : "FAIL", index, name.c_str(), dt,
                    detail.str().c_str());
        std::fflush(stdout);
    }
};

#define CHECK_OR_THROW(cond, msg)                                   \
    do {                                                            \
        if (!(cond)) throw std::runtime_error(std::string(msg));    \
    } while (0)

// Shared fixed-seed overfit configuration (criteria 5, 6, 9, 10).
constexpr std::uint64_t kCorpusSeed = 11;
constexpr std::uint64_t kRunSeed = 7;

RunConfig overfit_config() {
    RunConfig cfg;
    cfg.layout = "dresscode";
    cfg.denoiser = denoiser_preset("desk");
    cfg.scheduler = {1000, 1e-4, 2e-2, 50};
    cfg.batch_size = 8;
    cfg.max_steps = 5000;
    cfg.target_loss = 0.02;  // tested on the 50-step moving average
    cfg.seed = kRunSeed;
    cfg.caption = "detailed";
    cfg.optim.lr = 1e-3;  // desk-scale override of the full-scale 1e-4
    cfg.threads = 0;
    return cfg;
}

struct OverfitState {
    bool trained = false;
    RunConfig cfg;
    NormStats stats;
    std::unique_ptr<TrainModel> model;
    std::vector<CorpusEntry> corpus;
    double train_seconds = 0.0;
    long steps = 0;
};

OverfitState g_overfit;

void ensure_overfit_trained() {
    if (g_overfit.trained) return;
    g_overfit.cfg = overfit_config();
    g_overfit.corpus = generate_corpus(8, kCorpusSeed);
    std::vector<Pattern> patterns;
    for (const auto& e : g_overfit.corpus) patterns.push_back(e.pattern);
    g_overfit.stats = compute_stats(patterns, g_overfit.cfg.token_layout());
    g_overfit.model = std::make_unique<TrainModel>(g_overfit.cfg.resolved_denoiser());
    Rng init_rng(Rng::mix(g_overfit.cfg.seed, "init"));
    g_overfit.model->init(init_rng);
    const auto t0 = Clock::now();
    const TrainResult res = train(*g_overfit.model, g_overfit.corpus, g_overfit.stats, g_overfit.cfg);
    g_overfit.train_seconds = seconds_since(t0);
    g_overfit.steps = res.steps;
    g_overfit.trained = true;
}

ConditionBundle caption_condition(const OverfitState& st, std::size_t i) {
    ConditionBundle conds;
    conds.text = encode_text(st.corpus[i].detailed, st.cfg.denoiser.cond_dim, st.cfg.cond_seed);
    return conds;
}

}  // namespace

int main() {
    Harness h;

    // 1. sequence-length claim per preset
    h.run("sequence-length", [](std::ostringstream& out) {
        CHECK_OR_THROW(layout_preset("garmentcode").rows() == 1443, "garmentcode != 1443");
        CHECK_OR_THROW(layout_preset("dresscode").rows() == 100, "dresscode != 100");
        CHECK_OR_THROW(layout_preset("sewfactory").rows() == 168, "sewfactory != 168");
        out << " garmentcode=1443 dresscode=100 sewfactory=168";
    });

    // 2. tokenizer round trip over 200 patterns, plain and shuffled
    h.run("tokenizer-round-trip", [](std::ostringstream& out) {
        const auto corpus = generate_corpus(200, 23);
        std::vector<Pattern> patterns;
        for (const auto& e : corpus) patterns.push_back(e.pattern);
        const auto layout = layout_preset("dresscode");
        const NormStats stats = compute_stats(patterns, layout);
        Rng rng(77);
        for (const auto& pat : patterns) {
            const DecodeResult plain = decode(encode(pat, layout, stats), stats);
            CHECK_OR_THROW(plain.dropped_panels == 0, "dropped panel in plain round trip");
            CHECK_OR_THROW(oracle::patterns_equal(plain.pattern, pat, 1e-5),
                           "plain round trip mismatch on " + pat.name);
            const DecodeResult shuf = decode(encode(pat, layout, stats, rng.next_u64()), stats);
            CHECK_OR_THROW(oracle::patterns_equal_up_to_permutation(shuf.pattern, pat, 1e-5),
                           "shuffled round trip mismatch on " + pat.name);
        }
        out << " 200 patterns, plain + shuffled";
    });

    // 3. scheduler correctness
    h.run("scheduler", [](std::ostringstream& out) {
        const Scheduler s({1000, 1e-4, 2e-2, 50});
        const auto tab = oracle::alpha_bar_table(1000, 1e-4, 2e-2);
        double max_err = 0.0;
        for (int t = 0; t < 1000; ++t)
            max_err = std::max(max_err, std::abs(s.alpha_bar(t) - tab[static_cast<std::size_t>(t)]));
        CHECK_OR_THROW(max_err < 1e-12, "alpha_bar deviates from cumulative product");
        for (int t = 1; t < 1000; ++t) {
            const double snr_prev = s.alpha_bar(t - 1) / (1 - s.alpha_bar(t - 1));
            const double snr = s.alpha_bar(t) / (1 - s.alpha_bar(t));
            CHECK_OR_THROW(snr < snr_prev, "SNR not strictly decreasing");
        }
        // forward then deterministic inversion with the true noise
        Rng rng(5);
        std::vector<double> x0(64), eps(64);
        for (auto& v : x0) v = rng.uniform() * 2 - 1;
        for (auto& v : eps) v = rng.normal();
        std::vector<double> x = s.add_noise(x0, eps, 999);
        const auto& ts = Scheduler::spaced_timesteps(1000, 1000);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const int t = ts[k];
            const int t_prev = k + 1 < ts.size() ? ts[k + 1] : -1;
            const double sa = std::sqrt(s.alpha_bar(t)), se = std::sqrt(1 - s.alpha_bar(t));
            std::vector<double> true_eps(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) true_eps[i] = (x[i] - sa * x0[i]) / se;
            x = s.step(true_eps, t, t_prev, x, nullptr);
        }
        double inv_err = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) inv_err = std::max(inv_err, std::abs(x[i] - x0[i]));
        CHECK_OR_THROW(inv_err < 1e-6, "inversion did not recover x0");
        out << " abar_err=" << max_err << " inv_err=" << inv_err;
    });

    // 4. gradient fidelity through the full desk-scale denoiser
    h.run("gradient-fidelity", [](std::ostringstream& out) {
        RunConfig cfg = overfit_config();
        Denoiser<double> model(cfg.resolved_denoiser());
        Rng rng(Rng::mix(31, "gradcheck"));
        model.init(rng);
        const int S = model.config().rows(), D = model.config().token_width;
        std::vector<double> grid(static_cast<std::size_t>(S) * D), target(grid.size());
        for (auto& v : grid) v = rng.normal() * 0.6;
        for (auto& v : target) v = rng.normal();
        ConditionBundle conds;
        conds.text = encode_text("a knee length flared skirt", model.config().cond_dim, cfg.cond_seed);
        conds.image = encode_sketch(generate_corpus(1, 4)[0].sketch, model.config().cond_dim,
                                    cfg.cond_seed);

        auto loss_value = [&]() {
            Tape<double> tape;
            auto fwd = model.forward(tape, grid, 137, conds, false);
            double s = 0;
            for (std::size_t i = 0; i < target.size(); ++i) {
                const double d = fwd.out.val()[i] - target[i];
                s += d * d;
            }
            return s / static_cast<double>(target.size());
        };
        Tape<double> tape;
        auto fwd = model.forward(tape, grid, 137, conds, true);
        Tensor<double> tt = make_constant(tape, S, D, target);
        Tensor<double> loss = mse(fwd.out, tt);
        tape.backward(loss.id);

        auto& entries = model.params().entries();
        double max_rel = 0.0;
        int coords = 0;
        Rng pick(1221);
        while (coords < 220) {
            const std::size_t p = static_cast<std::size_t>(pick.uniform_int(entries.size()));
            if (entries[p].value.empty()) continue;
            const std::size_t i = static_cast<std::size_t>(pick.uniform_int(entries[p].value.size()));
            const double analytic = fwd.leaves[p].grad()[i];
            const double numeric = oracle::central_diff(loss_value, entries[p].value[i]);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
            ++coords;
        }
        CHECK_OR_THROW(max_rel < 1e-4, "gradient mismatch: max rel err " + std::to_string(max_rel));
        out << " coords=" << coords << " max_rel_err=" << max_rel;
    });

    // 5. overfit reconstruction from training captions
    h.run("overfit-reconstruction", [](std::ostringstream& out) {
        ensure_overfit_trained();
        auto& st = g_overfit;
        std::vector<std::pair<Pattern, Pattern>> pairs;
        for (std::size_t i = 0; i < st.corpus.size(); ++i) {
            const SampleResult res = sample(*st.model, st.cfg, st.stats, caption_condition(st, i),
                                            50, 1000 + i);
            pairs.push_back({res.pattern, st.corpus[i].pattern});
        }
        const EvalReport rep = evaluate(pairs);
        out << " steps=" << st.steps << " train_time=" << static_cast<int>(st.train_seconds)
            << "s panel_l2=" << rep.panel_l2 << " #panel=" << rep.num_panel_acc
            << " #edge=" << rep.num_edge_acc << " f1=" << rep.stitch_f1;
        CHECK_OR_THROW(st.train_seconds <= 20 * 60, "training exceeded 20 minutes");
        CHECK_OR_THROW(rep.num_panel_acc == 1.0, "#panel accuracy below 1.0");
        CHECK_OR_THROW(rep.num_edge_acc >= 0.95, "#edge accuracy below 0.95");
        CHECK_OR_THROW(rep.panel_l2 < 1.0, "panel L2 above 1.0 cm");
        CHECK_OR_THROW(rep.stitch_f1 >= 0.95, "stitch F1 below 0.95");
    });

    // 6. completion contract with the overfit model
    h.run("completion", [](std::ostringstream& out) {
        ensure_overfit_trained();
        auto& st = g_overfit;
        // first multi-panel entry
        std::size_t idx = 0;
        while (idx < st.corpus.size() && st.corpus[idx].pattern.panels.size() < 2) ++idx;
        CHECK_OR_THROW(idx < st.corpus.size(), "no multi-panel entry");
        const Pattern& gt = st.corpus[idx].pattern;
        Pattern fragment;
        fragment.name = "fragment";
        fragment.panels.push_back(gt.panels[0]);

        const SampleResult res = complete(*st.model, st.cfg, st.stats, fragment,
                                          caption_condition(st, idx), 50, 4242);
        // provided panel preserved bit-exactly in the output token rows
        const TokenGrid known = encode(fragment, st.cfg.token_layout(), st.stats);
        const auto layout = st.cfg.token_layout();
        const std::size_t len = static_cast<std::size_t>(layout.max_edges) * layout.token_width();
        for (std::size_t i = 0; i < len; ++i)
            CHECK_OR_THROW(res.grid[i] == known.values[i], "known rows not preserved bit-exactly");

        const EvalReport rep = evaluate({{res.pattern, gt}});
        out << " panel_l2=" << rep.panel_l2 << " panels=" << res.pattern.panels.size() << "/"
            << gt.panels.size();
        CHECK_OR_THROW(rep.panel_l2 < 1.0, "completion panel L2 above 1.0 cm");
    });

    // 7. hungarian metrics equal brute force on random small instances
    h.run("metric-oracle-equivalence", [](std::ostringstream& out) {
        Rng rng(515);
        auto random_pattern = [&]() {
            Pattern p;
            p.name = "rand";
            const int n_panels = 1 + static_cast<int>(rng.uniform_int(5));
            for (int i = 0; i < n_panels; ++i) {
                Panel panel;
                panel.name = "p" + std::to_string(i);
                const int n_edges = 3 + static_cast<int>(rng.uniform_int(4));
                for (int e = 0; e < n_edges; ++e) {
                    const double ang = 2 * kPi * e / n_edges;
                    const double rad = 3 + 4 * rng.uniform();
                    panel.edges.push_back({{rad * std::cos(ang), rad * std::sin(ang)}, {}, std::nullopt});
                }
                panel.rotation_deg = {rng.uniform() * 40 - 20, rng.uniform() * 40 - 20,
                                      rng.uniform() * 90 - 45};
                panel.translation = {rng.uniform() * 20 - 10, rng.uniform() * 20 - 10,
                                     rng.uniform() * 8 - 4};
                p.panels.push_back(std::move(panel));
            }
            return p;
        };
        for (int trial = 0; trial < 50; ++trial) {
            const Pattern pred = random_pattern();
            const Pattern gt = random_pattern();
            const auto cp = canonicalize(pred);
            const auto cg = canonicalize(gt);
            const PanelMatching fast = match_panels(cp, cg);

            PanelMatching best;
            double best_cost = std::numeric_limits<double>::infinity();
            oracle::enumerate_assignments(
                static_cast<int>(cp.size()), static_cast<int>(cg.size()),
                [&](const std::vector<int>& assign) {
                    double cost = 0;
                    for (std::size_t i = 0; i < assign.size(); ++i)
                        if (assign[i] >= 0) cost += match_cost(cp[i], cg[static_cast<std::size_t>(assign[i])]);
                    if (cost < best_cost) {
                        best_cost = cost;
                        best.pairs.clear();
                        for (std::size_t i = 0; i < assign.size(); ++i)
                            if (assign[i] >= 0) best.pairs.push_back({static_cast<int>(i), assign[i]});
                    }
                });
            std::sort(best.pairs.begin(), best.pairs.end());
            CHECK_OR_THROW(fast.pairs == best.pairs, "assignment differs from brute force");
            // metric equality through the matchings
            CHECK_OR_THROW(panel_l2(cp, cg, fast) == panel_l2(cp, cg, best), "panel_l2 differs");
            const auto [pa_f, ea_f] = count_acc(cp, cg, fast);
            const auto [pa_b, ea_b] = count_acc(cp, cg, best);
            CHECK_OR_THROW(pa_f == pa_b && ea_f == ea_b, "count accuracy differs");
            const auto pl_f = placement_l2(cp, cg, fast);
            const auto pl_b = placement_l2(cp, cg, best);
            CHECK_OR_THROW(pl_f.rot == pl_b.rot && pl_f.trans == pl_b.trans, "placement differs");
            const auto prf_f = stitch_prf(pred, gt, fast);
            const auto prf_b = stitch_prf(pred, gt, best);
            CHECK_OR_THROW(prf_f.f1 == prf_b.f1, "stitch F1 differs");
        }
        out << " 50 instances";
    });

    // 8. self-evaluation identity over a corpus
    h.run("self-eval-identity", [](std::ostringstream& out) {
        const auto corpus = generate_corpus(100, 77);
        std::vector<std::pair<Pattern, Pattern>> pairs;
        for (const auto& e : corpus) pairs.push_back({e.pattern, e.pattern});
        const EvalReport rep = evaluate(pairs);
        CHECK_OR_THROW(rep.panel_l2 <= 1e-10, "panel_l2 not zero");
        CHECK_OR_THROW(rep.num_panel_acc == 1.0 && rep.num_edge_acc == 1.0, "accuracy not 1");
        CHECK_OR_THROW(rep.rot_l2 <= 1e-10 && rep.trans_l2 <= 1e-10, "placement L2 not zero");
        CHECK_OR_THROW(rep.stitch_precision == 1.0 && rep.stitch_recall == 1.0 && rep.stitch_f1 == 1.0,
                       "stitch PRF not 1");
        out << " 100 patterns";
    });

    // 9. multi-step sampling smoke + timing scaling
    h.run("sampling-steps-smoke", [](std::ostringstream& out) {
        ensure_overfit_trained();
        auto& st = g_overfit;
        const ConditionBundle conds = caption_condition(st, 0);
        double t50 = 0.0;
        std::vector<std::pair<int, double>> times;
        for (int steps : {50, 200, 500, 1000}) {
            const auto t0 = Clock::now();
            const SampleResult res = sample(*st.model, st.cfg, st.stats, conds, steps, 99);
            const double dt = seconds_since(t0);
            times.push_back({steps, dt});
            if (steps == 50) t50 = dt;
            CHECK_OR_THROW(!res.pattern.panels.empty(),
                           "no decodable panels at " + std::to_string(steps) + " steps");
            validate_pattern(res.pattern);
        }
        out << " times:";
        for (auto [steps, dt] : times) out << " " << steps << "->" << dt << "s";
        CHECK_OR_THROW(t50 < 5.0, "50-step sampling took >= 5s");
        for (auto [steps, dt] : times)
            CHECK_OR_THROW(dt <= (static_cast<double>(steps) / 50.0) * t50 * 1.5 + 0.5,
                           "wall time grows faster than linear");
    });

    // 10. determinism: corpora, loss traces, sampled grids
    h.run("determinism", [](std::ostringstream& out) {
        // corpora byte-identical
        const auto c1 = generate_corpus(16, 5);
        const auto c2 = generate_corpus(16, 5);
        for (std::size_t i = 0; i < c1.size(); ++i) {
            CHECK_OR_THROW(pattern_to_string(c1[i].pattern) == pattern_to_string(c2[i].pattern),
                           "corpus patterns differ");
            CHECK_OR_THROW(c1[i].sketch == c2[i].sketch, "corpus sketches differ");
            CHECK_OR_THROW(c1[i].brief == c2[i].brief && c1[i].detailed == c2[i].detailed,
                           "corpus captions differ");
        }
        // training traces to 1e-6 at step 100 (same seed)
        RunConfig cfg;
        cfg.layout = "dresscode";
        cfg.denoiser.embed_dim = 32;
        cfg.denoiser.ffn_dim = 48;
        cfg.denoiser.n_blocks = 1;
        cfg.denoiser.n_heads = 2;
        cfg.denoiser.cond_dim = 32;
        cfg.scheduler = {1000, 1e-4, 2e-2, 50};
        cfg.batch_size = 4;
        cfg.max_steps = 101;
        cfg.seed = 13;
        const auto corpus = generate_corpus(4, 9);
        std::vector<Pattern> pats;
        for (const auto& e : corpus) pats.push_back(e.pattern);
        const NormStats stats = compute_stats(pats, cfg.token_layout());
        TrainModel m1(cfg.resolved_denoiser());
        Rng r1(Rng::mix(cfg.seed, "init"));
        m1.init(r1);
        const TrainResult t1 = train(m1, corpus, stats, cfg);
        TrainModel m2(cfg.resolved_denoiser());
        Rng r2(Rng::mix(cfg.seed, "init"));
        m2.init(r2);
        const TrainResult t2 = train(m2, corpus, stats, cfg);
        CHECK_OR_THROW(std::abs(t1.trace[100].loss - t2.trace[100].loss) <= 1e-6,
                       "loss traces diverge at step 100");
        // sampled grids bit-exact
        ConditionBundle conds;
        conds.text = encode_text(corpus[0].brief, cfg.denoiser.cond_dim, cfg.cond_seed);
        const SampleResult s1 = sample(m1, cfg, stats, conds, 25, 3);
        const SampleResult s2 = sample(m1, cfg, stats, conds, 25, 3);
        CHECK_OR_THROW(s1.grid == s2.grid, "sampled grids differ");
        out << " corpora + traces + grids";
    });

    std::printf("%d/%d criteria passed\n", h.index - h.failures, h.index);
    return h.failures;
}
