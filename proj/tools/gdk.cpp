#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gdk/engine.hpp"
#include "gdk/metrics.hpp"
#include "gdk/svg.hpp"

namespace fs = std::filesystem;

namespace {

int resolve_threads(int flag_value) {
    // GDK_THREADS takes precedence over --threads.
    if (const char* env = std::getenv("GDK_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (...) {
            throw gdk::UsageError("GDK_THREADS must be a positive integer");
        }
    }
    return flag_value;
}

gdk::ConditionBundle make_conditions(const std::string& text, const std::string& sketch_path,
                                     int cond_dim, std::uint64_t cond_seed) {
    gdk::ConditionBundle conds;
    if (!text.empty()) conds.text = gdk::encode_text(text, cond_dim, cond_seed);
    if (!sketch_path.empty()) {
        int w = 0, h = 0;
        const auto img = gdk::read_pgm(sketch_path, w, h);
        if (w != 64 || h != 64) throw gdk::ValidationError("sketch must be 64x64: " + sketch_path);
        conds.image = gdk::encode_sketch(img, cond_dim, cond_seed);
    }
    return conds;
}

// Collects name -> pattern path pairs from a corpus dir, a flat dir of JSON
// files, or a single file.
std::map<std::string, std::string> pattern_set(const std::string& path) {
    std::map<std::string, std::string> out;
    if (fs::is_directory(path)) {
        if (fs::exists(fs::path(path) / "manifest.json")) {
            const auto manifest =
                nlohmann::json::parse(gdk::read_text_file((fs::path(path) / "manifest.json").string()));
            for (const auto& sub : manifest.at("entries"))
                out[sub.get<std::string>()] =
                    (fs::path(path) / sub.get<std::string>() / "pattern.json").string();
        } else {
            for (const auto& entry : fs::directory_iterator(path))
                if (entry.path().extension() == ".json")
                    out[entry.path().stem().string()] = entry.path().string();
        }
    } else {
        out[fs::path(path).stem().string()] = path;
    }
    if (out.empty()) throw gdk::ValidationError("no patterns found under " + path);
    return out;
}

struct LoadedModel {
    gdk::RunConfig cfg;
    gdk::NormStats stats;
    std::unique_ptr<gdk::TrainModel> model;
};

LoadedModel load_model(const std::string& config_path, const std::string& stats_path,
                       const std::string& ckpt_path) {
    LoadedModel lm;
    lm.cfg = gdk::load_run_config(config_path);
    lm.stats = gdk::load_stats(stats_path);
    lm.model = std::make_unique<gdk::TrainModel>(lm.cfg.resolved_denoiser());
    gdk::load_checkpoint(lm.model->params(), ckpt_path);
    return lm;
}

void write_sample_outputs(const gdk::SampleResult& res, const gdk::TokenLayout& layout,
                          const std::string& out_path, const std::string& svg_path,
                          const std::string& grid_path) {
    gdk::save_pattern(res.pattern, out_path);
    if (!svg_path.empty()) gdk::write_text_file(svg_path, gdk::render_svg(res.pattern));
    if (!grid_path.empty()) {
        gdk::TokenGrid grid;
        grid.layout = layout;
        grid.values = res.grid;
        grid.panel_mask.assign(static_cast<std::size_t>(layout.max_panels), 0);
        grid.edge_mask.assign(static_cast<std::size_t>(layout.rows()), 0);
        gdk::save_grid(grid, grid_path);
    }
    if (res.dropped_panels > 0)
        std::cerr << "warning: dropped " << res.dropped_panels << " degenerate panel(s)\n";
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Diffusion-based 3D sewing pattern generation toolkit"};
    app.require_subcommand(1);

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "Generate a synthetic garment corpus");
    int gen_n = 64;
    std::uint64_t gen_seed = 7;
    std::string gen_out;
    gen->add_option("--n", gen_n, "Number of entries")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->callback([&]() {
        const auto corpus = gdk::generate_corpus(gen_n, gen_seed);
        gdk::write_corpus(corpus, gen_out, gen_seed);
        std::cout << "wrote " << corpus.size() << " entries to " << gen_out << "\n";
    });

    // stats
    auto* st = app.add_subcommand("stats", "Compute normalization statistics for a corpus");
    std::string st_preset = "dresscode", st_data, st_out;
    st->add_option("--preset", st_preset, "Token layout preset");
    st->add_option("--data", st_data, "Corpus directory")->required();
    st->add_option("--out", st_out, "Stats JSON path")->required();
    st->callback([&]() {
        const auto corpus = gdk::load_corpus(st_data);
        std::vector<gdk::Pattern> patterns;
        for (const auto& e : corpus) patterns.push_back(e.pattern);
        const auto stats = gdk::compute_stats(patterns, gdk::layout_preset(st_preset));
        gdk::save_stats(stats, st_out);
        std::cout << "wrote stats for " << patterns.size() << " patterns to " << st_out << "\n";
    });

    // tokenize
    auto* tok = app.add_subcommand("tokenize", "Encode a pattern JSON into a token grid");
    std::string tok_preset = "dresscode", tok_in, tok_stats, tok_out;
    std::int64_t tok_shuffle = -1;
    tok->add_option("--preset", tok_preset, "Token layout preset");
    tok->add_option("--in", tok_in, "Pattern JSON")->required();
    tok->add_option("--stats", tok_stats, "Stats JSON")->required();
    tok->add_option("--out", tok_out, "Token grid output")->required();
    tok->add_option("--shuffle-seed", tok_shuffle, "Panel shuffle seed (-1: no shuffle)");
    tok->callback([&]() {
        const auto layout = gdk::layout_preset(tok_preset);
        const auto stats = gdk::load_stats(tok_stats);
        const auto pattern = gdk::load_pattern(tok_in);
        std::optional<std::uint64_t> shuffle;
        if (tok_shuffle >= 0) shuffle = static_cast<std::uint64_t>(tok_shuffle);
        const auto grid = gdk::encode(pattern, layout, stats, shuffle);
        gdk::save_grid(grid, tok_out);
        std::cout << "wrote " << grid.layout.rows() << " token rows (width "
                  << grid.layout.token_width() << ") to " << tok_out << "\n";
    });

    // detokenize
    auto* det = app.add_subcommand("detokenize", "Decode a token grid back into pattern JSON");
    std::string det_in, det_stats, det_out;
    det->add_option("--in", det_in, "Token grid file")->required();
    det->add_option("--stats", det_stats, "Stats JSON")->required();
    det->add_option("--out", det_out, "Pattern JSON output")->required();
    det->callback([&]() {
        const auto grid = gdk::load_grid(det_in);
        const auto stats = gdk::load_stats(det_stats);
        const auto dec = gdk::decode(grid, stats);
        gdk::save_pattern(dec.pattern, det_out);
        if (dec.dropped_panels > 0)
            std::cerr << "warning: dropped " << dec.dropped_panels << " degenerate panel(s)\n";
        std::cout << "wrote " << dec.pattern.panels.size() << " panel(s) to " << det_out << "\n";
    });

    // train
    auto* tr = app.add_subcommand("train", "Train the denoiser on a corpus");
    std::string tr_config, tr_data, tr_out;
    int tr_threads = 0;
    tr->add_option("--config", tr_config, "Run config JSON")->required();
    tr->add_option("--data", tr_data, "Corpus directory")->required();
    tr->add_option("--out", tr_out, "Output directory")->required();
    tr->add_option("--threads", tr_threads, "Worker threads (0: hardware)");
    tr->callback([&]() {
        gdk::RunConfig cfg = gdk::load_run_config(tr_config);
        cfg.threads = resolve_threads(tr_threads > 0 ? tr_threads : cfg.threads);
        const auto corpus = gdk::load_corpus(tr_data);
        std::vector<gdk::Pattern> patterns;
        for (const auto& e : corpus) patterns.push_back(e.pattern);
        const auto stats = gdk::compute_stats(patterns, cfg.token_layout());
        gdk::TrainModel model(cfg.resolved_denoiser());
        gdk::Rng init_rng(gdk::Rng::mix(cfg.seed, "init"));
        model.init(init_rng);
        const auto result = gdk::train(model, corpus, stats, cfg, tr_out);
        std::cout << "trained " << result.steps << " steps; best smoothed loss "
                  << result.best_smoothed << (result.reached_target ? " (target reached)" : "")
                  << "\n";
    });

    // sample
    auto* sa = app.add_subcommand("sample", "Sample a pattern from noise");
    std::string sa_config, sa_stats, sa_ckpt, sa_text, sa_sketch, sa_out, sa_svg, sa_grid;
    int sa_steps = 0;
    std::uint64_t sa_seed = 0;
    sa->add_option("--config", sa_config, "Run config JSON")->required();
    sa->add_option("--stats", sa_stats, "Stats JSON")->required();
    sa->add_option("--ckpt", sa_ckpt, "Checkpoint file")->required();
    sa->add_option("--text", sa_text, "Text prompt");
    sa->add_option("--sketch", sa_sketch, "Sketch PGM prompt");
    sa->add_option("--steps", sa_steps, "Denoising steps (default: config inference_steps)");
    sa->add_option("--seed", sa_seed, "Sampling seed");
    sa->add_option("--out", sa_out, "Output pattern JSON")->required();
    sa->add_option("--svg", sa_svg, "Also render the result as SVG");
    sa->add_option("--grid", sa_grid, "Also dump the raw token grid");
    sa->callback([&]() {
        auto lm = load_model(sa_config, sa_stats, sa_ckpt);
        const auto conds =
            make_conditions(sa_text, sa_sketch, lm.cfg.denoiser.cond_dim, lm.cfg.cond_seed);
        const int steps = sa_steps > 0 ? sa_steps : lm.cfg.scheduler.inference_steps;
        const auto res = gdk::sample(*lm.model, lm.cfg, lm.stats, conds, steps, sa_seed);
        write_sample_outputs(res, lm.cfg.token_layout(), sa_out, sa_svg, sa_grid);
        std::cout << "sampled " << res.pattern.panels.size() << " panel(s), "
                  << res.pattern.stitches.size() << " stitch(es) -> " << sa_out << "\n";
    });

    // complete
    auto* co = app.add_subcommand("complete", "Complete a partial pattern");
    std::string co_config, co_stats, co_ckpt, co_frag, co_text, co_sketch, co_out, co_svg, co_grid;
    int co_steps = 0;
    std::uint64_t co_seed = 0;
    co->add_option("--config", co_config, "Run config JSON")->required();
    co->add_option("--stats", co_stats, "Stats JSON")->required();
    co->add_option("--ckpt", co_ckpt, "Checkpoint file")->required();
    co->add_option("--fragment", co_frag, "Known panels (pattern JSON)")->required();
    co->add_option("--text", co_text, "Text prompt");
    co->add_option("--sketch", co_sketch, "Sketch PGM prompt");
    co->add_option("--steps", co_steps, "Denoising steps (default: config inference_steps)");
    co->add_option("--seed", co_seed, "Sampling seed");
    co->add_option("--out", co_out, "Output pattern JSON")->required();
    co->add_option("--svg", co_svg, "Also render the result as SVG");
    co->add_option("--grid", co_grid, "Also dump the raw token grid");
    co->callback([&]() {
        auto lm = load_model(co_config, co_stats, co_ckpt);
        const auto fragment = gdk::load_pattern(co_frag);
        const auto conds =
            make_conditions(co_text, co_sketch, lm.cfg.denoiser.cond_dim, lm.cfg.cond_seed);
        const int steps = co_steps > 0 ? co_steps : lm.cfg.scheduler.inference_steps;
        const auto res =
            gdk::complete(*lm.model, lm.cfg, lm.stats, fragment, conds, steps, co_seed);
        write_sample_outputs(res, lm.cfg.token_layout(), co_out, co_svg, co_grid);
        std::cout << "completed to " << res.pattern.panels.size() << " panel(s) -> " << co_out
                  << "\n";
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate predictions against ground truth");
    std::string ev_pred, ev_gt, ev_out;
    bool ev_table = false;
    ev->add_option("--pred", ev_pred, "Predicted pattern file/dir")->required();
    ev->add_option("--gt", ev_gt, "Ground-truth pattern file/dir")->required();
    ev->add_option("--out", ev_out, "Report JSON path");
    ev->add_flag("--table", ev_table, "Print an aligned text table");
    ev->callback([&]() {
        std::vector<std::pair<gdk::Pattern, gdk::Pattern>> pairs;
        if (!fs::is_directory(ev_pred) && !fs::is_directory(ev_gt)) {
            pairs.push_back({gdk::load_pattern(ev_pred), gdk::load_pattern(ev_gt)});
        } else {
            const auto preds = pattern_set(ev_pred);
            const auto gts = pattern_set(ev_gt);
            for (const auto& [name, gt_path] : gts) {
                const auto it = preds.find(name);
                if (it == preds.end())
                    throw gdk::ValidationError("missing prediction for entry '" + name + "'");
                pairs.push_back({gdk::load_pattern(it->second), gdk::load_pattern(gt_path)});
            }
        }
        const auto report = gdk::evaluate(pairs);
        const auto j = gdk::report_to_json(report);
        if (!ev_out.empty()) gdk::write_text_file(ev_out, j.dump(2) + "\n");
        if (ev_table)
            std::cout << gdk::report_to_table(report);
        else
            std::cout << j.dump(2) << "\n";
    });

    // render-svg
    auto* rs = app.add_subcommand("render-svg", "Render a pattern JSON as SVG");
    std::string rs_in, rs_out;
    rs->add_option("--in", rs_in, "Pattern JSON")->required();
    rs->add_option("--out", rs_out, "SVG output path")->required();
    rs->callback([&]() {
        gdk::write_text_file(rs_out, gdk::render_svg(gdk::load_pattern(rs_in)));
        std::cout << "wrote " << rs_out << "\n";
    });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the denoiser gradients");
    std::string gc_config;
    int gc_coords = 200;
    std::uint64_t gc_seed = 1;
    gc->add_option("--config", gc_config, "Run config JSON")->required();
    gc->add_option("--coords", gc_coords, "Sampled parameter coordinates")
        ->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed, "RNG seed");
    gc->callback([&]() {
        const gdk::RunConfig cfg = gdk::load_run_config(gc_config);
        gdk::Denoiser<double> model(cfg.resolved_denoiser());
        gdk::Rng rng(gdk::Rng::mix(gc_seed, "gradcheck"));
        model.init(rng);

        const int S = model.config().rows();
        const int D = model.config().token_width;
        std::vector<double> grid(static_cast<std::size_t>(S) * D), eps(grid.size());
        for (double& v : grid) v = rng.normal() * 0.5;
        for (double& v : eps) v = rng.normal();
        gdk::ConditionBundle conds;
        conds.text = gdk::encode_text("gradient check prompt", model.config().cond_dim, cfg.cond_seed);

        auto loss_value = [&]() {
            gdk::Tape<double> tape;
            auto fwd = model.forward(tape, grid, 11, conds, false);
            double s = 0.0;
            const auto& v = fwd.out.val();
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double d = v[i] - eps[i];
                s += d * d;
            }
            return s / static_cast<double>(v.size());
        };

        gdk::Tape<double> tape;
        auto fwd = model.forward(tape, grid, 11, conds, true);
        gdk::Tensor<double> target = gdk::make_constant(tape, S, D, eps);
        gdk::Tensor<double> loss = gdk::mse(fwd.out, target);
        tape.backward(loss.id);

        auto& entries = model.params().entries();
        double max_rel = 0.0;
        const double h = 1e-5;
        for (int c = 0; c < gc_coords; ++c) {
            const std::size_t p = static_cast<std::size_t>(rng.uniform_int(entries.size()));
            if (entries[p].value.empty()) continue;
            const std::size_t i = static_cast<std::size_t>(rng.uniform_int(entries[p].value.size()));
            const double analytic = fwd.leaves[p].grad()[i];
            const double orig = entries[p].value[i];
            entries[p].value[i] = orig + h;
            const double lp = loss_value();
            entries[p].value[i] = orig - h;
            const double lt = loss_value();
            entries[p].value[i] = orig;
            const double numeric = (lp - lt) / (2 * h);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
        }
        std::cout << "max relative error over " << gc_coords << " coordinates: " << max_rel
                  << "\n";
        if (!(max_rel < 1e-4)) throw gdk::NumericError("gradient check failed");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const gdk::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gdk::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gdk::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
