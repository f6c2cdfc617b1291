#pragma once

#include <filesystem>
#include <fstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "gdk/denoiser.hpp"
#include "gdk/scheduler.hpp"
#include "gdk/synthgen.hpp"
#include "gdk/tokenizer.hpp"

namespace gdk {

struct RunConfig {
    std::string layout = "dresscode";
    DenoiserConfig denoiser = denoiser_preset("desk");
    SchedulerConfig scheduler;
    int batch_size = 8;
    int epochs = 100;
    long max_steps = 0;           // 0: derived from epochs * ceil(n / batch)
    double target_loss = 0.0;     // 0: disabled; tested on the smoothed loss
    int early_stop_patience = 0;  // steps without smoothed-loss improvement; 0: disabled
    std::uint64_t seed = 0;
    std::uint64_t cond_seed = 17;
    std::string caption = "detailed";  // which caption level feeds the text encoder
    std::vector<std::string> modalities = {"image", "text", "both"};
    AdamWConfig optim;
    int threads = 0;  // 0: hardware concurrency

    TokenLayout token_layout() const { return layout_preset(layout); }

    // The denoiser's grid geometry always follows the token layout.
    DenoiserConfig resolved_denoiser() const {
        DenoiserConfig c = denoiser;
        const TokenLayout tl = token_layout();
        c.token_width = tl.token_width();
        c.max_panels = tl.max_panels;
        c.max_edges = tl.max_edges;
        c.validate();
        return c;
    }
};

inline nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["layout"] = c.layout;
    j["denoiser"] = denoiser_config_to_json(c.denoiser);
    j["scheduler"] = {{"T", c.scheduler.total_steps},
                      {"beta_start", c.scheduler.beta_start},
                      {"beta_end", c.scheduler.beta_end},
                      {"inference_steps", c.scheduler.inference_steps}};
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["max_steps"] = c.max_steps;
    j["target_loss"] = c.target_loss;
    j["early_stop_patience"] = c.early_stop_patience;
    j["seed"] = c.seed;
    j["cond_seed"] = c.cond_seed;
    j["caption"] = c.caption;
    j["modalities"] = c.modalities;
    j["optim"] = {{"lr", c.optim.lr},
                  {"beta1", c.optim.beta1},
                  {"beta2", c.optim.beta2},
                  {"weight_decay", c.optim.weight_decay},
                  {"eps", c.optim.eps}};
    j["threads"] = c.threads;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.layout = j.value("layout", c.layout);
        if (j.contains("denoiser")) {
            const auto& jd = j.at("denoiser");
            if (jd.contains("preset")) {
                c.denoiser = denoiser_preset(jd.at("preset").get<std::string>());
                if (jd.contains("cond_dim")) c.denoiser.cond_dim = jd.at("cond_dim").get<int>();
            } else {
                c.denoiser = denoiser_config_from_json(jd);
            }
        }
        if (j.contains("scheduler")) {
            const auto& js = j.at("scheduler");
            c.scheduler.total_steps = js.value("T", c.scheduler.total_steps);
            c.scheduler.beta_start = js.value("beta_start", c.scheduler.beta_start);
            c.scheduler.beta_end = js.value("beta_end", c.scheduler.beta_end);
            c.scheduler.inference_steps = js.value("inference_steps", c.scheduler.inference_steps);
        }
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.max_steps = j.value("max_steps", c.max_steps);
        c.target_loss = j.value("target_loss", c.target_loss);
        c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
        c.seed = j.value("seed", c.seed);
        c.cond_seed = j.value("cond_seed", c.cond_seed);
        c.caption = j.value("caption", c.caption);
        if (j.contains("modalities")) c.modalities = j.at("modalities").get<std::vector<std::string>>();
        if (j.contains("optim")) {
            const auto& jo = j.at("optim");
            c.optim.lr = jo.value("lr", c.optim.lr);
            c.optim.beta1 = jo.value("beta1", c.optim.beta1);
            c.optim.beta2 = jo.value("beta2", c.optim.beta2);
            c.optim.weight_decay = jo.value("weight_decay", c.optim.weight_decay);
            c.optim.eps = jo.value("eps", c.optim.eps);
        }
        c.threads = j.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed run config: ") + e.what());
    }
    if (c.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (c.caption != "brief" && c.caption != "detailed")
        throw ValidationError("caption must be 'brief' or 'detailed'");
    for (const auto& m : c.modalities)
        if (m != "image" && m != "text" && m != "both")
            throw ValidationError("modalities entries must be image|text|both");
    if (c.modalities.empty()) throw ValidationError("modalities must not be empty");
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    try {
        return run_config_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("cannot parse " + path + ": " + e.what());
    }
}

struct TraceRow {
    long step = 0;
    double loss = 0.0;
    std::string modality;
};

struct TrainResult {
    std::vector<TraceRow> trace;
    double best_smoothed = 0.0;
    long steps = 0;
    bool reached_target = false;
};

using TrainModel = Denoiser<float>;

namespace detail {

inline ConditionBundle bundle_for(const std::string& modality, const ModalityFeatures& text,
                                  const ModalityFeatures& image) {
    ConditionBundle b;
    if (modality == "text" || modality == "both") b.text = text;
    if (modality == "image" || modality == "both") b.image = image;
    return b;
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace detail

// Single-process trainer. Per step: uniformly sampled batch, per-sample panel
// shuffle + fresh timestep and noise, modality cycling through the configured
// round-robin, MSE over the whole grid (padding rows included), one AdamW
// update. Batch elements run on worker threads; gradients are reduced in
// sample order so results do not depend on the thread count.
inline TrainResult train(TrainModel& model, const std::vector<CorpusEntry>& dataset,
                         const NormStats& stats, const RunConfig& cfg,
                         const std::string& out_dir = "") {
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    const TokenLayout layout = cfg.token_layout();
    check_stats_layout(stats, layout);
    for (const CorpusEntry& e : dataset) check_fits(e.pattern, layout);

    const Scheduler sched(cfg.scheduler);
    const int T = cfg.scheduler.total_steps;
    const int S = layout.rows();
    const int D = layout.token_width();
    const std::size_t grid_len = static_cast<std::size_t>(S) * D;

    // Frozen encoder features are deterministic; compute them once.
    std::vector<ModalityFeatures> text_feats, image_feats;
    text_feats.reserve(dataset.size());
    image_feats.reserve(dataset.size());
    for (const CorpusEntry& e : dataset) {
        const std::string& cap = cfg.caption == "brief" ? e.brief : e.detailed;
        text_feats.push_back(encode_text(cap, model.config().cond_dim, cfg.cond_seed));
        image_feats.push_back(encode_sketch(e.sketch, model.config().cond_dim, cfg.cond_seed));
    }

    AdamW<float> opt(model.params(), cfg.optim);
    Rng rng(Rng::mix(cfg.seed, "train"));

    long max_steps = cfg.max_steps;
    if (max_steps <= 0) {
        const long steps_per_epoch =
            (static_cast<long>(dataset.size()) + cfg.batch_size - 1) / cfg.batch_size;
        max_steps = steps_per_epoch * cfg.epochs;
    }

    std::ofstream csv;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        csv.open(std::filesystem::path(out_dir) / "loss.csv");
        csv << "step,loss,modality\n";
    }

    const int n_threads = detail::resolve_threads(cfg.threads);
    const std::size_t n_params = model.params().entries().size();

    TrainResult result;
    constexpr int kWindow = 50;
    std::vector<double> window;
    double best = std::numeric_limits<double>::infinity();
    long best_step = -1;

    struct SampleTask {
        std::vector<float> x_t;
        std::vector<float> eps;
        int t = 0;
        int entry = 0;
    };

    for (long step = 0; step < max_steps; ++step) {
        const std::string& modality =
            cfg.modalities[static_cast<std::size_t>(step) % cfg.modalities.size()];

        // All randomness is drawn serially up front; worker threads are pure.
        std::vector<SampleTask> batch(static_cast<std::size_t>(cfg.batch_size));
        for (auto& task : batch) {
            task.entry = static_cast<int>(rng.uniform_int(dataset.size()));
            const std::uint64_t shuffle_seed = rng.next_u64();
            const TokenGrid grid =
                encode(dataset[static_cast<std::size_t>(task.entry)].pattern, layout, stats, shuffle_seed);
            task.t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T)));
            std::vector<double> eps(grid_len), x_t;
            for (double& v : eps) v = rng.normal();
            sched.add_noise(grid.values, eps, task.t, x_t);
            task.eps.assign(eps.begin(), eps.end());
            task.x_t.assign(x_t.begin(), x_t.end());
        }

        std::vector<double> losses(batch.size(), 0.0);
        std::vector<std::vector<std::vector<float>>> grads(batch.size());
        std::vector<std::string> errors(batch.size());

        auto run_sample = [&](std::size_t b) {
            try {
                Tape<float> tape;
                auto fwd = model.forward(tape, batch[b].x_t, batch[b].t,
                                         detail::bundle_for(modality, text_feats[static_cast<std::size_t>(batch[b].entry)],
                                                            image_feats[static_cast<std::size_t>(batch[b].entry)]),
                                         true);
                Tensor<float> target = make_constant(tape, S, D, batch[b].eps);
                Tensor<float> loss = mse(fwd.out, target);
                tape.backward(loss.id);
                losses[b] = static_cast<double>(loss.val()[0]);
                grads[b].reserve(n_params);
                for (auto& leaf : fwd.leaves) grads[b].push_back(std::move(leaf.grad()));
            } catch (const std::exception& e) {
                errors[b] = e.what();
            }
        };

        if (n_threads <= 1 || batch.size() == 1) {
            for (std::size_t b = 0; b < batch.size(); ++b) run_sample(b);
        } else {
            std::vector<std::thread> pool;
            const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), batch.size());
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&, w]() {
                    for (std::size_t b = w; b < batch.size(); b += workers) run_sample(b);
                });
            for (auto& th : pool) th.join();
        }
        for (const std::string& err : errors)
            if (!err.empty()) throw NumericError("training step failed: " + err);

        // Sample-order reduction keeps the update thread-count independent.
        double loss = 0.0;
        for (double l : losses) loss += l;
        loss /= static_cast<double>(batch.size());
        if (!std::isfinite(loss))
            throw NumericError("training diverged at step " + std::to_string(step) +
                               " (non-finite loss)");

        std::vector<std::vector<float>> total(n_params);
        for (std::size_t p = 0; p < n_params; ++p) {
            total[p] = std::move(grads[0][p]);
            for (std::size_t b = 1; b < batch.size(); ++b) {
                const auto& g = grads[b][p];
                for (std::size_t i = 0; i < g.size(); ++i) total[p][i] += g[i];
            }
            const float inv = 1.0f / static_cast<float>(batch.size());
            for (float& v : total[p]) v *= inv;
        }
        opt.step(total);

        result.trace.push_back({step, loss, modality});
        if (csv.is_open()) csv << step << "," << loss << "," << modality << "\n";

        window.push_back(loss);
        if (static_cast<int>(window.size()) > kWindow) window.erase(window.begin());
        double smoothed = 0.0;
        for (double l : window) smoothed += l;
        smoothed /= static_cast<double>(window.size());

        if (smoothed < best) {
            best = smoothed;
            best_step = step;
            if (!out_dir.empty())
                save_checkpoint(model.params(),
                                (std::filesystem::path(out_dir) / "checkpoint.bin").string());
        }
        if (cfg.target_loss > 0.0 && static_cast<int>(window.size()) == kWindow &&
            smoothed < cfg.target_loss) {
            result.reached_target = true;
            result.steps = step + 1;
            break;
        }
        if (cfg.early_stop_patience > 0 && step - best_step >= cfg.early_stop_patience) {
            result.steps = step + 1;
            break;
        }
        result.steps = step + 1;
    }

    result.best_smoothed = best;
    if (!out_dir.empty()) {
        save_checkpoint(model.params(), (std::filesystem::path(out_dir) / "final.bin").string());
        write_text_file((std::filesystem::path(out_dir) / "config.json").string(),
                        run_config_to_json(cfg).dump(2) + "\n");
        save_stats(stats, (std::filesystem::path(out_dir) / "stats.json").string());
    }
    return result;
}

struct SampleResult {
    Pattern pattern;
    std::vector<double> grid;  // final normalized token values
    int dropped_panels = 0;
};

// Ancestral sampling from pure noise over the spaced timesteps.
inline SampleResult sample(TrainModel& model, const RunConfig& cfg, const NormStats& stats,
                           const ConditionBundle& conds, int n_steps, std::uint64_t seed,
                           const DecodeOptions& dopts = {}) {
    SchedulerConfig sc = cfg.scheduler;
    if (n_steps < 1 || n_steps > sc.total_steps)
        throw UsageError("sample: n_steps must be in [1, T]");
    sc.inference_steps = n_steps;
    const Scheduler sched(sc);
    const TokenLayout layout = cfg.token_layout();
    check_stats_layout(stats, layout);
    const std::size_t grid_len = static_cast<std::size_t>(layout.rows()) * layout.token_width();

    Rng rng(Rng::mix(seed, "sample"));
    std::vector<double> x(grid_len);
    for (double& v : x) v = rng.normal();

    const auto& ts = sched.inference_timesteps();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k];
        const int t_prev = k + 1 < ts.size() ? ts[k + 1] : -1;
        const std::vector<double> eps_hat = model.predict(x, t, conds);
        x = sched.step(eps_hat, t, t_prev, x, &rng);
    }

    SampleResult out;
    DecodeResult dec = decode(x, layout, stats, dopts);
    out.pattern = std::move(dec.pattern);
    out.dropped_panels = dec.dropped_panels;
    out.grid = std::move(x);
    return out;
}

// Pattern completion: the known panels occupy the leading panel blocks; their
// rows are re-noised to the current level and re-injected at every step, and
// restored exactly after the last step, so provided panels survive bit-exact.
inline SampleResult complete(TrainModel& model, const RunConfig& cfg, const NormStats& stats,
                             const Pattern& fragment, const ConditionBundle& conds, int n_steps,
                             std::uint64_t seed, const DecodeOptions& dopts = {}) {
    SchedulerConfig sc = cfg.scheduler;
    if (n_steps < 1 || n_steps > sc.total_steps)
        throw UsageError("complete: n_steps must be in [1, T]");
    sc.inference_steps = n_steps;
    const Scheduler sched(sc);
    const TokenLayout layout = cfg.token_layout();
    check_stats_layout(stats, layout);
    const std::size_t grid_len = static_cast<std::size_t>(layout.rows()) * layout.token_width();

    std::size_t known_rows = 0;
    std::vector<double> x0_known;
    if (!fragment.panels.empty()) {
        const TokenGrid frag = encode(fragment, layout, stats);
        known_rows = fragment.panels.size() * static_cast<std::size_t>(layout.max_edges);
        const std::size_t len = known_rows * static_cast<std::size_t>(layout.token_width());
        x0_known.assign(frag.values.begin(), frag.values.begin() + static_cast<std::ptrdiff_t>(len));
    }
    const std::size_t known_len = x0_known.size();

    Rng rng(Rng::mix(seed, "sample"));
    std::vector<double> x(grid_len);
    for (double& v : x) v = rng.normal();

    const auto& ts = sched.inference_timesteps();
    std::vector<double> eps_known(known_len), noised;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k];
        const int t_prev = k + 1 < ts.size() ? ts[k + 1] : -1;
        if (known_len > 0) {
            for (double& v : eps_known) v = rng.normal();
            sched.add_noise(x0_known, eps_known, t, noised);
            std::copy(noised.begin(), noised.end(), x.begin());
        }
        const std::vector<double> eps_hat = model.predict(x, t, conds);
        x = sched.step(eps_hat, t, t_prev, x, &rng);
    }
    if (known_len > 0) std::copy(x0_known.begin(), x0_known.end(), x.begin());

    SampleResult out;
    DecodeResult dec = decode(x, layout, stats, dopts);
    out.pattern = std::move(dec.pattern);
    out.dropped_panels = dec.dropped_panels;
    out.grid = std::move(x);
    return out;
}

}  // namespace gdk
