#pragma once

#include <cmath>
#include <vector>

#include "gdk/rng.hpp"

namespace gdk {

struct SchedulerConfig {
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    int inference_steps = 50;
};

// Linear-beta DDPM tables plus spaced inference timesteps.
class Scheduler {
public:
    explicit Scheduler(const SchedulerConfig& cfg) : cfg_(cfg) {
        if (cfg.total_steps < 1) throw UsageError("scheduler: total_steps must be >= 1");
        if (cfg.inference_steps < 1 || cfg.inference_steps > cfg.total_steps)
            throw UsageError("scheduler: inference_steps must be in [1, total_steps]");
        const int T = cfg.total_steps;
        betas_.resize(static_cast<std::size_t>(T));
        alphas_.resize(static_cast<std::size_t>(T));
        alpha_bars_.resize(static_cast<std::size_t>(T));
        double bar = 1.0;
        for (int t = 0; t < T; ++t) {
            const double frac = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
            betas_[static_cast<std::size_t>(t)] = cfg.beta_start + (cfg.beta_end - cfg.beta_start) * frac;
            alphas_[static_cast<std::size_t>(t)] = 1.0 - betas_[static_cast<std::size_t>(t)];
            bar *= alphas_[static_cast<std::size_t>(t)];
            alpha_bars_[static_cast<std::size_t>(t)] = bar;
        }
        timesteps_ = spaced_timesteps(T, cfg.inference_steps);
    }

    // Evenly spaced indices, descending: t_k = round((k+1) * T / n) - 1.
    static std::vector<int> spaced_timesteps(int total, int n) {
        std::vector<int> ts;
        ts.reserve(static_cast<std::size_t>(n));
        for (int k = n - 1; k >= 0; --k) {
            const double pos = static_cast<double>(k + 1) * total / n;
            int t = static_cast<int>(std::llround(pos)) - 1;
            t = std::max(0, std::min(total - 1, t));
            ts.push_back(t);
        }
        return ts;
    }

    const SchedulerConfig& config() const { return cfg_; }
    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }
    const std::vector<int>& inference_timesteps() const { return timesteps_; }

    double alpha_bar(int t) const {
        if (t < 0 || t >= cfg_.total_steps) throw UsageError("scheduler: timestep out of range");
        return alpha_bars_[static_cast<std::size_t>(t)];
    }

    // q(x_t | x_0): sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, elementwise.
    void add_noise(const std::vector<double>& x0, const std::vector<double>& eps, int t,
                   std::vector<double>& out) const {
        if (x0.size() != eps.size()) throw ShapeError("add_noise: shape mismatch");
        const double ab = alpha_bar(t);
        const double sa = std::sqrt(ab);
        const double se = std::sqrt(1.0 - ab);
        out.resize(x0.size());
        for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + se * eps[i];
    }

    std::vector<double> add_noise(const std::vector<double>& x0, const std::vector<double>& eps,
                                  int t) const {
        std::vector<double> out;
        add_noise(x0, eps, t, out);
        return out;
    }

    // One reverse step from t to t_prev (the next smaller inference timestep,
    // or -1 for the final step). The posterior is recomputed on the effective
    // (abar_t, abar_prev) pair so spaced schedules stay consistent. rng may be
    // null to drop the stochastic term.
    std::vector<double> step(const std::vector<double>& model_eps, int t, int t_prev,
                             const std::vector<double>& x_t, Rng* rng) const {
        if (model_eps.size() != x_t.size()) throw ShapeError("step: shape mismatch");
        for (double v : model_eps)
            if (!std::isfinite(v)) throw NumericError("step: non-finite predicted noise");
        for (double v : x_t)
            if (!std::isfinite(v)) throw NumericError("step: non-finite state");
        const double ab_t = alpha_bar(t);
        const double sa_t = std::sqrt(ab_t);
        const double se_t = std::sqrt(1.0 - ab_t);

        std::vector<double> x0_hat(x_t.size());
        for (std::size_t i = 0; i < x_t.size(); ++i) {
            double v = (x_t[i] - se_t * model_eps[i]) / sa_t;
            x0_hat[i] = std::max(-1.2, std::min(1.2, v));
        }
        if (t_prev < 0) return x0_hat;

        const double ab_prev = alpha_bar(t_prev);
        const double alpha_eff = ab_t / ab_prev;
        const double beta_eff = 1.0 - alpha_eff;
        const double coef_x0 = std::sqrt(ab_prev) * beta_eff / (1.0 - ab_t);
        const double coef_xt = std::sqrt(alpha_eff) * (1.0 - ab_prev) / (1.0 - ab_t);
        const double var = beta_eff * (1.0 - ab_prev) / (1.0 - ab_t);
        const double sigma = std::sqrt(std::max(0.0, var));

        std::vector<double> out(x_t.size());
        for (std::size_t i = 0; i < x_t.size(); ++i) {
            out[i] = coef_x0 * x0_hat[i] + coef_xt * x_t[i];
            if (rng) out[i] += sigma * rng->normal();
        }
        return out;
    }

private:
    SchedulerConfig cfg_;
    std::vector<double> betas_, alphas_, alpha_bars_;
    std::vector<int> timesteps_;
};

}  // namespace gdk
