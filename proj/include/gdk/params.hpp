#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdk/io.hpp"
#include "gdk/rng.hpp"
#include "gdk/tensor.hpp"

namespace gdk {

// Flat, insertion-ordered registry of named weight buffers. The order is the
// checkpoint order, so registration must be deterministic.
template <class Real>
class ParamStore {
public:
    struct Entry {
        std::string name;
        int rows = 0, cols = 0;
        std::vector<Real> value;

        std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    };

    Entry& add(const std::string& name, int rows, int cols) {
        if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, rows, cols,
                            std::vector<Real>(static_cast<std::size_t>(rows) * cols, Real(0))});
        return entries_.back();
    }

    Entry& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw UsageError("unknown parameter: " + name);
        return entries_[it->second];
    }

    const Entry& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UsageError("unknown parameter: " + name);
        return entries_[it->second];
    }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.size();
        return n;
    }

    // Leaf tensor view of one parameter on the given tape.
    Tensor<Real> tensor(Tape<Real>& tape, const std::string& name, bool requires_grad = true) {
        Entry& e = at(name);
        return make_tensor(tape, e.rows, e.cols, e.value, requires_grad);
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Truncated normal init: redraw outside +/- 2 sigma.
template <class Real>
void init_trunc_normal(std::vector<Real>& buf, Rng& rng, double sigma) {
    for (Real& v : buf) {
        double x = rng.normal();
        while (std::abs(x) > 2.0) x = rng.normal();
        v = static_cast<Real>(x * sigma);
    }
}

// ---- checkpoint format ----
// "GDKCKPT\0", u32 version, u32 count, then per parameter:
// u32 name_len + bytes, u32 ndim (=2), u32 dims, f32 payload. Little-endian.

inline constexpr char kCkptMagic[8] = {'G', 'D', 'K', 'C', 'K', 'P', 'T', 0};

template <class Real>
void save_checkpoint(const ParamStore<Real>& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    write_bytes(out, kCkptMagic, 8);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(store.entries().size()));
    for (const auto& e : store.entries()) {
        write_u32(out, static_cast<std::uint32_t>(e.name.size()));
        write_bytes(out, e.name.data(), e.name.size());
        write_u32(out, 2);
        write_u32(out, static_cast<std::uint32_t>(e.rows));
        write_u32(out, static_cast<std::uint32_t>(e.cols));
        for (Real v : e.value) write_f32(out, static_cast<float>(v));
    }
}

// Loads into an already-registered store; names and shapes must match.
template <class Real>
void load_checkpoint(ParamStore<Real>& store, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
        throw ParseError("not a checkpoint file: " + path);
    if (read_u32(in) != 1) throw ParseError("unsupported checkpoint version");
    const std::uint32_t count = read_u32(in);
    if (count != store.entries().size())
        throw ValidationError("checkpoint parameter count does not match model");
    for (auto& e : store.entries()) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in || name != e.name)
            throw ValidationError("checkpoint/model mismatch at parameter '" + e.name + "'");
        if (read_u32(in) != 2) throw ParseError("unexpected parameter rank");
        const int rows = static_cast<int>(read_u32(in));
        const int cols = static_cast<int>(read_u32(in));
        if (rows != e.rows || cols != e.cols)
            throw ValidationError("checkpoint shape mismatch at parameter '" + e.name + "'");
        for (Real& v : e.value) v = static_cast<Real>(read_f32(in));
    }
}

// ---- AdamW ----

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.95;
    double beta2 = 0.999;
    double weight_decay = 1e-2;
    double eps = 1e-8;
};

// One decoupled-weight-decay update of a single buffer. step counts from 1.
template <class Real>
void adamw_step(std::vector<Real>& param, const std::vector<Real>& grad, std::vector<Real>& m,
                std::vector<Real>& v, long step, const AdamWConfig& cfg = {}) {
    if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size())
        throw ShapeError("adamw_step: buffer sizes differ");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g;
        const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g;
        m[i] = static_cast<Real>(mi);
        v[i] = static_cast<Real>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        double p = static_cast<double>(param[i]);
        p -= cfg.lr * cfg.weight_decay * p;
        p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        param[i] = static_cast<Real>(p);
    }
}

template <class Real>
class AdamW {
public:
    AdamW(ParamStore<Real>& store, const AdamWConfig& cfg = {}) : store_(&store), cfg_(cfg) {
        for (const auto& e : store.entries()) {
            m_.emplace_back(e.size(), Real(0));
            v_.emplace_back(e.size(), Real(0));
        }
    }

    // grads must be ordered like the store entries.
    void step(const std::vector<std::vector<Real>>& grads) {
        auto& entries = store_->entries();
        if (grads.size() != entries.size()) throw ShapeError("adamw: gradient count mismatch");
        ++step_;
        for (std::size_t i = 0; i < entries.size(); ++i)
            adamw_step(entries[i].value, grads[i], m_[i], v_[i], step_, cfg_);
    }

    long step_count() const { return step_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    ParamStore<Real>* store_;
    AdamWConfig cfg_;
    std::vector<std::vector<Real>> m_, v_;
    long step_ = 0;
};

}  // namespace gdk
