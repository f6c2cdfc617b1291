#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gdk/pattern.hpp"
#include "gdk/tokenizer.hpp"

namespace oracle {

// Rotation composed entry-by-entry from the closed-form product of
// Rx(a)Ry(b)Rz(c); written out independently of gdk::rotation_from_euler_deg.
inline std::array<double, 9> euler_xyz_matrix(double ax_deg, double ay_deg, double az_deg) {
    const double a = ax_deg * M_PI / 180.0, b = ay_deg * M_PI / 180.0, c = az_deg * M_PI / 180.0;
    const double cx = std::cos(a), sx = std::sin(a);
    const double cy = std::cos(b), sy = std::sin(b);
    const double cz = std::cos(c), sz = std::sin(c);
    return {cy * cz,
            -cy * sz,
            sy,
            cx * sz + sx * sy * cz,
            cx * cz - sx * sy * sz,
            -sx * cy,
            sx * sz - cx * sy * cz,
            sx * cz + cx * sy * sz,
            cx * cy};
}

inline gdk::Vec3 apply_mat(const std::array<double, 9>& m, gdk::Vec3 v) {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

// Brute-force cumulative product of (1 - beta_t) for a linear schedule.
inline std::vector<double> alpha_bar_table(int total, double beta_start, double beta_end) {
    std::vector<double> out(static_cast<std::size_t>(total));
    double prod = 1.0;
    for (int t = 0; t < total; ++t) {
        const double frac = total == 1 ? 0.0 : static_cast<double>(t) / (total - 1);
        prod *= 1.0 - (beta_start + (beta_end - beta_start) * frac);
        out[static_cast<std::size_t>(t)] = prod;
    }
    return out;
}

// Central finite differences of a scalar function of one coordinate.
inline double central_diff(const std::function<double()>& f, double& coord, double h = 1e-5) {
    const double orig = coord;
    coord = orig + h;
    const double fp = f();
    coord = orig - h;
    const double fm = f();
    coord = orig;
    return (fp - fm) / (2.0 * h);
}

// Dense single-head attention computed with plain loops.
inline std::vector<double> attention_reference(const std::vector<double>& q, int nq,
                                               const std::vector<double>& k,
                                               const std::vector<double>& v, int nk, int d,
                                               double scale) {
    std::vector<double> out(static_cast<std::size_t>(nq) * d, 0.0);
    for (int i = 0; i < nq; ++i) {
        std::vector<double> scores(static_cast<std::size_t>(nk));
        double mx = -1e300;
        for (int j = 0; j < nk; ++j) {
            double s = 0;
            for (int p = 0; p < d; ++p)
                s += q[static_cast<std::size_t>(i * d + p)] * k[static_cast<std::size_t>(j * d + p)];
            scores[static_cast<std::size_t>(j)] = s * scale;
            mx = std::max(mx, scores[static_cast<std::size_t>(j)]);
        }
        double z = 0;
        for (int j = 0; j < nk; ++j) {
            scores[static_cast<std::size_t>(j)] = std::exp(scores[static_cast<std::size_t>(j)] - mx);
            z += scores[static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < nk; ++j)
            for (int p = 0; p < d; ++p)
                out[static_cast<std::size_t>(i * d + p)] +=
                    scores[static_cast<std::size_t>(j)] / z * v[static_cast<std::size_t>(j * d + p)];
    }
    return out;
}

// All injective assignments of the smaller side into the larger one.
inline void enumerate_assignments(int n_pred, int n_gt,
                                  const std::function<void(const std::vector<int>&)>& visit) {
    // pairs[i] = gt index matched to pred i, or -1
    std::vector<int> gt_perm(static_cast<std::size_t>(n_gt));
    for (int j = 0; j < n_gt; ++j) gt_perm[static_cast<std::size_t>(j)] = j;
    if (n_pred <= n_gt) {
        std::sort(gt_perm.begin(), gt_perm.end());
        // choose which gt subset and order maps onto preds: permutations of gt taken n_pred at a time
        std::vector<int> assign(static_cast<std::size_t>(n_pred), -1);
        std::vector<bool> used(static_cast<std::size_t>(n_gt), false);
        std::function<void(int)> rec = [&](int i) {
            if (i == n_pred) {
                visit(assign);
                return;
            }
            for (int j = 0; j < n_gt; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                used[static_cast<std::size_t>(j)] = true;
                assign[static_cast<std::size_t>(i)] = j;
                rec(i + 1);
                used[static_cast<std::size_t>(j)] = false;
            }
        };
        rec(0);
    } else {
        // every gt gets a distinct pred; leftover preds unmatched
        std::vector<int> assign(static_cast<std::size_t>(n_pred), -1);
        std::vector<bool> used(static_cast<std::size_t>(n_pred), false);
        std::function<void(int)> rec = [&](int j) {
            if (j == n_gt) {
                visit(assign);
                return;
            }
            for (int i = 0; i < n_pred; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                used[static_cast<std::size_t>(i)] = true;
                assign[static_cast<std::size_t>(i)] = j;
                rec(j + 1);
                used[static_cast<std::size_t>(i)] = false;
                assign[static_cast<std::size_t>(i)] = -1;
            }
        };
        rec(0);
    }
}

// Placed 3D loop points of every panel.
inline std::vector<std::vector<gdk::Vec3>> placed_loops(const gdk::Pattern& p) {
    std::vector<std::vector<gdk::Vec3>> out;
    for (const auto& panel : p.panels) out.push_back(gdk::placed_loop_points(gdk::place_panel(panel)));
    return out;
}

// Geometric equality of two patterns in 3D placed space under a given panel
// mapping (pred panel i corresponds to gt panel map[i]).
inline bool patterns_equal_mapped(const gdk::Pattern& a, const gdk::Pattern& b,
                                  const std::vector<int>& map, double tol) {
    if (a.panels.size() != b.panels.size()) return false;
    const auto la = placed_loops(a);
    const auto lb = placed_loops(b);
    for (std::size_t i = 0; i < la.size(); ++i) {
        const auto& pa = la[i];
        const auto& pb = lb[static_cast<std::size_t>(map[i])];
        if (pa.size() != pb.size()) return false;
        for (std::size_t j = 0; j < pa.size(); ++j)
            if ((pa[j] - pb[j]).norm() > tol) return false;
    }
    std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> sa, sb;
    auto key = [](gdk::EdgeRef x, gdk::EdgeRef y) {
        if (y < x) std::swap(x, y);
        return std::make_pair(std::make_pair(x.panel, x.edge), std::make_pair(y.panel, y.edge));
    };
    for (const auto& s : a.stitches) {
        gdk::EdgeRef f = s.first, g = s.second;
        f.panel = map[static_cast<std::size_t>(f.panel)];
        g.panel = map[static_cast<std::size_t>(g.panel)];
        sa.insert(key(f, g));
    }
    for (const auto& s : b.stitches) sb.insert(key(s.first, s.second));
    return sa == sb;
}

// Finds the panel mapping by exact placed geometry, then checks equality.
inline bool patterns_equal_up_to_permutation(const gdk::Pattern& a, const gdk::Pattern& b,
                                             double tol) {
    if (a.panels.size() != b.panels.size()) return false;
    const auto la = placed_loops(a);
    const auto lb = placed_loops(b);
    std::vector<int> map(a.panels.size(), -1);
    std::vector<bool> used(b.panels.size(), false);
    for (std::size_t i = 0; i < la.size(); ++i) {
        for (std::size_t j = 0; j < lb.size(); ++j) {
            if (used[j] || la[i].size() != lb[j].size()) continue;
            bool ok = true;
            for (std::size_t v = 0; v < la[i].size() && ok; ++v)
                ok = (la[i][v] - lb[j][v]).norm() <= tol;
            if (ok) {
                map[i] = static_cast<int>(j);
                used[j] = true;
                break;
            }
        }
        if (map[i] < 0) return false;
    }
    return patterns_equal_mapped(a, b, map, tol);
}

inline bool patterns_equal(const gdk::Pattern& a, const gdk::Pattern& b, double tol) {
    std::vector<int> identity(a.panels.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
    return a.panels.size() == b.panels.size() && patterns_equal_mapped(a, b, identity, tol);
}

// Minimal XML well-formedness scan: balanced tags, quoted attributes.
inline bool xml_well_formed(const std::string& doc) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    const std::size_t n = doc.size();
    while (i < n) {
        if (doc[i] != '<') {
            ++i;
            continue;
        }
        std::size_t close = doc.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = doc.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;  // declaration/comment
        bool closing = tag[0] == '/';
        bool self_closing = tag.back() == '/';
        if (closing) tag = tag.substr(1);
        if (self_closing) tag.pop_back();
        // quotes must be balanced
        int quotes = 0;
        for (char c : tag)
            if (c == '"') ++quotes;
        if (quotes % 2 != 0) return false;
        std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
        if (name.empty()) return false;
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

// Unit square with CCW winding, first chord along +x, centered at origin.
inline gdk::Panel centered_square_panel(double half = 0.5) {
    gdk::Panel p;
    p.name = "square";
    p.edges.push_back({{-half, -half}, {}, std::nullopt});
    p.edges.push_back({{half, -half}, {}, std::nullopt});
    p.edges.push_back({{half, half}, {}, std::nullopt});
    p.edges.push_back({{-half, half}, {}, std::nullopt});
    return p;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("gdk_test_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace oracle
