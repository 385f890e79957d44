#pragma once

// Sliding-window automaton machinery shared by the escape and cluster
// engines. States are admissible length-(n-1) histories (length-1 for depth-1
// holes); appending a symbol either survives (window outside the hole) or is
// marked as an entry. Spectral radii are computed per strongly connected
// component with shifted power iteration, and tail slopes are compensated for
// the Jordan degree read off the condensation DAG.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "erl/cylinder.hpp"
#include "erl/markov.hpp"

namespace erl::detail {

constexpr std::size_t kDefaultStateBudget = 2'000'000;

// Pack a word as a big-endian base-m integer; suffix/append arithmetic stays
// O(1). Depths used here keep ids far below 2^63.
inline std::uint64_t pack_word(const Word& w, int m) {
    std::uint64_t id = 0;
    for (int a : w) id = id * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(a);
    return id;
}

struct WindowAutomaton {
    int hist_len = 0;         // state word length
    int hole_depth = 0;       // n
    std::uint64_t suffix_mod = 0; // m^(hist_len-? ) see build
    std::vector<Word> states; // sorted admissible hist_len-words

    // CSR arcs; every admissible continuation appears exactly once, flagged
    // as entering when the completed window lies in the hole.
    struct Arc {
        int to = 0;
        double p = 0.0;
        bool enters = false;
    };
    std::vector<Arc> arcs;
    std::vector<std::size_t> arc_begin; // size states+1

    std::vector<double> start_unconditional; // stationary mass per state
    std::vector<double> start_conditional;   // normalized hole mass per state
    double hole_measure = 0.0;

    std::size_t state_count() const { return states.size(); }
};

// Enumerate admissible words of a given length in lexicographic order.
inline std::vector<Word> admissible_words(const MarkovMeasure& mu, int length,
                                          std::size_t budget = kDefaultStateBudget) {
    std::vector<Word> out;
    const int m = mu.alphabet_size();
    Word cur;
    struct Level { std::size_t pos; };
    std::vector<Level> stack;
    for (int a0 = 0; a0 < m; ++a0) {
        cur.assign(1, a0);
        if (length == 1) {
            out.push_back(cur);
            continue;
        }
        stack.assign(1, {0});
        while (!stack.empty()) {
            Level& top = stack.back();
            const std::vector<int>& succ = mu.successors(cur.back());
            if (top.pos < succ.size()) {
                int a = succ[top.pos++];
                cur.push_back(a);
                if (static_cast<int>(cur.size()) == length) {
                    out.push_back(cur);
                    if (out.size() > budget)
                        throw std::runtime_error(
                            "state budget exceeded (" + std::to_string(budget) +
                            "); use Monte Carlo for this hole");
                    cur.pop_back();
                } else {
                    stack.push_back({0});
                }
            } else {
                stack.pop_back();
                cur.pop_back();
            }
        }
    }
    return out;
}

inline WindowAutomaton build_window_automaton(const MarkovMeasure& mu, const CylinderUnion& U,
                                              std::size_t budget = kDefaultStateBudget) {
    if (U.empty()) throw std::invalid_argument("window automaton: empty hole");
    const int m = mu.alphabet_size();
    const int n = U.depth;
    WindowAutomaton A;
    A.hole_depth = n;
    A.hist_len = std::max(n - 1, 1);
    A.states = admissible_words(mu, A.hist_len, budget);

    // State lookup by packed id.
    std::vector<std::uint64_t> ids(A.states.size());
    for (std::size_t i = 0; i < A.states.size(); ++i) ids[i] = pack_word(A.states[i], m);
    auto state_index = [&](std::uint64_t id) {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        return static_cast<int>(it - ids.begin());
    };

    std::vector<std::uint64_t> hole_ids;
    hole_ids.reserve(U.words.size());
    for (const Word& w : U.words) hole_ids.push_back(pack_word(w, m));
    // words are sorted lexicographically at fixed length, so ids are sorted.
    auto in_hole = [&](std::uint64_t wid) {
        return std::binary_search(hole_ids.begin(), hole_ids.end(), wid);
    };

    const std::uint64_t hist_mod = [&] {
        std::uint64_t v = 1;
        for (int i = 0; i < A.hist_len - 1; ++i) v *= static_cast<std::uint64_t>(m);
        return v;
    }();
    A.suffix_mod = hist_mod;

    A.arc_begin.assign(A.states.size() + 1, 0);
    for (std::size_t s = 0; s < A.states.size(); ++s) {
        A.arc_begin[s] = A.arcs.size();
        const Word& h = A.states[s];
        const std::uint64_t hid = ids[s];
        for (int a : mu.successors(h.back())) {
            // New history drops the oldest symbol and appends a.
            std::uint64_t next_hid =
                (hid % hist_mod) * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(a);
            bool enters;
            if (n == 1) {
                enters = in_hole(static_cast<std::uint64_t>(a));
            } else {
                // Window = full old history plus a (length n).
                std::uint64_t wid = hid * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(a);
                enters = in_hole(wid);
            }
            A.arcs.push_back({state_index(next_hid), mu.transition(h.back(), a), enters});
        }
    }
    A.arc_begin[A.states.size()] = A.arcs.size();

    // Start vectors. Unconditional: stationary mass of each history word.
    A.start_unconditional.assign(A.states.size(), 0.0);
    for (std::size_t s = 0; s < A.states.size(); ++s)
        A.start_unconditional[s] = mu.word_measure(A.states[s]);

    // Conditional: mass mu(w)/mu(U) placed on the history suffix of each hole
    // word (the last max(n-1,1) symbols).
    A.start_conditional.assign(A.states.size(), 0.0);
    A.hole_measure = measure_of(mu, U);
    for (const Word& w : U.words) {
        Word suffix(w.end() - A.hist_len, w.end());
        A.start_conditional[state_index(pack_word(suffix, m))] += mu.word_measure(w) / A.hole_measure;
    }
    return A;
}

// One surviving step: mass moves along non-entering arcs only.
inline void survival_step(const WindowAutomaton& A, const std::vector<double>& in,
                          std::vector<double>& out) {
    out.assign(A.state_count(), 0.0);
    for (std::size_t s = 0; s < A.state_count(); ++s) {
        const double w = in[s];
        if (w == 0.0) continue;
        for (std::size_t k = A.arc_begin[s]; k < A.arc_begin[s + 1]; ++k) {
            const auto& arc = A.arcs[k];
            if (!arc.enters) out[arc.to] += w * arc.p;
        }
    }
}

// ---- Spectral structure of the surviving-arc matrix ----

struct SpectralInfo {
    double radius = 0.0;   // global spectral radius over reachable states
    int jordan_degree = 0; // longest chain of radius-attaining SCCs minus 1
    int scc_count = 0;
};

// Power iteration for the spectral radius of one SCC's surviving submatrix,
// shifted by +I so convergence is geometric even for periodic blocks.
inline double scc_radius(const WindowAutomaton& A, const std::vector<int>& members,
                         const std::vector<int>& local_index) {
    const std::size_t k = members.size();
    if (k == 1) {
        // Self-loop weight (sum of surviving arcs back to itself).
        double w = 0.0;
        int s = members[0];
        for (std::size_t e = A.arc_begin[s]; e < A.arc_begin[s + 1]; ++e)
            if (!A.arcs[e].enters && A.arcs[e].to == s) w += A.arcs[e].p;
        return w;
    }
    std::vector<double> v(k, 1.0 / static_cast<double>(k)), nxt(k);
    // Stop on the residual ||(M+I)v - total v||_1 <= tol * total: unlike a
    // successive-ratio test it decreases monotonically to the rounding floor
    // instead of jittering there, so the loop cannot stall at the cap. The
    // floor of the residual itself scales like eps * sqrt(k) * total.
    const double tol =
        std::max(1e-13, 16.0 * std::numeric_limits<double>::epsilon() *
                            std::sqrt(static_cast<double>(k)));
    double r = 0.0;
    for (int it = 0; it < 500000; ++it) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const int s = members[i];
            const double w = v[i];
            if (w == 0.0) continue;
            for (std::size_t e = A.arc_begin[s]; e < A.arc_begin[s + 1]; ++e) {
                const auto& arc = A.arcs[e];
                if (arc.enters) continue;
                int li = local_index[arc.to];
                if (li >= 0) nxt[li] += w * arc.p;
            }
        }
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            nxt[i] += v[i]; // +I shift
            total += nxt[i];
        }
        if (total == 0.0) return 0.0;
        double residual = 0.0;
        for (std::size_t i = 0; i < k; ++i) residual += std::abs(nxt[i] - total * v[i]);
        for (std::size_t i = 0; i < k; ++i) nxt[i] /= total;
        r = total - 1.0;
        v.swap(nxt);
        if (residual <= tol * total) break;
    }
    return std::max(0.0, r);
}

// Spectral radius and Jordan degree of the surviving dynamics restricted to
// states reachable from the support of `start` (pass empty to use all
// states).
inline SpectralInfo spectral_info(const WindowAutomaton& A, const std::vector<double>& start) {
    const std::size_t N = A.state_count();
    std::vector<char> reach(N, 0);
    if (start.empty()) {
        std::fill(reach.begin(), reach.end(), 1);
    } else {
        std::vector<int> queue;
        for (std::size_t s = 0; s < N; ++s)
            if (start[s] > 0.0) {
                reach[s] = 1;
                queue.push_back(static_cast<int>(s));
            }
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int s = queue[h];
            for (std::size_t e = A.arc_begin[s]; e < A.arc_begin[s + 1]; ++e) {
                const auto& arc = A.arcs[e];
                if (!arc.enters && !reach[arc.to]) {
                    reach[arc.to] = 1;
                    queue.push_back(arc.to);
                }
            }
        }
    }

    // Compact adjacency over reachable states, surviving arcs only.
    std::vector<int> compact(N, -1), members;
    for (std::size_t s = 0; s < N; ++s)
        if (reach[s]) {
            compact[s] = static_cast<int>(members.size());
            members.push_back(static_cast<int>(s));
        }
    std::vector<std::vector<int>> adj(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        int s = members[i];
        for (std::size_t e = A.arc_begin[s]; e < A.arc_begin[s + 1]; ++e) {
            const auto& arc = A.arcs[e];
            if (!arc.enters && compact[arc.to] >= 0) adj[i].push_back(compact[arc.to]);
        }
    }

    SpectralInfo info;
    if (members.empty()) return info;
    int scc_count = 0;
    std::vector<int> comp = strongly_connected_components(adj, scc_count);
    info.scc_count = scc_count;

    // Per-SCC radii.
    std::vector<std::vector<int>> scc_members(scc_count);
    for (std::size_t i = 0; i < members.size(); ++i)
        scc_members[comp[i]].push_back(members[i]);
    std::vector<int> local_index(N, -1);
    std::vector<double> radii(scc_count, 0.0);
    for (int c = 0; c < scc_count; ++c) {
        for (std::size_t i = 0; i < scc_members[c].size(); ++i)
            local_index[scc_members[c][i]] = static_cast<int>(i);
        radii[c] = scc_radius(A, scc_members[c], local_index);
        for (int s : scc_members[c]) local_index[s] = -1;
    }
    info.radius = *std::max_element(radii.begin(), radii.end());

    if (info.radius <= 0.0) return info;

    // Jordan degree: longest chain of radius-attaining SCCs in the
    // condensation. Tarjan numbers components in reverse topological order,
    // so iterate components downward (edges go from higher to lower ids).
    const double tol = info.radius * (1.0 - 1e-12);
    std::vector<int> chain(scc_count, 0);
    std::vector<std::vector<int>> comp_succ(scc_count);
    for (std::size_t i = 0; i < members.size(); ++i)
        for (int j : adj[i])
            if (comp[i] != comp[j]) comp_succ[comp[i]].push_back(comp[j]);
    // Tarjan ids are reverse-topological: edges run from higher component id
    // to lower, so a high-to-low sweep sees predecessors first.
    int best_chain = 0;
    for (int c = scc_count - 1; c >= 0; --c) {
        int incoming = chain[c];
        chain[c] = incoming + (radii[c] >= tol ? 1 : 0);
        best_chain = std::max(best_chain, chain[c]);
        for (int d : comp_succ[c]) chain[d] = std::max(chain[d], chain[c]);
    }
    info.jordan_degree = std::max(0, best_chain - 1);
    return info;
}

// Tail decay rate of sum(M^t start) with Jordan compensation: one-step mass
// ratios l_t satisfy l_t = r (1 + d/t + O(1/t^2)), so r_hat(t) =
// l_t ((t-1)/t)^d followed by Richardson extrapolation in 1/t^2 converges
// fast enough for the 1e-8 cross-check gate.
inline double tail_slope_rate(const WindowAutomaton& A, std::vector<double> mass, int jordan_degree,
                              int t_max = 4096) {
    std::vector<double> next;
    double prev_estimate = std::numeric_limits<double>::quiet_NaN();
    double estimate = std::numeric_limits<double>::quiet_NaN();
    int t = 0;
    int checkpoint = 64;
    double total = 0.0;
    for (double v : mass) total += v;
    if (total <= 0.0) return std::numeric_limits<double>::infinity();
    for (double& v : mass) v /= total;

    std::vector<double> rhat_at; // compensated ratios at t = 64, 128, 256, ...
    while (t < t_max) {
        survival_step(A, mass, next);
        ++t;
        double s = 0.0;
        for (double v : next) s += v;
        if (s <= 0.0) return std::numeric_limits<double>::infinity();
        for (double& v : next) v /= s;
        mass.swap(next);
        if (t == checkpoint) {
            double comp = s; // s is the one-step ratio at time t
            if (jordan_degree > 0)
                comp *= std::pow((static_cast<double>(t) - 1.0) / static_cast<double>(t),
                                 jordan_degree);
            rhat_at.push_back(comp);
            const std::size_t k = rhat_at.size();
            if (k >= 2) {
                // Richardson in 1/t^2 between t and t/2.
                double tt = static_cast<double>(t);
                double th = tt / 2.0;
                double r2 = (tt * tt * rhat_at[k - 1] - th * th * rhat_at[k - 2]) /
                            (tt * tt - th * th);
                prev_estimate = estimate;
                estimate = r2;
                if (!std::isnan(prev_estimate) &&
                    std::abs(estimate - prev_estimate) < 1e-12 * std::max(1.0, estimate))
                    break;
            }
            checkpoint *= 2;
        }
    }
    double r = std::isnan(estimate) ? (rhat_at.empty() ? 0.0 : rhat_at.back()) : estimate;
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(r);
}

} // namespace erl::detail
