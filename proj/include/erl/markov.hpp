#pragma once

// Finite-alphabet stationary Markov measures: validated transition matrices,
// stationary vectors, cylinder-word measures, path sampling, and a 1-cylinder
// mixing diagnostic.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "erl/rng.hpp"

namespace erl {

// A word is a finite symbol sequence over {0, .., m-1}. Admissibility (every
// consecutive pair an allowed transition) is enforced where words enter the
// library: word_measure errors on inadmissible input, CylinderUnion
// canonicalization rejects inadmissible words.
using Word = std::vector<int>;

inline std::string word_to_string(const Word& w) {
    std::string s;
    s.reserve(w.size());
    for (int a : w) {
        if (a < 0 || a > 9)
            throw std::invalid_argument("word_to_string: only single-digit symbols serializable");
        s.push_back(static_cast<char>('0' + a));
    }
    return s;
}

inline Word word_from_string(const std::string& s) {
    Word w;
    w.reserve(s.size());
    for (char c : s) {
        if (c < '0' || c > '9')
            throw std::invalid_argument("word_from_string: non-digit symbol in \"" + s + "\"");
        w.push_back(c - '0');
    }
    return w;
}

namespace detail {

// Iterative Tarjan SCC. Returns component index per node; components come out
// in reverse topological order (every edge goes from equal-or-higher to lower
// component id), which the spectral machinery relies on.
inline std::vector<int> strongly_connected_components(
    const std::vector<std::vector<int>>& adj, int& scc_count) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int next_index = 0;
    scc_count = 0;

    struct Frame { int v; std::size_t child; };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < adj[f.v].size()) {
                int w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                const int v = f.v;
                if (low[v] == index[v]) {
                    for (;;) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = scc_count;
                        if (w == v) break;
                    }
                    ++scc_count;
                }
                call.pop_back();
                if (!call.empty()) {
                    int parent = call.back().v;
                    low[parent] = std::min(low[parent], low[v]);
                }
            }
        }
    }
    return comp;
}

} // namespace detail

class MarkovMeasure {
public:
    // P row-stochastic, irreducible, aperiodic. Stationary vector computed
    // (dense solve for m <= 64, power iteration at 1e-14 beyond).
    static MarkovMeasure from_transitions(std::vector<std::vector<double>> P) {
        MarkovMeasure mu(std::move(P));
        mu.pi_ = mu.compute_stationary();
        mu.finalize();
        return mu;
    }

    // As above but with a caller-supplied stationary vector, validated against
    // pi P = pi at 1e-8 and rejected on mismatch.
    static MarkovMeasure with_stationary(std::vector<std::vector<double>> P,
                                         std::vector<double> pi) {
        MarkovMeasure mu(std::move(P));
        if (pi.size() != mu.P_.size())
            throw std::invalid_argument("stationary vector size mismatch");
        double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-8)
            throw std::invalid_argument("stationary vector does not sum to 1");
        for (double v : pi)
            if (v < 0.0) throw std::invalid_argument("stationary vector has negative entry");
        const int m = mu.alphabet_size_raw();
        for (int b = 0; b < m; ++b) {
            double acc = 0.0;
            for (int a = 0; a < m; ++a) acc += pi[a] * mu.P_[a][b];
            if (std::abs(acc - pi[b]) > 1e-8)
                throw std::invalid_argument("supplied stationary vector fails pi P = pi at 1e-8");
        }
        mu.pi_ = std::move(pi);
        mu.finalize();
        return mu;
    }

    // Bernoulli measure: identical rows p.
    static MarkovMeasure bernoulli(const std::vector<double>& p) {
        std::vector<std::vector<double>> P(p.size(), p);
        return from_transitions(std::move(P));
    }

    // Uniform full m-shift.
    static MarkovMeasure uniform(int m) {
        if (m < 1) throw std::invalid_argument("uniform: alphabet size must be >= 1");
        return bernoulli(std::vector<double>(m, 1.0 / m));
    }

    int alphabet_size() const { return static_cast<int>(P_.size()); }
    double transition(int a, int b) const { return P_[a][b]; }
    double stationary(int a) const { return pi_[a]; }
    const std::vector<double>& stationary_vector() const { return pi_; }
    bool allowed(int a, int b) const { return P_[a][b] > 0.0; }
    const std::vector<int>& successors(int a) const { return succ_[a]; }

    bool is_admissible(const Word& w) const {
        if (w.empty()) return false;
        for (int a : w)
            if (a < 0 || a >= alphabet_size()) return false;
        for (std::size_t i = 0; i + 1 < w.size(); ++i)
            if (!allowed(w[i], w[i + 1])) return false;
        return true;
    }

    // pi_{w0} * prod P_{wi, wi+1}; errors on inadmissible words (silent zeros
    // would mask caller bugs).
    double word_measure(const Word& w) const {
        if (w.empty()) throw std::invalid_argument("word_measure: empty word");
        if (!is_admissible(w))
            throw std::invalid_argument("word_measure: inadmissible word " + describe_word(w));
        double p = pi_[w[0]];
        for (std::size_t i = 0; i + 1 < w.size(); ++i) p *= P_[w[i]][w[i + 1]];
        return p;
    }

    // max_{a,b} |(P^k)_{ab} - pi_b| / pi_b, a psi-type coefficient at
    // 1-cylinder resolution.
    double mixing_proxy(int k) const {
        if (k < 1) throw std::invalid_argument("mixing_proxy: k must be >= 1");
        const int m = alphabet_size();
        Eigen::MatrixXd P(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) P(a, b) = P_[a][b];
        Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(m, m);
        Eigen::MatrixXd base = P;
        int e = k;
        while (e > 0) {
            if (e & 1) Pk = Pk * base;
            base = base * base;
            e >>= 1;
        }
        double worst = 0.0;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                worst = std::max(worst, std::abs(Pk(a, b) - pi_[b]) / pi_[b]);
        return worst;
    }

    static MarkovMeasure from_json(const nlohmann::json& doc) {
        if (!doc.contains("alphabet_size") || !doc.contains("transitions"))
            throw std::invalid_argument("measure JSON needs alphabet_size and transitions");
        int m = doc.at("alphabet_size").get<int>();
        auto P = doc.at("transitions").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(P.size()) != m)
            throw std::invalid_argument("measure JSON: transitions row count != alphabet_size");
        if (doc.contains("stationary"))
            return with_stationary(std::move(P), doc.at("stationary").get<std::vector<double>>());
        return from_transitions(std::move(P));
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"alphabet_size", alphabet_size()},
                              {"transitions", P_},
                              {"stationary", pi_}};
    }

private:
    explicit MarkovMeasure(std::vector<std::vector<double>> P) : P_(std::move(P)) {
        const int m = alphabet_size_raw();
        if (m == 0) throw std::invalid_argument("empty transition matrix");
        for (int a = 0; a < m; ++a) {
            if (static_cast<int>(P_[a].size()) != m)
                throw std::invalid_argument("transition matrix not square");
            double row = 0.0;
            for (double v : P_[a]) {
                if (v < 0.0) throw std::invalid_argument("negative transition probability");
                row += v;
            }
            if (std::abs(row - 1.0) > 1e-12)
                throw std::invalid_argument("row " + std::to_string(a) +
                                            " not stochastic (sum " + std::to_string(row) + ")");
        }
        check_irreducible_aperiodic();
    }

    int alphabet_size_raw() const { return static_cast<int>(P_.size()); }

    std::string describe_word(const Word& w) const {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
        os << ")";
        return os.str();
    }

    void check_irreducible_aperiodic() const {
        const int m = alphabet_size_raw();
        std::vector<std::vector<int>> adj(m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                if (P_[a][b] > 0.0) adj[a].push_back(b);

        // Irreducibility: single SCC. Tarjan gives the failing component for
        // the error message.
        int scc_count = 0;
        std::vector<int> comp = detail::strongly_connected_components(adj, scc_count);
        if (scc_count != 1) {
            // Report the members of one non-trivial failing component (pick
            // component of state 0 for determinism).
            std::ostringstream os;
            os << "chain is reducible (" << scc_count << " strongly connected components); "
               << "component of state 0 = {";
            bool first = true;
            for (int v = 0; v < m; ++v)
                if (comp[v] == comp[0]) {
                    os << (first ? "" : ",") << v;
                    first = false;
                }
            os << "}";
            throw std::invalid_argument(os.str());
        }

        // Aperiodicity: gcd over edges of level[u] + 1 - level[v] from a BFS.
        std::vector<int> level(m, -1);
        std::vector<int> queue{0};
        level[0] = 0;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int u = queue[h];
            for (int v : adj[u])
                if (level[v] == -1) {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
        }
        int g = 0;
        for (int u = 0; u < m; ++u)
            for (int v : adj[u]) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
        if (g != 1)
            throw std::invalid_argument("chain is periodic with period " + std::to_string(g));
    }

    std::vector<double> compute_stationary() const {
        const int m = alphabet_size_raw();
        if (m <= 64) {
            Eigen::MatrixXd A(m, m);
            Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
            // Rows 1..m-1: (P^T - I) x = 0; row 0 replaced by sum(x) = 1.
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c)
                    A(r, c) = P_[c][r] - (r == c ? 1.0 : 0.0);
            for (int c = 0; c < m; ++c) A(0, c) = 1.0;
            b(0) = 1.0;
            Eigen::VectorXd x = A.partialPivLu().solve(b);
            std::vector<double> pi(m);
            for (int a = 0; a < m; ++a) pi[a] = std::max(0.0, x(a));
            double s = std::accumulate(pi.begin(), pi.end(), 0.0);
            for (double& v : pi) v /= s;
            return pi;
        }
        std::vector<double> pi(m, 1.0 / m), nxt(m);
        for (int it = 0; it < 200000; ++it) {
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (int a = 0; a < m; ++a) {
                const double w = pi[a];
                if (w == 0.0) continue;
                for (int b : succ_raw(a)) nxt[b] += w * P_[a][b];
            }
            double diff = 0.0;
            for (int a = 0; a < m; ++a) diff = std::max(diff, std::abs(nxt[a] - pi[a]));
            pi.swap(nxt);
            if (diff < 1e-14) break;
        }
        return pi;
    }

    std::vector<int> succ_raw(int a) const {
        std::vector<int> s;
        for (int b = 0; b < alphabet_size_raw(); ++b)
            if (P_[a][b] > 0.0) s.push_back(b);
        return s;
    }

    void finalize() {
        const int m = alphabet_size_raw();
        succ_.assign(m, {});
        for (int a = 0; a < m; ++a) succ_[a] = succ_raw(a);
        for (int a = 0; a < m; ++a)
            if (pi_[a] <= 0.0)
                throw std::invalid_argument("stationary vector not strictly positive");
    }

    std::vector<std::vector<double>> P_;
    std::vector<double> pi_;
    std::vector<std::vector<int>> succ_;
};

// Stationary path sampler. Single-owner; parallelism uses distinct
// stream_index values, never a shared sampler.
class PathSampler {
public:
    PathSampler(MarkovMeasure measure, std::uint64_t seed, std::uint64_t stream_index = 0)
        : mu_(std::move(measure)),
          rng_(SplitMix64::for_stream(seed, stream_index)) {}

    const MarkovMeasure& measure() const { return mu_; }

    // First symbol from pi, subsequent symbols from the transition rows.
    int next_symbol() {
        if (current_ < 0) {
            current_ = draw(mu_.stationary_vector());
        } else {
            const int m = mu_.alphabet_size();
            row_.resize(m);
            for (int b = 0; b < m; ++b) row_[b] = mu_.transition(current_, b);
            current_ = draw(row_);
        }
        return current_;
    }

    Word sample_path(int length) {
        if (length < 1) throw std::invalid_argument("sample_path: length must be >= 1");
        Word w(length);
        for (int i = 0; i < length; ++i) w[i] = next_symbol();
        return w;
    }

    void reset() { current_ = -1; }

private:
    int draw(const std::vector<double>& weights) {
        double u = rng_.uniform();
        double acc = 0.0;
        const int m = static_cast<int>(weights.size());
        for (int b = 0; b < m; ++b) {
            acc += weights[b];
            if (u < acc) return b;
        }
        for (int b = m - 1; b >= 0; --b)
            if (weights[b] > 0.0) return b;
        return m - 1;
    }

    MarkovMeasure mu_;
    SplitMix64 rng_;
    int current_ = -1;
    std::vector<double> row_;
};

inline std::vector<double> stationary_from_transitions(std::vector<std::vector<double>> P) {
    return MarkovMeasure::from_transitions(std::move(P)).stationary_vector();
}

inline double word_measure(const MarkovMeasure& mu, const Word& w) { return mu.word_measure(w); }
inline double mixing_proxy(const MarkovMeasure& mu, int k) { return mu.mixing_proxy(k); }
inline Word sample_path(PathSampler& s, int length) { return s.sample_path(length); }

} // namespace erl
