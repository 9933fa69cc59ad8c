#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "synmine/rng.hpp"

namespace synmine {

struct TrainParams {
    int dim = 64;
    int window = 1;
    int epochs = 5;
    int negatives = 5;
    int min_count = 1;
    double alpha = 0.025;     // initial step size, linearly decayed
    double min_alpha = 1e-4;
    std::uint64_t seed = 1;
    bool deterministic = true;
    int workers = 1;
};

struct Embedding {
    int dim = 0;
    std::vector<std::string> vocab;      // count desc, then lexicographic
    std::vector<long long> counts;
    std::unordered_map<std::string, int> index;
    std::vector<double> in_vecs;         // vocab.size() x dim, row-major
    std::vector<double> out_vecs;
    TrainParams params;

    std::span<const double> in(int i) const { return {in_vecs.data() + std::size_t(i) * dim, std::size_t(dim)}; }
    std::span<double> in(int i) { return {in_vecs.data() + std::size_t(i) * dim, std::size_t(dim)}; }
    std::span<const double> out(int i) const { return {out_vecs.data() + std::size_t(i) * dim, std::size_t(dim)}; }
    std::span<double> out(int i) { return {out_vecs.data() + std::size_t(i) * dim, std::size_t(dim)}; }

    int lookup(const std::string& token) const {
        auto it = index.find(token);
        return it == index.end() ? -1 : it->second;
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = dot(a, b), aa = dot(a, a), bb = dot(b, b);
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct PairGradient {
    double loss;
    std::vector<double> grad_in;  // d loss / d context_in_vec
    std::vector<double> grad_out; // d loss / d center_out_vec
};

// Loss of one (center, context) pair under the negative-sampling objective:
// -log sigma(u.v) for a positive pair, -log sigma(-u.v) for a sampled
// negative, with u the center's output vector and v the context's input
// vector.
inline PairGradient pair_objective_gradient(std::span<const double> center_out_vec,
                                            std::span<const double> context_in_vec,
                                            bool is_negative) {
    if (center_out_vec.size() != context_in_vec.size())
        throw std::invalid_argument("pair_objective_gradient: vector lengths differ");
    double s = dot(center_out_vec, context_in_vec);
    double sig = sigmoid(s);
    double g = sig - (is_negative ? 0.0 : 1.0); // d loss / d s
    PairGradient r;
    r.loss = is_negative ? -std::log(std::max(1.0 - sig, 1e-300))
                         : -std::log(std::max(sig, 1e-300));
    r.grad_in.resize(context_in_vec.size());
    r.grad_out.resize(context_in_vec.size());
    for (std::size_t i = 0; i < context_in_vec.size(); ++i) {
        r.grad_in[i] = g * center_out_vec[i];
        r.grad_out[i] = g * context_in_vec[i];
    }
    return r;
}

namespace detail {

// Input vectors start at small uniform values derived from (seed, vocab row);
// output vectors start at zero, as in the reference word2vec implementation.
inline void init_vectors(Embedding& e, std::uint64_t seed) {
    std::size_t v = e.vocab.size();
    e.in_vecs.assign(v * e.dim, 0.0);
    e.out_vecs.assign(v * e.dim, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
        Rng rng(derive_seed(seed, e.vocab[i], 0));
        auto row = e.in(static_cast<int>(i));
        for (int d = 0; d < e.dim; ++d) row[d] = (rng.next_double() - 0.5) / e.dim;
    }
}

// Cumulative unigram^(3/4) table for negative sampling.
inline std::vector<double> noise_cdf(const std::vector<long long>& counts) {
    std::vector<double> cdf(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        acc += std::pow(static_cast<double>(counts[i]), 0.75);
        cdf[i] = acc;
    }
    return cdf;
}

inline int sample_noise(const std::vector<double>& cdf, Rng& rng) {
    double r = rng.next_double() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    if (it == cdf.end()) --it;
    return static_cast<int>(it - cdf.begin());
}

struct SgnsUpdater {
    Embedding& e;
    const std::vector<double>& cdf;
    int negatives;
    std::vector<double> scratch;

    // One skip-gram step for (center, context) plus sampled negatives.
    // Accumulates the context-vector update so all targets see the same
    // context vector, as in word2vec.
    void update(int center, int context, double lr, Rng& rng) {
        scratch.assign(e.dim, 0.0);
        auto ctx = e.in(context);
        for (int n = 0; n <= negatives; ++n) {
            int target;
            bool negative;
            if (n == 0) {
                target = center;
                negative = false;
            } else {
                target = sample_noise(cdf, rng);
                if (target == center) continue;
                negative = true;
            }
            auto out = e.out(target);
            double g = (negative ? 0.0 : 1.0) - sigmoid(dot(ctx, out));
            for (int d = 0; d < e.dim; ++d) {
                scratch[d] += g * lr * out[d];
                out[d] += g * lr * ctx[d];
            }
        }
        for (int d = 0; d < e.dim; ++d) ctx[d] += scratch[d];
    }
};

} // namespace detail

// Skip-gram with negative sampling over the walk corpus. The deterministic
// mode replays updates in corpus order under a single seeded stream; the
// parallel mode shards sentences across threads with unsynchronized updates
// and therefore does not promise reproducible vectors.
inline Embedding train(const std::vector<std::vector<std::string>>& sentences, TrainParams params) {
    if (params.dim < 1) throw std::invalid_argument("dim must be >= 1");
    if (params.window < 1) throw std::invalid_argument("window must be >= 1");
    if (params.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (params.min_count < 1) throw std::invalid_argument("min_count must be >= 1");
    if (params.negatives < 1) throw std::invalid_argument("negatives must be >= 1");

    std::unordered_map<std::string, long long> freq;
    for (const auto& s : sentences)
        for (const auto& t : s) freq[t]++;

    Embedding e;
    e.dim = params.dim;
    e.params = params;
    for (const auto& [tok, n] : freq)
        if (n >= params.min_count) e.vocab.push_back(tok);
    std::sort(e.vocab.begin(), e.vocab.end(), [&](const std::string& a, const std::string& b) {
        long long fa = freq[a], fb = freq[b];
        if (fa != fb) return fa > fb;
        return a < b;
    });
    if (e.vocab.empty()) throw std::invalid_argument("vocabulary is empty after min-count filtering");
    e.counts.reserve(e.vocab.size());
    for (std::size_t i = 0; i < e.vocab.size(); ++i) {
        e.counts.push_back(freq[e.vocab[i]]);
        e.index.emplace(e.vocab[i], static_cast<int>(i));
    }
    detail::init_vectors(e, params.seed);

    // Tokens below min_count are dropped from sentences entirely.
    std::vector<std::vector<int>> ids;
    ids.reserve(sentences.size());
    std::size_t total_positions = 0;
    for (const auto& s : sentences) {
        std::vector<int> row;
        for (const auto& t : s) {
            int i = e.lookup(t);
            if (i >= 0) row.push_back(i);
        }
        total_positions += row.size();
        ids.push_back(std::move(row));
    }
    if (total_positions == 0) return e;

    std::vector<double> cdf = detail::noise_cdf(e.counts);
    std::vector<std::size_t> positions_before(ids.size() + 1, 0);
    for (std::size_t i = 0; i < ids.size(); ++i)
        positions_before[i + 1] = positions_before[i] + ids[i].size();

    // The step size decays linearly with the number of positions processed,
    // from alpha down to min_alpha.
    auto train_range = [&](std::size_t begin, std::size_t end, std::uint64_t seed) {
        detail::SgnsUpdater upd{e, cdf, params.negatives, {}};
        Rng rng(seed);
        std::size_t range_positions = positions_before[end] - positions_before[begin];
        std::size_t range_work = std::max<std::size_t>(range_positions, 1) *
                                 static_cast<std::size_t>(params.epochs);
        std::size_t done = 0;
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            for (std::size_t si = begin; si < end; ++si) {
                const auto& sent = ids[si];
                for (std::size_t i = 0; i < sent.size(); ++i) {
                    double progress = static_cast<double>(done) / static_cast<double>(range_work);
                    double lr = std::max(params.min_alpha, params.alpha * (1.0 - std::min(progress, 1.0)));
                    int lo = static_cast<int>(i) - params.window;
                    int hi = static_cast<int>(i) + params.window;
                    for (int j = std::max(lo, 0); j <= std::min(hi, static_cast<int>(sent.size()) - 1); ++j) {
                        if (j == static_cast<int>(i)) continue;
                        upd.update(sent[i], sent[j], lr, rng);
                    }
                    ++done;
                }
            }
        }
    };

    if (params.deterministic || params.workers <= 1) {
        train_range(0, ids.size(), derive_seed(params.seed, "sgns", 0));
    } else {
        std::vector<std::thread> pool;
        std::size_t n = static_cast<std::size_t>(params.workers);
        std::size_t chunk = (ids.size() + n - 1) / n;
        for (std::size_t t = 0; t < n; ++t) {
            std::size_t begin = std::min(t * chunk, ids.size());
            std::size_t end = std::min(begin + chunk, ids.size());
            if (begin >= end) break;
            pool.emplace_back([&, begin, end, t] {
                train_range(begin, end, derive_seed(params.seed, "sgns", t + 1));
            });
        }
        for (auto& th : pool) th.join();
    }
    return e;
}

// Top-n labels by cosine similarity of input vectors, query excluded, ties
// broken lexicographically.
inline std::vector<std::pair<std::string, double>> nearest_to_vector(const Embedding& e,
                                                                     std::span<const double> target,
                                                                     int n,
                                                                     const std::vector<int>& exclude) {
    std::vector<std::pair<std::string, double>> scored;
    for (int i = 0; i < static_cast<int>(e.vocab.size()); ++i) {
        if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
        scored.emplace_back(e.vocab[i], cosine(target, e.in(i)));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (n >= 0 && scored.size() > static_cast<std::size_t>(n)) scored.resize(n);
    return scored;
}

inline std::vector<std::pair<std::string, double>> nearest(const Embedding& e, const std::string& query,
                                                           int n) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    int q = e.lookup(query);
    if (q < 0) throw std::invalid_argument("unknown label " + query);
    return nearest_to_vector(e, e.in(q), n, {q});
}

// Ranks labels by cosine to in(b) - in(a) + in(c), excluding a, b and c.
inline std::vector<std::pair<std::string, double>> analogy(const Embedding& e, const std::string& a,
                                                           const std::string& b, const std::string& c,
                                                           int n) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    int ia = e.lookup(a), ib = e.lookup(b), ic = e.lookup(c);
    if (ia < 0) throw std::invalid_argument("unknown label " + a);
    if (ib < 0) throw std::invalid_argument("unknown label " + b);
    if (ic < 0) throw std::invalid_argument("unknown label " + c);
    std::vector<double> target(e.dim);
    for (int d = 0; d < e.dim; ++d) target[d] = e.in_vecs[std::size_t(ib) * e.dim + d] -
                                                e.in_vecs[std::size_t(ia) * e.dim + d] +
                                                e.in_vecs[std::size_t(ic) * e.dim + d];
    return nearest_to_vector(e, target, n, {ia, ib, ic});
}

// ---------------------------------------------------------------------------
// Vector file: "V d" header, then one line per label with d floats. Floats are
// written with shortest round-trip formatting, so save/load is bit-exact.

inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

inline void write_vectors(const Embedding& e, std::ostream& os) {
    os << e.vocab.size() << ' ' << e.dim << '\n';
    for (std::size_t i = 0; i < e.vocab.size(); ++i) {
        os << e.vocab[i];
        auto row = e.in(static_cast<int>(i));
        for (int d = 0; d < e.dim; ++d) os << ' ' << format_double(row[d]);
        os << '\n';
    }
}

inline Embedding read_vectors(std::istream& is) {
    Embedding e;
    std::size_t v = 0;
    if (!(is >> v >> e.dim) || e.dim < 1) throw std::runtime_error("malformed vector file");
    e.vocab.resize(v);
    e.counts.assign(v, 0);
    e.in_vecs.assign(v * e.dim, 0.0);
    e.out_vecs.assign(v * e.dim, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
        if (!(is >> e.vocab[i])) throw std::runtime_error("malformed vector file");
        for (int d = 0; d < e.dim; ++d) {
            std::string tok;
            if (!(is >> tok)) throw std::runtime_error("malformed vector file");
            double val = 0.0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), val);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) throw std::runtime_error("malformed vector file");
            e.in_vecs[i * e.dim + d] = val;
        }
        e.index.emplace(e.vocab[i], static_cast<int>(i));
    }
    return e;
}

} // namespace synmine
