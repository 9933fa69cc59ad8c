#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "synmine/embedding.hpp"
#include "synmine/rng.hpp"

namespace synmine {

struct Clustering {
    int k = 0;
    int dim = 0;
    std::vector<std::string> labels;   // clustered function labels
    std::vector<int> assignment;       // parallel to labels, in [0, k)
    std::vector<double> centroids;     // k x dim, row-major
    double objective = 0.0;            // sum of squared distances
    int iterations = 0;

    std::map<std::string, int> as_map() const {
        std::map<std::string, int> m;
        for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]] = assignment[i];
        return m;
    }
};

namespace detail {

inline void normalize_rows(std::vector<double>& rows, std::size_t n, int dim) {
    for (std::size_t i = 0; i < n; ++i) {
        double* r = rows.data() + i * dim;
        double norm = 0.0;
        for (int d = 0; d < dim; ++d) norm += r[d] * r[d];
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (int d = 0; d < dim; ++d) r[d] /= norm;
    }
}

inline double sqdist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        double t = a[d] - b[d];
        s += t * t;
    }
    return s;
}

} // namespace detail

// Lloyd iterations on length-normalized vectors, seeded k-means++ start.
// Centroids are re-normalized after each update, so squared Euclidean
// assignment agrees with the cosine ranking used for neighbor queries.
// Ties go to the lowest cluster id; an emptied cluster is reseeded with the
// point farthest from its assigned centroid.
inline Clustering kmeans(const Embedding& e, const std::vector<std::string>& function_labels, int k,
                         int max_iters, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

    Clustering c;
    c.k = k;
    c.dim = e.dim;
    std::vector<double> points;
    for (const auto& name : function_labels) {
        int i = e.lookup(name);
        if (i < 0) continue;
        c.labels.push_back(name);
        auto row = e.in(i);
        points.insert(points.end(), row.begin(), row.end());
    }
    std::size_t n = c.labels.size();
    if (n < static_cast<std::size_t>(k))
        throw std::invalid_argument("K exceeds the number of function labels in the vocabulary");
    detail::normalize_rows(points, n, c.dim);

    // k-means++ seeding
    Rng rng(derive_seed(seed, "kmeans", 0));
    std::vector<std::size_t> centers;
    centers.push_back(rng.next_below(n));
    std::vector<double> dist(n, 0.0);
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (auto ci : centers)
                best = std::min(best, detail::sqdist(points.data() + i * c.dim,
                                                     points.data() + ci * c.dim, c.dim));
            dist[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.next_below(n);
        } else {
            double r = rng.next_double() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
    }
    c.centroids.assign(static_cast<std::size_t>(k) * c.dim, 0.0);
    for (int j = 0; j < k; ++j)
        std::copy_n(points.data() + centers[j] * c.dim, c.dim, c.centroids.data() + std::size_t(j) * c.dim);

    c.assignment.assign(n, -1);
    std::vector<double> ptdist(n, 0.0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        c.objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bestd = std::numeric_limits<double>::max();
            for (int j = 0; j < k; ++j) {
                double d = detail::sqdist(points.data() + i * c.dim,
                                          c.centroids.data() + std::size_t(j) * c.dim, c.dim);
                if (d < bestd) {
                    bestd = d;
                    best = j;
                }
            }
            if (c.assignment[i] != best) {
                c.assignment[i] = best;
                changed = true;
            }
            ptdist[i] = bestd;
            c.objective += bestd;
        }
        c.iterations = iter + 1;
        if (!changed && iter > 0) break;

        std::vector<double> sums(static_cast<std::size_t>(k) * c.dim, 0.0);
        std::vector<int> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sizes[c.assignment[i]]++;
            double* s = sums.data() + std::size_t(c.assignment[i]) * c.dim;
            const double* pt = points.data() + i * c.dim;
            for (int d = 0; d < c.dim; ++d) s[d] += pt[d];
        }
        for (int j = 0; j < k; ++j) {
            if (sizes[j] == 0) {
                // reseed from the point farthest from its centroid
                std::size_t far = 0;
                for (std::size_t i = 1; i < n; ++i)
                    if (ptdist[i] > ptdist[far]) far = i;
                std::copy_n(points.data() + far * c.dim, c.dim, sums.data() + std::size_t(j) * c.dim);
                sizes[j] = 1;
                ptdist[far] = 0.0;
            }
            double* ctr = c.centroids.data() + std::size_t(j) * c.dim;
            for (int d = 0; d < c.dim; ++d) ctr[d] = sums[std::size_t(j) * c.dim + d] / sizes[j];
        }
        detail::normalize_rows(c.centroids, k, c.dim);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Partition function

struct PartitionFunction {
    std::map<std::string, std::string> representative; // member -> representative

    // Total: unknown functions map to themselves.
    const std::string& operator()(const std::string& f) const {
        auto it = representative.find(f);
        return it == representative.end() ? f : it->second;
    }

    std::set<std::string> apply(const std::set<std::string>& fs) const {
        std::set<std::string> out;
        for (const auto& f : fs) out.insert((*this)(f));
        return out;
    }

    std::map<std::string, std::vector<std::string>> classes() const {
        std::map<std::string, std::vector<std::string>> by_rep;
        for (const auto& [f, r] : representative) by_rep[r].push_back(f);
        return by_rep;
    }

    static PartitionFunction identity() { return {}; }
};

// Representative = lexicographically least member of the cluster.
inline PartitionFunction build_partition(const Clustering& c) {
    std::vector<std::string> rep(c.k);
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
        std::string& r = rep[c.assignment[i]];
        if (r.empty() || c.labels[i] < r) r = c.labels[i];
    }
    PartitionFunction pi;
    for (std::size_t i = 0; i < c.labels.size(); ++i)
        pi.representative[c.labels[i]] = rep[c.assignment[i]];
    return pi;
}

// ---------------------------------------------------------------------------
// Gold standard

struct GoldStandard {
    std::set<std::pair<std::string, std::string>> must;    // normalized (a < b)
    std::set<std::pair<std::string, std::string>> mustnot;

    void add_must(std::string a, std::string b) {
        if (b < a) std::swap(a, b);
        must.emplace(std::move(a), std::move(b));
    }
    void add_mustnot(std::string a, std::string b) {
        if (b < a) std::swap(a, b);
        mustnot.emplace(std::move(a), std::move(b));
    }

    // Equivalence classes: connected components of the must relation.
    std::vector<std::set<std::string>> classes() const {
        std::map<std::string, std::string> parent;
        std::function<std::string(std::string)> find = [&](std::string x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        for (const auto& [a, b] : must) {
            if (!parent.count(a)) parent[a] = a;
            if (!parent.count(b)) parent[b] = b;
            std::string ra = find(a), rb = find(b);
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
        std::map<std::string, std::set<std::string>> comp;
        for (const auto& [x, _] : parent) comp[find(x)].insert(x);
        std::vector<std::set<std::string>> out;
        for (auto& [root, members] : comp) out.push_back(std::move(members));
        return out;
    }

    // No must-not pair may fall inside one must class.
    std::vector<std::string> consistency_errors() const {
        std::vector<std::string> errs;
        auto cls = classes();
        for (const auto& [a, b] : mustnot)
            for (const auto& c : cls)
                if (c.count(a) && c.count(b))
                    errs.push_back("mustnot pair (" + a + ", " + b + ") falls inside one must class");
        return errs;
    }
};

struct GoldClassMetrics {
    std::set<std::string> members;
    int best_cluster = -1;
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

struct GoldMetrics {
    std::vector<GoldClassMetrics> per_class;
    double weighted_f = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
};

// For each gold class, the best F over clusters; the overall score is the
// class-size weighted mean. Class members missing from the clustering count
// against recall because |L_j| stays in the denominator.
inline GoldMetrics evaluate_gold(const Clustering& c, const GoldStandard& gold) {
    auto errs = gold.consistency_errors();
    if (!errs.empty()) throw std::invalid_argument("inconsistent gold standard: " + errs.front());

    std::vector<std::set<std::string>> clusters(c.k);
    for (std::size_t i = 0; i < c.labels.size(); ++i) clusters[c.assignment[i]].insert(c.labels[i]);

    GoldMetrics m;
    std::size_t total = 0;
    for (const auto& cls : gold.classes()) {
        GoldClassMetrics row;
        row.members = cls;
        for (int j = 0; j < c.k; ++j) {
            if (clusters[j].empty()) continue;
            std::size_t inter = 0;
            for (const auto& f : cls) inter += clusters[j].count(f);
            double p = static_cast<double>(inter) / clusters[j].size();
            double r = static_cast<double>(inter) / cls.size();
            double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
            if (f1 > row.f) {
                row.f = f1;
                row.precision = p;
                row.recall = r;
                row.best_cluster = j;
            }
        }
        total += cls.size();
        m.per_class.push_back(std::move(row));
    }
    for (const auto& row : m.per_class) {
        double w = static_cast<double>(row.members.size()) / total;
        m.weighted_f += w * row.f;
        m.weighted_precision += w * row.precision;
        m.weighted_recall += w * row.recall;
    }
    return m;
}

// ---------------------------------------------------------------------------
// File formats

inline void write_clusters(const Clustering& c, std::ostream& os) {
    std::vector<std::pair<int, std::string>> rows;
    for (std::size_t i = 0; i < c.labels.size(); ++i) rows.emplace_back(c.assignment[i], c.labels[i]);
    std::sort(rows.begin(), rows.end());
    for (const auto& [id, f] : rows) os << id << '\t' << f << '\n';
}

inline Clustering read_clusters(std::istream& is) {
    Clustering c;
    std::string line;
    int maxid = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::runtime_error("malformed clusters file line: " + line);
        int id = std::stoi(line.substr(0, tab));
        c.labels.push_back(line.substr(tab + 1));
        c.assignment.push_back(id);
        maxid = std::max(maxid, id);
    }
    c.k = maxid + 1;
    return c;
}

inline void write_partition(const PartitionFunction& pi, std::ostream& os) {
    for (const auto& [f, r] : pi.representative) os << f << '\t' << r << '\n';
}

inline PartitionFunction read_partition(std::istream& is) {
    PartitionFunction pi;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::runtime_error("malformed partition file line: " + line);
        pi.representative[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return pi;
}

inline GoldStandard read_gold(std::istream& is) {
    GoldStandard g;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind, a, b;
        if (!(ls >> kind >> a >> b)) throw std::runtime_error("malformed gold line: " + line);
        if (kind == "must") g.add_must(a, b);
        else if (kind == "mustnot") g.add_mustnot(a, b);
        else throw std::runtime_error("unknown gold relation '" + kind + "'");
    }
    return g;
}

inline void write_gold(const GoldStandard& g, std::ostream& os) {
    for (const auto& [a, b] : g.must) os << "must " << a << ' ' << b << '\n';
    for (const auto& [a, b] : g.mustnot) os << "mustnot " << a << ' ' << b << '\n';
}

} // namespace synmine
