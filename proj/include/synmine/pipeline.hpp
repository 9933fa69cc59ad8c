#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "synmine/embedding.hpp"
#include "synmine/handlers.hpp"
#include "synmine/ir.hpp"
#include "synmine/lpds.hpp"
#include "synmine/mining.hpp"
#include "synmine/synonyms.hpp"
#include "synmine/walker.hpp"

namespace synmine {

class MissingFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    int gamma = 50;        // walks per label
    int walk_length = 50;  // k
    int dim = 64;
    int window = 1;
    std::uint64_t seed = 1;
    int epochs = 5;
    int negatives = 5;
    int min_count = 1;
    int k_clusters = 0;    // 0 = number of gold classes when a gold file is given
    int max_iters = 100;
    int min_support = 5;
    int workers = 1;
    bool deterministic = true;

    TrainParams train_params() const {
        TrainParams t;
        t.dim = dim;
        t.window = window;
        t.epochs = epochs;
        t.negatives = negatives;
        t.min_count = min_count;
        t.seed = seed;
        t.deterministic = deterministic;
        t.workers = workers;
        return t;
    }

    void check() const {
        auto need = [](bool ok, const char* what) {
            if (!ok) throw std::invalid_argument(std::string("parameter out of range: ") + what);
        };
        need(gamma >= 1, "gamma must be >= 1");
        need(walk_length >= 0, "walk-length must be >= 0");
        need(dim >= 1, "dim must be >= 1");
        need(window >= 1, "window must be >= 1");
        need(epochs >= 1, "epochs must be >= 1");
        need(negatives >= 1, "negatives must be >= 1");
        need(min_count >= 1, "min-count must be >= 1");
        need(k_clusters >= 0, "k-clusters must be >= 1 (0 only to derive it from a gold file)");
        need(max_iters >= 1, "max-iters must be >= 1");
        need(min_support >= 1, "min-support must be >= 1");
        need(workers >= 1, "workers must be >= 1");
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline Program load_program(const std::string& path) { return parse_program(read_file(path)); }

// Rendered labels of all functions the program can call; only these
// participate in clustering.
inline std::vector<std::string> function_label_tokens(const Program& p) {
    std::vector<std::string> out;
    for (const auto& f : p.functions) out.push_back(render_label(LabelKind::Function, f.name, p));
    for (const auto& [name, ext] : p.externals)
        out.push_back(render_label(LabelKind::Function, name, p));
    std::sort(out.begin(), out.end());
    return out;
}

// Function name -> rendered token and back; rendering is injective so the
// reverse map is total over rendered function labels.
inline std::string function_name_from_token(const std::string& token) {
    return token.rfind("fn:", 0) == 0 ? token.substr(3) : token;
}

// ---------------------------------------------------------------------------
// Stage wrappers producing the canonical artifact bytes.

inline std::string stage_encode(const Program& p) { return dump_rules(encode(p)); }

inline std::string stage_walk(const Program& p, const PipelineConfig& cfg,
                              std::ostream* log = nullptr) {
    Lpds l = encode(p);
    Corpus c = generate_corpus(l, cfg.gamma, cfg.walk_length, cfg.seed, cfg.workers, log);
    return corpus_to_string(l, c);
}

inline Embedding stage_train(const std::vector<std::vector<std::string>>& sentences,
                             const PipelineConfig& cfg) {
    return train(sentences, cfg.train_params());
}

struct ClusterArtifacts {
    Clustering clustering;
    PartitionFunction partition;
};

inline ClusterArtifacts stage_cluster(const Embedding& e, const Program& p, int k,
                                      const PipelineConfig& cfg) {
    ClusterArtifacts out;
    std::vector<std::string> tokens = function_label_tokens(p);
    out.clustering = kmeans(e, tokens, k, cfg.max_iters, cfg.seed);
    // cluster and partition files speak function names, not rendered tokens
    for (auto& l : out.clustering.labels) l = function_name_from_token(l);
    out.partition = build_partition(out.clustering);
    return out;
}

struct MineArtifacts {
    std::vector<Transaction> transactions;
    std::vector<CrossImplSpec> specs;
};

inline MineArtifacts stage_mine(const std::vector<ErrorHandler>& handlers,
                                const PartitionFunction& pi, int min_support) {
    MineArtifacts out;
    out.transactions = build_transactions(handlers, pi);
    auto itemsets = mine_closed(out.transactions, min_support);
    for (const auto& s : specs_from_itemsets(itemsets, out.transactions))
        out.specs.push_back(expand(s, pi, handlers));
    return out;
}

inline std::string metrics_text_report(const GoldMetrics& m) {
    std::ostringstream os;
    os << "class_size best_cluster precision recall f\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& row : m.per_class)
        os << std::setw(10) << row.members.size() << ' ' << std::setw(12) << row.best_cluster << ' '
           << std::setw(9) << row.precision << ' ' << std::setw(6) << row.recall << ' ' << row.f
           << '\n';
    os << "weighted precision " << m.weighted_precision << '\n';
    os << "weighted recall    " << m.weighted_recall << '\n';
    os << "weighted F         " << m.weighted_f << '\n';
    return os.str();
}

inline Json metrics_to_json(const GoldMetrics& m) {
    Json classes = Json::array();
    for (const auto& row : m.per_class) {
        Json j = Json::object();
        j["members"] = std::vector<std::string>(row.members.begin(), row.members.end());
        j["best_cluster"] = row.best_cluster;
        j["precision"] = row.precision;
        j["recall"] = row.recall;
        j["f"] = row.f;
        classes.push_back(std::move(j));
    }
    return Json{{"weighted_f", m.weighted_f},
                {"weighted_precision", m.weighted_precision},
                {"weighted_recall", m.weighted_recall},
                {"classes", std::move(classes)}};
}

// Full pipeline into an output directory; every intermediate artifact is
// materialized so any stage can be re-run or replaced in isolation.
struct PipelineResult {
    std::vector<ErrorHandler> handlers;
    std::vector<CrossImplSpec> specs;
    std::vector<ViolationReport> violations;
    std::optional<GoldMetrics> metrics;
};

inline PipelineResult run_pipeline(const Program& p, const PipelineConfig& cfg,
                                   const std::string& out_dir,
                                   const std::optional<GoldStandard>& gold = std::nullopt,
                                   std::ostream* log = nullptr) {
    cfg.check();
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return out_dir + "/" + name; };

    write_file(path("rules.txt"), stage_encode(p));

    std::string corpus_bytes = stage_walk(p, cfg, log);
    write_file(path("corpus.txt"), corpus_bytes);

    std::istringstream corpus_in(corpus_bytes);
    Embedding emb = stage_train(read_corpus_sentences(corpus_in), cfg);
    {
        std::ostringstream os;
        write_vectors(emb, os);
        write_file(path("vectors.txt"), os.str());
    }

    int k = cfg.k_clusters;
    if (k == 0 && gold) k = static_cast<int>(gold->classes().size());
    PartitionFunction pi = PartitionFunction::identity();
    PipelineResult result;
    if (k > 0) {
        ClusterArtifacts ca = stage_cluster(emb, p, k, cfg);
        pi = ca.partition;
        std::ostringstream cs, ps;
        write_clusters(ca.clustering, cs);
        write_partition(ca.partition, ps);
        write_file(path("clusters.tsv"), cs.str());
        write_file(path("partition.tsv"), ps.str());
        if (gold) {
            result.metrics = evaluate_gold(ca.clustering, *gold);
            write_file(path("metrics.txt"), metrics_text_report(*result.metrics));
            write_file(path("metrics.json"), metrics_to_json(*result.metrics).dump(2) + "\n");
        }
    }

    result.handlers = analyze_handlers(p);
    write_file(path("handlers.json"), handlers_to_json(result.handlers).dump(2) + "\n");

    MineArtifacts ma = stage_mine(result.handlers, pi, cfg.min_support);
    {
        std::ostringstream ts;
        write_transactions(ma.transactions, ts);
        write_file(path("transactions.txt"), ts.str());
    }
    result.specs = ma.specs;
    write_file(path("specs.json"), specs_to_json(ma.specs, cfg.min_support).dump(2) + "\n");
    write_file(path("specs.txt"), specs_text_report(ma.specs));

    result.violations = find_violations(ma.specs, result.handlers);
    write_file(path("violations.json"), violations_to_json(result.violations).dump(2) + "\n");
    write_file(path("violations.txt"), violations_text_report(result.violations));
    return result;
}

} // namespace synmine
