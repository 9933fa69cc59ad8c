// Command-line frontend. Every subcommand is a pure function of its input
// files and flags; all randomness flows from --seed.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "synmine/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitParse = 3;
constexpr int kExitBadParam = 4;

struct Options {
    synmine::PipelineConfig cfg;
    std::string program_path;
    std::string corpus_path;
    std::string vectors_path;
    std::string clusters_path;
    std::string partition_path;
    std::string gold_path;
    std::string handlers_path;
    std::string specs_path;
    std::string out_path;
    std::string out_dir = "out";
    std::string format = "text";
    std::string neighbors_query;
    std::vector<std::string> analogy_query;
    int top_n = 10;
};

void add_common_params(CLI::App* cmd, Options& o) {
    cmd->add_option("--gamma", o.cfg.gamma, "walks per label");
    cmd->add_option("--walk-length", o.cfg.walk_length, "maximum steps per walk");
    cmd->add_option("--dim", o.cfg.dim, "embedding dimension");
    cmd->add_option("--window", o.cfg.window, "skip-gram window");
    cmd->add_option("--seed", o.cfg.seed, "master seed");
    cmd->add_option("--epochs", o.cfg.epochs, "training epochs");
    cmd->add_option("--negatives", o.cfg.negatives, "negative samples per pair");
    cmd->add_option("--min-count", o.cfg.min_count, "vocabulary frequency cutoff");
    cmd->add_option("--k-clusters", o.cfg.k_clusters, "number of k-means clusters");
    cmd->add_option("--max-iters", o.cfg.max_iters, "k-means iteration cap");
    cmd->add_option("--min-support", o.cfg.min_support, "itemset support threshold");
    cmd->add_option("--workers", o.cfg.workers, "worker threads");
    cmd->add_flag("--deterministic,!--no-deterministic", o.cfg.deterministic,
                  "force sequential, reproducible training");
}

void emit(const Options& o, const std::string& text, const synmine::Json& json) {
    const std::string& body = o.format == "json" ? json.dump(2) + "\n" : text;
    if (o.out_path.empty()) std::cout << body;
    else synmine::write_file(o.out_path, body);
}

synmine::PartitionFunction load_partition_opt(const Options& o) {
    if (o.partition_path.empty()) return synmine::PartitionFunction::identity();
    std::ifstream in(o.partition_path);
    if (!in) throw synmine::MissingFileError("cannot open " + o.partition_path);
    return synmine::read_partition(in);
}

std::vector<synmine::ErrorHandler> load_handlers(const std::string& path) {
    return synmine::handlers_from_json(synmine::Json::parse(synmine::read_file(path)));
}

int run(int argc, char** argv) {
    CLI::App app{"function-synonym embeddings and error-handling specification mining"};
    app.require_subcommand(1);
    Options o;

    auto* enc = app.add_subcommand("encode", "encode a program and dump its rules");
    enc->add_option("--program", o.program_path, "interchange program")->required();
    enc->add_option("--out", o.out_path, "rule dump path (stdout if omitted)");

    auto* walk = app.add_subcommand("walk", "generate the random-walk corpus");
    walk->add_option("--program", o.program_path)->required();
    walk->add_option("--out", o.out_path, "corpus path (stdout if omitted)");
    add_common_params(walk, o);

    auto* tr = app.add_subcommand("train", "train label vectors from a corpus");
    tr->add_option("--corpus", o.corpus_path)->required();
    tr->add_option("--out", o.out_path, "vector file (stdout if omitted)");
    add_common_params(tr, o);

    auto* qy = app.add_subcommand("query", "nearest-neighbor and analogy queries");
    qy->add_option("--vectors", o.vectors_path)->required();
    qy->add_option("--neighbors", o.neighbors_query, "label to query");
    qy->add_option("--analogy", o.analogy_query, "a b c: rank by b - a + c")->expected(3);
    qy->add_option("--n", o.top_n, "results to return");
    qy->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
    qy->add_option("--out", o.out_path);

    auto* cl = app.add_subcommand("cluster", "k-means over function vectors");
    cl->add_option("--vectors", o.vectors_path)->required();
    cl->add_option("--program", o.program_path)->required();
    cl->add_option("--clusters-out", o.clusters_path)->required();
    cl->add_option("--partition-out", o.partition_path)->required();
    add_common_params(cl, o);

    auto* ev = app.add_subcommand("eval-gold", "score a clustering against a gold standard");
    ev->add_option("--clusters", o.clusters_path)->required();
    ev->add_option("--gold", o.gold_path)->required();
    ev->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
    ev->add_option("--out", o.out_path);

    auto* hd = app.add_subcommand("handlers", "locate error handlers and their sets");
    hd->add_option("--program", o.program_path)->required();
    hd->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
    hd->add_option("--out", o.out_path, "handlers file (stdout if omitted)");

    auto* mi = app.add_subcommand("mine", "mine specifications from handler sets");
    mi->add_option("--handlers", o.handlers_path)->required();
    mi->add_option("--partition", o.partition_path, "partition file (identity if omitted)");
    mi->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
    mi->add_option("--out", o.out_path);
    add_common_params(mi, o);

    auto* ck = app.add_subcommand("check", "report specification violations");
    ck->add_option("--specs", o.specs_path)->required();
    ck->add_option("--handlers", o.handlers_path)->required();
    ck->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
    ck->add_option("--out", o.out_path);

    auto* pl = app.add_subcommand("pipeline", "run every stage into an output directory");
    pl->add_option("--program", o.program_path)->required();
    pl->add_option("--gold", o.gold_path, "optional gold standard");
    pl->add_option("--out-dir", o.out_dir);
    add_common_params(pl, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadParam;
    }
    o.cfg.check();
    if (hd->parsed() && !hd->get_option("--format")->count()) o.format = "json";

    if (enc->parsed()) {
        std::string dump = synmine::stage_encode(synmine::load_program(o.program_path));
        if (o.out_path.empty()) std::cout << dump;
        else synmine::write_file(o.out_path, dump);
        return kExitOk;
    }

    if (walk->parsed()) {
        std::string corpus = synmine::stage_walk(synmine::load_program(o.program_path), o.cfg, &std::cerr);
        if (o.out_path.empty()) std::cout << corpus;
        else synmine::write_file(o.out_path, corpus);
        return kExitOk;
    }

    if (tr->parsed()) {
        std::istringstream in(synmine::read_file(o.corpus_path));
        if (!o.cfg.deterministic && o.cfg.workers > 1)
            std::cerr << "warning: parallel training is not deterministic\n";
        synmine::Embedding e = synmine::stage_train(synmine::read_corpus_sentences(in), o.cfg);
        std::ostringstream os;
        synmine::write_vectors(e, os);
        if (o.out_path.empty()) std::cout << os.str();
        else synmine::write_file(o.out_path, os.str());
        return kExitOk;
    }

    if (qy->parsed()) {
        std::istringstream in(synmine::read_file(o.vectors_path));
        synmine::Embedding e = synmine::read_vectors(in);
        std::vector<std::pair<std::string, double>> hits;
        if (!o.neighbors_query.empty()) hits = synmine::nearest(e, o.neighbors_query, o.top_n);
        else if (o.analogy_query.size() == 3)
            hits = synmine::analogy(e, o.analogy_query[0], o.analogy_query[1], o.analogy_query[2],
                                    o.top_n);
        else throw std::invalid_argument("query needs --neighbors or --analogy");
        std::ostringstream os;
        synmine::Json arr = synmine::Json::array();
        for (const auto& [label, cos] : hits) {
            os << label << ' ' << synmine::format_double(cos) << '\n';
            arr.push_back(synmine::Json{{"label", label}, {"cosine", cos}});
        }
        emit(o, os.str(), synmine::Json{{"results", arr}});
        return kExitOk;
    }

    if (cl->parsed()) {
        std::istringstream in(synmine::read_file(o.vectors_path));
        synmine::Embedding e = synmine::read_vectors(in);
        synmine::Program p = synmine::load_program(o.program_path);
        if (o.cfg.k_clusters < 1) throw std::invalid_argument("parameter out of range: --k-clusters");
        auto ca = synmine::stage_cluster(e, p, o.cfg.k_clusters, o.cfg);
        std::ostringstream cs, ps;
        synmine::write_clusters(ca.clustering, cs);
        synmine::write_partition(ca.partition, ps);
        synmine::write_file(o.clusters_path, cs.str());
        synmine::write_file(o.partition_path, ps.str());
        return kExitOk;
    }

    if (ev->parsed()) {
        std::istringstream cin_(synmine::read_file(o.clusters_path));
        std::istringstream gin(synmine::read_file(o.gold_path));
        synmine::GoldMetrics m =
            synmine::evaluate_gold(synmine::read_clusters(cin_), synmine::read_gold(gin));
        emit(o, synmine::metrics_text_report(m), synmine::metrics_to_json(m));
        return kExitOk;
    }

    if (hd->parsed()) {
        auto handlers = synmine::analyze_handlers(synmine::load_program(o.program_path));
        emit(o, synmine::handlers_text_report(handlers), synmine::handlers_to_json(handlers));
        return kExitOk;
    }

    if (mi->parsed()) {
        auto handlers = load_handlers(o.handlers_path);
        auto pi = load_partition_opt(o);
        auto ma = synmine::stage_mine(handlers, pi, o.cfg.min_support);
        emit(o, synmine::specs_text_report(ma.specs),
             synmine::specs_to_json(ma.specs, o.cfg.min_support));
        return kExitOk;
    }

    if (ck->parsed()) {
        auto specs = synmine::specs_from_json(synmine::Json::parse(synmine::read_file(o.specs_path)));
        auto handlers = load_handlers(o.handlers_path);
        auto violations = synmine::find_violations(specs, handlers);
        emit(o, synmine::violations_text_report(violations), synmine::violations_to_json(violations));
        return kExitOk;
    }

    if (pl->parsed()) {
        synmine::Program p = synmine::load_program(o.program_path);
        std::optional<synmine::GoldStandard> gold;
        if (!o.gold_path.empty()) {
            std::istringstream gin(synmine::read_file(o.gold_path));
            gold = synmine::read_gold(gin);
        }
        if (!o.cfg.deterministic && o.cfg.workers > 1)
            std::cerr << "warning: parallel training is not deterministic\n";
        synmine::run_pipeline(p, o.cfg, o.out_dir, gold, &std::cerr);
        return kExitOk;
    }

    return kExitOther;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const synmine::MissingFileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitMissingFile;
    } catch (const synmine::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const synmine::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadParam;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
}
