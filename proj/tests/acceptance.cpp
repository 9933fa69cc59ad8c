// Acceptance suite: one checked criterion per section, one PASS/FAIL line
// each, nonzero exit if any line failed. Each criterion carries its stated
// runtime budget and tolerance.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "synmine/pipeline.hpp"

using namespace synmine;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

struct Criterion {
    int number;
    std::string name;
    bool ok = true;
    std::ostringstream detail;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    Criterion(int n, std::string label) : number(n), name(std::move(label)) {}

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "    failed: " << what << "\n";
        }
    }

    void budget(double limit_seconds) {
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2fs (budget %.0fs)", elapsed, limit_seconds);
        detail << "    runtime " << buf << "\n";
        require(elapsed < limit_seconds, "runtime exceeded budget");
    }

    ~Criterion() {
        std::printf("criterion %2d [%s] %s\n", number, ok ? "PASS" : "FAIL", name.c_str());
        std::fputs(detail.str().c_str(), stdout);
        if (!ok) ++g_failures;
    }
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "synmine_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// ---------------------------------------------------------------------------

void criterion_1_encoding_fidelity() {
    Criterion c(1, "encoding fidelity: Fig. 4c golden rule dump");
    Program p = testsupport::load_fixture("fig4.json");
    std::string dump = dump_rules(encode(p));
    std::string golden = testsupport::slurp(testsupport::fixture_path("fig4_rules.golden"));
    c.require(dump == golden, "rule dump differs from the 32-rule transcription");

    std::istringstream lines(dump);
    std::string line;
    int count = 0;
    bool push_at_n4 = false, summary_at_n4 = false;
    while (std::getline(lines, line)) {
        ++count;
        if (line == "⟨n4⟩ -> ⟨n17 n5⟩") push_at_n4 = true;
        if (line == "⟨n4⟩ -> ⟨n5⟩ : pci_disable_device") summary_at_n4 = true;
    }
    c.require(count == 32, "expected exactly 32 rules");
    c.require(push_at_n4 && summary_at_n4, "push/internal sibling pair for the call at n4");
    c.budget(1.0);
}

void criterion_2_walk_validity() {
    Criterion c(2, "walk validity: replay oracle over 10,000 seeded walks");
    Lpds fig4 = encode(testsupport::load_fixture("fig4.json"));
    Lpds synth = encode(testsupport::synthetic_program(50, 2024));

    std::size_t total = 0, failures = 0;
    for (const Lpds* l : {&fig4, &synth}) {
        Corpus corpus = generate_corpus(*l, 100, 100, 77);
        total += corpus.walks.size();
        for (const auto& w : corpus.walks)
            if (!testsupport::replay_accepts(*l, w)) ++failures;
    }
    c.detail << "    walks " << total << ", replay failures " << failures << "\n";
    c.require(total >= 10000, "expected at least 10,000 walks across the two programs");
    c.require(failures == 0, "some walk failed the independent replay oracle");
    c.budget(10.0);
}

void criterion_3_walk_language() {
    Criterion c(3, "walk language: bounded enumeration contains all sampled walks, W1 and W2");
    Lpds l = encode(testsupport::load_fixture("fig4.json"));
    const std::vector<std::string> w1 = {"atiixp", "EQ", "pci_disable_device", "ENOMEM"};
    const std::vector<std::string> w2 = {"atiixp", "EQ",         "pci_devres",
                                         "EQ",     "pci_devres", "do_pci_disable_device"};

    auto starts = occurring_labels_sorted(l);
    std::size_t sampled = 0;
    bool subset = true;
    bool w1_seen = false;
    for (int k = 0; k <= 6; ++k) {
        for (std::uint32_t s : starts) {
            auto language = testsupport::bounded_language(l, s, k);
            for (int i = 0; i < 80; ++i) {
                Rng rng(derive_seed(1234 + k, l.label(s).rendered, i));
                auto rendered = l.render(random_walk(l, s, k, rng).labels);
                ++sampled;
                if (!language.count(rendered)) subset = false;
                if (rendered == w1) w1_seen = true;
            }
        }
    }
    c.detail << "    sampled " << sampled << " walks at k <= 6\n";
    c.require(sampled >= 5000, "expected at least 5,000 sampled walks");
    c.require(subset, "a sampled emission fell outside the enumerated language");
    c.require(w1_seen, "W1 not observed among sampled walks at k <= 6");

    // W2 takes nine steps (it descends into pci_disable_device), so it is
    // checked at the paper's k = 10; see the decisions ledger.
    const std::uint32_t* atiixp = l.find_label("atiixp");
    c.require(atiixp != nullptr, "atiixp label missing");
    auto language10 = testsupport::bounded_language(l, *atiixp, 10);
    c.require(language10.count(w2) == 1, "W2 not in the k = 10 enumerated language");
    bool w2_seen = false;
    for (int i = 0; i < 5000 && !w2_seen; ++i) {
        Rng rng(derive_seed(777, "atiixp", i));
        w2_seen = l.render(random_walk(l, *atiixp, 10, rng).labels) == w2;
    }
    c.require(w2_seen, "W2 not observed among 5,000 seeded walks at k = 10");
    c.budget(30.0);
}

void criterion_4_gradient_correctness() {
    Criterion c(4, "gradient correctness: 1,000 random pairs vs central differences");
    Rng rng(4242);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> u(8), v(8);
        for (auto& x : u) x = rng.next_double() * 2 - 1;
        for (auto& x : v) x = rng.next_double() * 2 - 1;
        bool negative = trial % 2 == 1;
        auto g = pair_objective_gradient(u, v, negative);
        auto fd_in = testsupport::finite_difference(
            [&](const std::vector<double>& vv) {
                return pair_objective_gradient(u, vv, negative).loss;
            },
            v);
        auto fd_out = testsupport::finite_difference(
            [&](const std::vector<double>& uu) {
                return pair_objective_gradient(uu, v, negative).loss;
            },
            u);
        for (int i = 0; i < 8; ++i) {
            double da = std::abs(fd_in[i] - g.grad_in[i]) /
                        std::max({std::abs(fd_in[i]), std::abs(g.grad_in[i]), 1e-10});
            double db = std::abs(fd_out[i] - g.grad_out[i]) /
                        std::max({std::abs(fd_out[i]), std::abs(g.grad_out[i]), 1e-10});
            worst = std::max({worst, da, db});
        }
    }
    c.detail << "    worst relative error " << worst << "\n";
    c.require(worst < 1e-4, "relative error reached 1e-4");
}

double planted_weighted_f(std::uint64_t seed, std::string* note) {
    auto planted = testsupport::planted_synonyms(20, 10, 3, 1000 + seed);
    PipelineConfig cfg;
    cfg.gamma = 50;
    cfg.walk_length = 50;
    cfg.dim = 64;
    cfg.window = 1;
    cfg.k_clusters = 20;
    cfg.seed = seed;

    Lpds l = encode(planted.program);
    Corpus corpus = generate_corpus(l, cfg.gamma, cfg.walk_length, cfg.seed);
    Embedding emb = train(corpus_sentences(l, corpus), cfg.train_params());
    ClusterArtifacts ca = stage_cluster(emb, planted.program, cfg.k_clusters, cfg);
    GoldMetrics m = evaluate_gold(ca.clustering, planted.gold);
    if (note) {
        std::ostringstream os;
        os << "seed " << seed << ": weighted F " << m.weighted_f;
        *note = os.str();
    }
    return m.weighted_f;
}

void criterion_5_synonym_recovery() {
    Criterion c(5, "synonym recovery: 20 planted classes x 10 functions, weighted F");
    std::string note;
    double f = planted_weighted_f(1, &note);
    c.detail << "    " << note << "\n";
    if (f < 0.90) {
        // stated tolerance: any of 5 seeds reaching 0.85
        bool rescued = false;
        for (std::uint64_t seed = 2; seed <= 5 && !rescued; ++seed) {
            double fi = planted_weighted_f(seed, &note);
            c.detail << "    " << note << "\n";
            rescued = fi >= 0.85;
        }
        c.require(rescued, "no seed reached weighted F 0.85");
    }
    c.budget(120.0);
}

void criterion_6_gold_metric_arithmetic() {
    Criterion c(6, "gold-metric arithmetic: exact formula values");
    GoldStandard perfect;
    perfect.add_must("a", "b");
    perfect.add_must("c", "d");
    Clustering exact;
    exact.k = 2;
    exact.labels = {"a", "b", "c", "d"};
    exact.assignment = {0, 0, 1, 1};
    c.require(evaluate_gold(exact, perfect).weighted_f == 1.0, "perfect clustering must score 1.0");

    GoldStandard small;
    small.add_must("a", "b");
    Clustering blob;
    blob.k = 1;
    blob.labels = {"a", "b", "c", "d"};
    blob.assignment = {0, 0, 0, 0};
    GoldMetrics m = evaluate_gold(blob, small);
    c.require(m.per_class.size() == 1 && m.per_class[0].precision == 0.5,
              "precision must be exactly 1/2");
    c.require(m.per_class[0].recall == 1.0, "recall must be exactly 1");
    c.require(m.weighted_f == 2.0 / 3.0, "F must be exactly 2/3");
}

void criterion_7_handler_fidelity() {
    Criterion c(7, "handler extraction fidelity: five handlers with Ex. 5.3 sets");
    auto handlers = analyze_handlers(testsupport::load_fixture("fig2.json"));
    c.require(handlers.size() == 5, "expected exactly 5 handlers");
    if (handlers.size() == 5) {
        using S = std::set<std::string>;
        const std::vector<std::pair<S, S>> expected = {
            {{}, {}},
            {{"pci_enable_device"}, {"pci_disable_device"}},
            {{"pci_enable_device", "kzalloc"}, {"pci_disable_device", "kfree"}},
            {{"pci_enable_device", "kzalloc", "pci_request_regions"},
             {"dev_err", "snd_atiixp_free"}},
            {{"pci_enable_device", "kzalloc", "pci_request_regions", "request_irq"},
             {"snd_atiixp_free"}},
        };
        for (std::size_t i = 0; i < 5; ++i) {
            c.require(handlers[i].context == expected[i].first,
                      "C_H" + std::to_string(i + 1) + " differs from Ex. 5.3");
            c.require(handlers[i].response == expected[i].second,
                      "R_H" + std::to_string(i + 1) + " differs from Ex. 5.3");
        }
    }
}

void criterion_8_mining_fidelity() {
    Criterion c(8, "mining fidelity: Ex. 5.4 specs at min support 2; Eclat vs brute force");
    auto handlers = analyze_handlers(testsupport::load_fixture("fig2.json"));
    auto ts = build_transactions(handlers, PartitionFunction::identity());
    auto specs = specs_from_itemsets(mine_closed(ts, 2), ts);

    auto contains = [&](const std::set<std::string>& ctx, const std::set<std::string>& rsp,
                        int support) {
        for (const auto& s : specs)
            if (s.context == ctx && s.response == rsp && s.support == support) return true;
        return false;
    };
    c.require(contains({"pci_enable_device"}, {"pci_disable_device"}, 2), "S1 with support 2");
    bool s2 = contains({"pci_enable_device", "kzalloc"}, {"kfree", "pci_disable_device"}, 2);
    c.require(s2, "S2 with support 2");
    if (!s2)
        c.detail << "    note: S2's items co-occur only in H3's transaction, so its support is 1\n"
                    "    under the Ex. 5.3 handler sets pinned by criterion 7; it cannot appear\n"
                    "    at min support 2 (see decisions ledger)\n";
    c.require(contains({"pci_enable_device", "kzalloc", "pci_request_regions"},
                       {"snd_atiixp_free"}, 2),
              "S3 with support 2");

    Rng rng(880);
    bool oracle_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        int items = 2 + static_cast<int>(rng.next_below(11));
        int count = 1 + static_cast<int>(rng.next_below(32));
        std::vector<Transaction> random_ts;
        for (int t = 0; t < count; ++t) {
            Transaction tr;
            tr.handler_id = "h" + std::to_string(t);
            for (int i = 0; i < items; ++i)
                if (rng.next_below(3) == 0)
                    tr.items.insert((i % 2 ? ctx_item("f") : rsp_item("g")) + std::to_string(i));
            random_ts.push_back(std::move(tr));
        }
        int min_support = 1 + static_cast<int>(rng.next_below(4));
        auto fast = mine_closed(random_ts, min_support);
        auto slow = testsupport::brute_force_closed(random_ts, min_support);
        if (fast.size() != slow.size()) {
            oracle_ok = false;
            break;
        }
        for (std::size_t i = 0; i < fast.size(); ++i)
            if (fast[i].items != slow[i].items || fast[i].support != slow[i].support)
                oracle_ok = false;
    }
    c.require(oracle_ok, "mine_closed diverged from the powerset oracle");
    c.budget(30.0);
}

void criterion_9_truth_table() {
    Criterion c(9, "applicability/satisfaction truth table: Ex. 5.5, Ex. 5.7, Fig. 6");
    auto handlers = analyze_handlers(testsupport::load_fixture("fig2.json"));
    c.require(handlers.size() == 5, "expected 5 handlers");
    if (handlers.size() != 5) return;

    auto spec = [](std::set<std::string> ctx, std::set<std::string> rsp) {
        Specification s;
        s.context = std::move(ctx);
        s.response = std::move(rsp);
        return s;
    };
    Specification s1 = spec({"pci_enable_device"}, {"pci_disable_device"});
    Specification s2 = spec({"pci_enable_device", "kzalloc"}, {"kfree", "pci_disable_device"});
    Specification s3 =
        spec({"pci_enable_device", "kzalloc", "pci_request_regions"}, {"snd_atiixp_free"});

    c.require(is_applicable(s1, handlers[1]), "S1 |> H2");
    c.require(is_applicable(s2, handlers[2]), "S2 |> H3");
    c.require(is_applicable(s3, handlers[3]), "S3 |> H4");
    c.require(is_applicable(s3, handlers[4]), "S3 |> H5");
    c.require(is_satisfied(s1, handlers[1]), "S1 satisfied by H2");
    c.require(is_satisfied(s2, handlers[2]), "S2 satisfied by H3");
    c.require(is_satisfied(s3, handlers[3]), "S3 satisfied by H4");
    c.require(is_satisfied(s3, handlers[4]), "S3 satisfied by H5");

    Specification btrfs = spec({"btrfs_alloc_path"}, {"btrfs_free_path"});
    ErrorHandler already;
    already.function = "btrfs_fn";
    already.node = "n1";
    already.context = {"btrfs_alloc_path", "btrfs_free_path"};
    c.require(!is_applicable(btrfs, already),
              "Fig. 6: spec must not apply when the response already happened");
}

void criterion_10_cross_impl_merging() {
    Criterion c(10, "cross-implementation merging: Table 3 family support 57");
    const std::vector<int> supports = {11, 7, 6, 5, 4, 4, 3, 3, 3, 3, 2, 2, 2, 2};
    std::vector<ErrorHandler> handlers;
    PartitionFunction pi;
    for (std::size_t d = 0; d < supports.size(); ++d) {
        std::string num = (d + 1 < 10 ? "0" : "") + std::to_string(d + 1);
        std::string freefn = "snd_drv" + num + "_free";
        pi.representative[freefn] = "snd_drv01_free";
        for (int i = 0; i < supports[d]; ++i) {
            ErrorHandler h;
            h.function = "drv" + num + "_create_" + std::to_string(i);
            h.node = "b1";
            h.context = {"pci_enable_device", "pci_request_regions"};
            h.response = {freefn};
            handlers.push_back(std::move(h));
        }
    }

    // via the handlers file, as the mining stage consumes it
    fs::path hpath = work_dir() / "table3_handlers.json";
    write_file(hpath.string(), handlers_to_json(handlers).dump(2) + "\n");
    auto loaded = handlers_from_json(Json::parse(read_file(hpath.string())));

    MineArtifacts merged = stage_mine(loaded, pi, 5);
    c.require(merged.specs.size() == 1, "normalized mining must yield exactly one family");
    if (!merged.specs.empty()) {
        const CrossImplSpec& x = merged.specs.front();
        c.require(x.normalized.support == 57, "merged support must be 57");
        c.require(x.members.size() == 14, "family must expand to the 14 member specs");
        int max_member = 0, sum = 0;
        for (const auto& m : x.members) {
            max_member = std::max(max_member, m.support);
            sum += m.support;
        }
        c.require(max_member == 11, "strongest member support must be 11");
        c.require(x.normalized.support > max_member,
                  "merged family must outrank every individual member");
        c.require(sum == 57, "member supports must sum to 57 (disjoint fixture)");
    }

    MineArtifacts identity = stage_mine(loaded, PartitionFunction::identity(), 5);
    c.require(identity.specs.size() == 4,
              "identity mining at min support 5 must keep 4 of 14 members");
}

void criterion_11_violation_detection() {
    Criterion c(11, "violation detection: GFS2 missing gfs2_holder_uninit");
    auto specs = specs_from_json(
        Json::parse(testsupport::slurp(testsupport::fixture_path("gfs2_specs.json"))));
    auto buggy = analyze_handlers(testsupport::load_fixture("gfs2.json"));
    auto violations = find_violations(specs, buggy);
    c.require(violations.size() == 1, "expected exactly one violation");
    if (!violations.empty())
        c.require(violations[0].missing == std::vector<std::string>{"gfs2_holder_uninit"},
                  "violation must name gfs2_holder_uninit as missing");
    auto fixed = analyze_handlers(testsupport::load_fixture("gfs2_fixed.json"));
    c.require(find_violations(specs, fixed).empty(), "corrected fixture must be clean");
}

void criterion_12_determinism() {
    Criterion c(12, "determinism: byte-identical artifacts across reruns");
    Program p = testsupport::load_fixture("fig2.json");
    PipelineConfig cfg;
    cfg.gamma = 10;
    cfg.walk_length = 20;
    cfg.dim = 16;
    cfg.seed = 5;
    cfg.min_support = 2;
    cfg.k_clusters = 3;
    cfg.deterministic = true;

    fs::path a = work_dir() / "run_a";
    fs::path b = work_dir() / "run_b";
    run_pipeline(p, cfg, a.string());
    run_pipeline(p, cfg, b.string());

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        std::string name = entry.path().filename().string();
        ++compared;
        c.require(fs::exists(b / name), name + " missing in second run");
        if (fs::exists(b / name))
            c.require(testsupport::slurp((a / name).string()) ==
                          testsupport::slurp((b / name).string()),
                      name + " differs between runs");
    }
    c.detail << "    compared " << compared << " artifacts\n";
    c.require(compared >= 10, "expected the full artifact set");
}

} // namespace

int main() {
    criterion_1_encoding_fidelity();
    criterion_2_walk_validity();
    criterion_3_walk_language();
    criterion_4_gradient_correctness();
    criterion_5_synonym_recovery();
    criterion_6_gold_metric_arithmetic();
    criterion_7_handler_fidelity();
    criterion_8_mining_fidelity();
    criterion_9_truth_table();
    criterion_10_cross_impl_merging();
    criterion_11_violation_detection();
    criterion_12_determinism();

    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
