#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "synmine/lpds.hpp"
#include "synmine/rng.hpp"

namespace synmine {

struct Walk {
    std::uint32_t start_label = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> labels;     // emitted label indices
    std::vector<std::uint32_t> rule_trace; // rules fired, initial rule first
};

struct CorpusParams {
    int gamma = 50;
    int walk_length = 50;
    std::uint64_t seed = 1;
};

struct Corpus {
    CorpusParams params;
    std::vector<Walk> walks;
};

// One random walk: pick uniformly a rule carrying the start label, begin at
// that rule's right-hand side with its labels emitted, then take at most k
// uniform steps. A dead end (empty stack, or a stack top with no rules, such
// as the entry of an external) ends the walk early.
inline Walk random_walk(const Lpds& l, std::uint32_t start_label, int k, Rng& rng) {
    if (start_label >= l.labels.size() || l.rules_by_label[start_label].empty())
        throw std::invalid_argument("label " +
                                    (start_label < l.labels.size() ? l.labels[start_label].rendered
                                                                   : std::to_string(start_label)) +
                                    " occurs in no rule");
    const auto& candidates = l.rules_by_label[start_label];
    std::uint32_t first = candidates[rng.next_below(candidates.size())];

    Walk w;
    w.start_label = start_label;
    w.rule_trace.push_back(first);
    Configuration c;
    c.stack = l.rules[first].rhs;
    c.emitted = l.rules[first].labels;
    for (int step = 0; step < k; ++step) {
        auto next = successors(l, c);
        if (next.empty()) break;
        Successor& pick = next[rng.next_below(next.size())];
        w.rule_trace.push_back(pick.rule);
        c = std::move(pick.config);
    }
    w.labels = std::move(c.emitted);
    return w;
}

inline std::vector<std::uint32_t> occurring_labels_sorted(const Lpds& l) {
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < l.labels.size(); ++i)
        if (!l.rules_by_label[i].empty()) ids.push_back(i);
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        return l.labels[a].rendered < l.labels[b].rendered;
    });
    return ids;
}

// gamma walks per occurring label. Walk order and content are fixed by
// (seed, lpds) alone: each walk's generator is seeded from
// (master seed, label, index), so any worker count produces identical output.
inline Corpus generate_corpus(const Lpds& l, int gamma, int k, std::uint64_t master_seed,
                              int workers = 1, std::ostream* log = nullptr) {
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    if (k < 0) throw std::invalid_argument("walk length must be >= 0");

    if (log)
        for (const auto& name : l.declared_unused)
            *log << "warning: label " << name << " occurs in no rule; skipped\n";

    auto starts = occurring_labels_sorted(l);
    Corpus corpus;
    corpus.params = {gamma, k, master_seed};
    corpus.walks.resize(starts.size() * static_cast<std::size_t>(gamma));

    auto run_slot = [&](std::size_t slot) {
        std::uint32_t label = starts[slot / gamma];
        std::uint64_t index = slot % gamma;
        Rng rng(derive_seed(master_seed, l.labels[label].rendered, index));
        Walk w = random_walk(l, label, k, rng);
        w.seed = derive_seed(master_seed, l.labels[label].rendered, index);
        corpus.walks[slot] = std::move(w);
    };

    std::size_t total = corpus.walks.size();
    if (workers <= 1) {
        for (std::size_t s = 0; s < total; ++s) run_slot(s);
    } else {
        std::vector<std::thread> pool;
        std::size_t n = static_cast<std::size_t>(workers);
        for (std::size_t t = 0; t < n; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t s = t; s < total; s += n) run_slot(s);
            });
        for (auto& th : pool) th.join();
    }
    return corpus;
}

// Corpus file: a comment header with the generation parameters, then one walk
// per line, rendered labels separated by single spaces.
inline void write_corpus(const Lpds& l, const Corpus& corpus, std::ostream& os) {
    os << "# gamma=" << corpus.params.gamma << " k=" << corpus.params.walk_length
       << " seed=" << corpus.params.seed << "\n";
    for (const auto& w : corpus.walks) {
        for (std::size_t i = 0; i < w.labels.size(); ++i) {
            if (i) os << ' ';
            os << l.labels[w.labels[i]].rendered;
        }
        os << '\n';
    }
}

inline std::string corpus_to_string(const Lpds& l, const Corpus& corpus) {
    std::ostringstream os;
    write_corpus(l, corpus, os);
    return os.str();
}

// Sentences for training: tokenized walk lines, comment lines dropped.
inline std::vector<std::vector<std::string>> read_corpus_sentences(std::istream& is) {
    std::vector<std::vector<std::string>> sentences;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') continue;
        std::vector<std::string> tokens;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        sentences.push_back(std::move(tokens));
    }
    return sentences;
}

inline std::vector<std::vector<std::string>> corpus_sentences(const Lpds& l, const Corpus& corpus) {
    std::vector<std::vector<std::string>> sentences;
    sentences.reserve(corpus.walks.size());
    for (const auto& w : corpus.walks) sentences.push_back(l.render(w.labels));
    return sentences;
}

} // namespace synmine
