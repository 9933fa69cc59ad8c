#pragma once

#include <algorithm>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "synmine/handlers.hpp"
#include "synmine/synonyms.hpp"

namespace synmine {

// Context and response sets flatten into one transaction per handler with
// CTX:/RSP: tagged items.
struct Transaction {
    std::string handler_id;
    std::set<std::string> items;
};

inline std::string ctx_item(const std::string& f) { return "CTX:" + f; }
inline std::string rsp_item(const std::string& f) { return "RSP:" + f; }

inline std::vector<Transaction> build_transactions(const std::vector<ErrorHandler>& handlers,
                                                   const PartitionFunction& pi) {
    std::vector<Transaction> out;
    out.reserve(handlers.size());
    for (const auto& h : handlers) {
        Transaction t;
        t.handler_id = h.id();
        for (const auto& f : h.context) t.items.insert(ctx_item(pi(f)));
        for (const auto& f : h.response) t.items.insert(rsp_item(pi(f)));
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(),
              [](const Transaction& a, const Transaction& b) { return a.handler_id < b.handler_id; });
    return out;
}

inline void write_transactions(const std::vector<Transaction>& ts, std::ostream& os) {
    for (const auto& t : ts) {
        os << t.handler_id << " |";
        for (const auto& i : t.items) os << ' ' << i;
        os << '\n';
    }
}

struct Itemset {
    std::vector<std::string> items; // sorted
    int support = 0;
    std::vector<int> tids;          // supporting transaction indices
};

// Eclat over vertical tid-lists, followed by a closedness filter: an itemset
// survives only if every one-item extension strictly lowers its support.
// Output order: support descending, then lexicographic items.
inline std::vector<Itemset> mine_closed(const std::vector<Transaction>& transactions,
                                        int min_support) {
    if (min_support < 1) throw std::invalid_argument("min_support must be >= 1");

    std::map<std::string, std::vector<int>> tidlists;
    for (int t = 0; t < static_cast<int>(transactions.size()); ++t)
        for (const auto& item : transactions[t].items) tidlists[item].push_back(t);

    std::vector<std::pair<std::string, std::vector<int>>> frequent_items;
    for (auto& [item, tids] : tidlists)
        if (static_cast<int>(tids.size()) >= min_support) frequent_items.emplace_back(item, tids);

    // map from itemset to (support, tids) over all frequent itemsets
    std::map<std::vector<std::string>, std::vector<int>> all;
    std::vector<std::string> prefix;

    std::function<void(std::size_t, const std::vector<int>&)> grow =
        [&](std::size_t from, const std::vector<int>& tids) {
            for (std::size_t i = from; i < frequent_items.size(); ++i) {
                std::vector<int> inter;
                std::set_intersection(tids.begin(), tids.end(), frequent_items[i].second.begin(),
                                      frequent_items[i].second.end(), std::back_inserter(inter));
                if (static_cast<int>(inter.size()) < min_support) continue;
                prefix.push_back(frequent_items[i].first);
                all[prefix] = inter;
                grow(i + 1, inter);
                prefix.pop_back();
            }
        };
    std::vector<int> all_tids(transactions.size());
    for (std::size_t t = 0; t < transactions.size(); ++t) all_tids[t] = static_cast<int>(t);
    grow(0, all_tids);

    std::vector<Itemset> out;
    for (const auto& [items, tids] : all) {
        bool closed = true;
        for (const auto& [item, itids] : frequent_items) {
            if (std::binary_search(items.begin(), items.end(), item)) continue;
            std::vector<int> inter;
            std::set_intersection(tids.begin(), tids.end(), itids.begin(), itids.end(),
                                  std::back_inserter(inter));
            if (inter.size() == tids.size()) {
                closed = false;
                break;
            }
        }
        if (closed) out.push_back({items, static_cast<int>(tids.size()), tids});
    }
    std::sort(out.begin(), out.end(), [](const Itemset& a, const Itemset& b) {
        if (a.support != b.support) return a.support > b.support;
        return a.items < b.items;
    });
    return out;
}

// C_S =e=> R_S with its support and the handlers that exhibit it.
struct Specification {
    std::set<std::string> context;
    std::set<std::string> response;
    int support = 0;
    std::vector<std::string> handler_ids;

    std::string render() const {
        std::string out = "{";
        bool first = true;
        for (const auto& c : context) {
            if (!first) out += ", ";
            out += c;
            first = false;
        }
        out += "} =e=> {";
        first = true;
        for (const auto& r : response) {
            if (!first) out += ", ";
            out += r;
            first = false;
        }
        out += "}";
        return out;
    }
};

// Itemsets with at least one context and one response item become
// specifications, ranked by support, then by total size, then lexicographic.
inline std::vector<Specification> specs_from_itemsets(const std::vector<Itemset>& itemsets,
                                                      const std::vector<Transaction>& transactions) {
    std::vector<Specification> out;
    for (const auto& is : itemsets) {
        Specification s;
        for (const auto& item : is.items) {
            if (item.rfind("CTX:", 0) == 0) s.context.insert(item.substr(4));
            else if (item.rfind("RSP:", 0) == 0) s.response.insert(item.substr(4));
        }
        if (s.context.empty() || s.response.empty()) continue;
        s.support = is.support;
        for (int t : is.tids) s.handler_ids.push_back(transactions[t].handler_id);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const Specification& a, const Specification& b) {
        if (a.support != b.support) return a.support > b.support;
        std::size_t asz = a.context.size() + a.response.size();
        std::size_t bsz = b.context.size() + b.response.size();
        if (asz != bsz) return asz > bsz;
        return std::tie(a.context, a.response) < std::tie(b.context, b.response);
    });
    return out;
}

// A family of specifications that coincide after normalization by the
// partition function. The family's support is the normalized specification's
// support over normalized transactions, never a sum over members.
struct CrossImplSpec {
    Specification normalized;
    std::vector<Specification> members;
};

namespace detail {

inline int raw_support(const std::set<std::string>& context, const std::set<std::string>& response,
                       const std::vector<Transaction>& raw, std::vector<std::string>* ids) {
    int support = 0;
    for (const auto& t : raw) {
        bool ok = true;
        for (const auto& c : context)
            if (!t.items.count(ctx_item(c))) {
                ok = false;
                break;
            }
        if (ok)
            for (const auto& r : response)
                if (!t.items.count(rsp_item(r))) {
                    ok = false;
                    break;
                }
        if (ok) {
            ++support;
            if (ids) ids->push_back(t.handler_id);
        }
    }
    return support;
}

} // namespace detail

// Replaces each representative in the normalized specification with the
// concrete functions of its class, keeping every substitution that has
// support in the raw (unnormalized) handler corpus.
inline CrossImplSpec expand(const Specification& normalized, const PartitionFunction& pi,
                            const std::vector<ErrorHandler>& handlers) {
    CrossImplSpec x;
    x.normalized = normalized;

    auto classes = pi.classes();
    auto members_of = [&](const std::string& rep) {
        auto it = classes.find(rep);
        if (it == classes.end() || it->second.empty()) return std::vector<std::string>{rep};
        return it->second;
    };

    std::vector<Transaction> raw = build_transactions(handlers, PartitionFunction::identity());

    // candidate substitutions per slot, restricted to functions seen at all
    std::set<std::string> seen;
    for (const auto& t : raw)
        for (const auto& item : t.items) seen.insert(item.substr(4));

    std::vector<std::string> slots(normalized.context.begin(), normalized.context.end());
    std::size_t ctx_slots = slots.size();
    slots.insert(slots.end(), normalized.response.begin(), normalized.response.end());

    std::vector<std::vector<std::string>> choices;
    for (const auto& rep : slots) {
        std::vector<std::string> cand;
        for (const auto& m : members_of(rep))
            if (seen.count(m)) cand.push_back(m);
        if (cand.empty()) cand.push_back(rep);
        choices.push_back(std::move(cand));
    }

    std::vector<std::string> picked(slots.size());
    std::function<void(std::size_t)> emit = [&](std::size_t slot) {
        if (slot == slots.size()) {
            Specification m;
            m.context.insert(picked.begin(), picked.begin() + ctx_slots);
            m.response.insert(picked.begin() + ctx_slots, picked.end());
            m.support = detail::raw_support(m.context, m.response, raw, &m.handler_ids);
            if (m.support >= 1) x.members.push_back(std::move(m));
            return;
        }
        for (const auto& cand : choices[slot]) {
            picked[slot] = cand;
            emit(slot + 1);
        }
    };
    emit(0);

    std::sort(x.members.begin(), x.members.end(), [](const Specification& a, const Specification& b) {
        if (a.support != b.support) return a.support > b.support;
        return std::tie(a.context, a.response) < std::tie(b.context, b.response);
    });
    return x;
}

// S is applicable to H iff the whole context occurred (C_S subset of C_H) and
// the specification is not already discharged before the handler runs
// (C_S union R_S not a subset of C_H).
inline bool is_applicable(const Specification& s, const ErrorHandler& h) {
    for (const auto& c : s.context)
        if (!h.context.count(c)) return false;
    for (const auto& r : s.response)
        if (!h.context.count(r)) return true;
    return false;
}

inline bool is_satisfied(const Specification& s, const ErrorHandler& h) {
    if (!is_applicable(s, h)) return false;
    for (const auto& r : s.response)
        if (!h.response.count(r)) return false;
    return true;
}

inline bool cross_applicable(const CrossImplSpec& x, const ErrorHandler& h) {
    for (const auto& s : x.members)
        if (is_applicable(s, h)) return true;
    return false;
}

inline bool cross_satisfied(const CrossImplSpec& x, const ErrorHandler& h) {
    for (const auto& s : x.members)
        if (is_satisfied(s, h)) return true;
    return false;
}

struct ViolationReport {
    std::string handler_id;
    std::string function;
    std::string node;
    int spec_rank = 0;               // 1-based rank of the violated family
    Specification spec;              // best-matching applicable member
    std::vector<std::string> missing; // R_S minus R_H for that member
};

// One report per (family, handler) that is applicable but not satisfied.
// The report names the applicable member sharing the most response calls
// with the handler, so `missing` is the smallest honest repair.
inline std::vector<ViolationReport> find_violations(const std::vector<CrossImplSpec>& ranked,
                                                    const std::vector<ErrorHandler>& handlers) {
    std::vector<ViolationReport> out;
    for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
        const CrossImplSpec& x = ranked[rank];
        for (const auto& h : handlers) {
            if (!cross_applicable(x, h) || cross_satisfied(x, h)) continue;
            const Specification* best = nullptr;
            std::size_t best_overlap = 0;
            for (const auto& s : x.members) {
                if (!is_applicable(s, h)) continue;
                std::size_t overlap = 0;
                for (const auto& r : s.response) overlap += h.response.count(r);
                if (!best || overlap > best_overlap) {
                    best = &s;
                    best_overlap = overlap;
                }
            }
            ViolationReport v;
            v.handler_id = h.id();
            v.function = h.function;
            v.node = h.node;
            v.spec_rank = static_cast<int>(rank + 1);
            v.spec = *best;
            for (const auto& r : best->response)
                if (!h.response.count(r)) v.missing.push_back(r);
            out.push_back(std::move(v));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

inline Json spec_to_json(const Specification& s) {
    Json j = Json::object();
    j["context"] = std::vector<std::string>(s.context.begin(), s.context.end());
    j["response"] = std::vector<std::string>(s.response.begin(), s.response.end());
    j["support"] = s.support;
    j["handlers"] = s.handler_ids;
    return j;
}

inline Specification spec_from_json(const Json& j) {
    Specification s;
    for (const auto& c : j.at("context")) s.context.insert(c.get<std::string>());
    for (const auto& r : j.at("response")) s.response.insert(r.get<std::string>());
    if (j.contains("support")) s.support = j.at("support").get<int>();
    if (j.contains("handlers"))
        for (const auto& h : j.at("handlers")) s.handler_ids.push_back(h.get<std::string>());
    return s;
}

inline Json specs_to_json(const std::vector<CrossImplSpec>& specs, int min_support) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        Json j = spec_to_json(specs[i].normalized);
        j["rank"] = static_cast<int>(i + 1);
        if (!(specs[i].members.size() == 1 &&
              specs[i].members.front().context == specs[i].normalized.context &&
              specs[i].members.front().response == specs[i].normalized.response)) {
            Json members = Json::array();
            for (const auto& m : specs[i].members) members.push_back(spec_to_json(m));
            j["members"] = std::move(members);
        }
        arr.push_back(std::move(j));
    }
    return Json{{"min_support", min_support}, {"specs", std::move(arr)}};
}

inline std::vector<CrossImplSpec> specs_from_json(const Json& doc) {
    std::vector<CrossImplSpec> out;
    for (const auto& j : doc.at("specs")) {
        CrossImplSpec x;
        x.normalized = spec_from_json(j);
        if (j.contains("members"))
            for (const auto& m : j.at("members")) x.members.push_back(spec_from_json(m));
        else
            x.members.push_back(x.normalized);
        out.push_back(std::move(x));
    }
    return out;
}

inline std::string specs_text_report(const std::vector<CrossImplSpec>& specs) {
    std::ostringstream os;
    os << "rank support specification\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& x = specs[i];
        os << std::setw(4) << (i + 1) << ' ' << std::setw(7) << x.normalized.support << ' '
           << x.normalized.render() << '\n';
        bool expanded = !(x.members.size() == 1 &&
                          x.members.front().context == x.normalized.context &&
                          x.members.front().response == x.normalized.response);
        if (expanded)
            for (const auto& m : x.members)
                os << "             member " << std::setw(4) << m.support << ' ' << m.render() << '\n';
    }
    return os.str();
}

inline Json violations_to_json(const std::vector<ViolationReport>& vs) {
    Json arr = Json::array();
    for (const auto& v : vs) {
        Json j = Json::object();
        j["handler"] = v.handler_id;
        j["function"] = v.function;
        j["node"] = v.node;
        j["spec_rank"] = v.spec_rank;
        j["spec"] = spec_to_json(v.spec);
        j["missing"] = v.missing;
        arr.push_back(std::move(j));
    }
    return Json{{"violations", std::move(arr)}};
}

inline std::string violations_text_report(const std::vector<ViolationReport>& vs) {
    std::ostringstream os;
    if (vs.empty()) {
        os << "no violations\n";
        return os.str();
    }
    for (const auto& v : vs) {
        os << v.handler_id << " violates spec #" << v.spec_rank << ' ' << v.spec.render()
           << " : missing {";
        for (std::size_t i = 0; i < v.missing.size(); ++i) {
            if (i) os << ", ";
            os << v.missing[i];
        }
        os << "}\n";
    }
    return os.str();
}

} // namespace synmine
