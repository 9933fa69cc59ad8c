#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "synmine/ir.hpp"

namespace synmine {

using VarCodes = std::map<std::string, std::set<std::string>>;

// May-hold-error facts: per function the set of error codes it may return,
// and per node the variable states on entry to that node. Least fixpoint:
// a call plants its callee's may-return set into the result variable, assigns
// copy it, joins union, and function summaries iterate over the call graph
// until stable.
struct MayErrorFacts {
    std::map<std::string, std::set<std::string>> may_return;
    std::map<std::string, std::map<std::string, VarCodes>> entry_state; // function -> node -> vars

    const std::set<std::string>& codes(const std::string& fn, const std::string& node,
                                       const std::string& var) const {
        static const std::set<std::string> empty;
        auto f = entry_state.find(fn);
        if (f == entry_state.end()) return empty;
        auto n = f->second.find(node);
        if (n == f->second.end()) return empty;
        auto v = n->second.find(var);
        return v == n->second.end() ? empty : v->second;
    }
};

namespace detail {

inline std::map<std::string, std::vector<std::string>> predecessors(const FunctionDef& f) {
    std::map<std::string, std::vector<std::string>> preds;
    for (const auto& id : f.node_order)
        for (const auto& s : f.node(id).succ) preds[s].push_back(id);
    return preds;
}

inline bool join_into(VarCodes& dst, const VarCodes& src) {
    bool grew = false;
    for (const auto& [var, codes] : src) {
        auto& d = dst[var];
        for (const auto& c : codes) grew |= d.insert(c).second;
    }
    return grew;
}

inline VarCodes transfer(const MayErrorFacts& facts, const Instruction& in, VarCodes state) {
    switch (in.kind) {
    case InstrKind::Call:
        if (!in.result_var.empty()) {
            auto it = facts.may_return.find(in.callee);
            state[in.result_var] =
                it == facts.may_return.end() ? std::set<std::string>{} : it->second;
        }
        break;
    case InstrKind::Assign:
        state[in.lhs] = state.count(in.rhs_var) ? state[in.rhs_var] : std::set<std::string>{};
        break;
    default:
        break;
    }
    return state;
}

} // namespace detail

inline MayErrorFacts may_error(const Program& p) {
    MayErrorFacts facts;
    for (const auto& [name, ext] : p.externals)
        facts.may_return[name] = {ext.may_return_errors.begin(), ext.may_return_errors.end()};
    for (const auto& f : p.functions) facts.may_return[f.name];

    bool summaries_changed = true;
    while (summaries_changed) {
        summaries_changed = false;
        for (const auto& f : p.functions) {
            auto& states = facts.entry_state[f.name];
            // intraprocedural fixpoint, worklist in document order
            bool changed = true;
            while (changed) {
                changed = false;
                for (const auto& id : f.node_order) {
                    const Node& n = f.node(id);
                    VarCodes out = detail::transfer(facts, n.instr, states[id]);
                    for (const auto& s : n.succ)
                        changed |= detail::join_into(states[s], out);
                }
            }
            std::set<std::string> ret;
            for (const auto& id : f.node_order) {
                const Instruction& in = f.node(id).instr;
                if (in.kind != InstrKind::Return) continue;
                if (in.ret == ReturnKind::ConstError) ret.insert(in.ret_error);
                else if (in.ret == ReturnKind::Var) {
                    const auto& codes = states[id];
                    auto it = codes.find(in.ret_var);
                    if (it != codes.end()) ret.insert(it->second.begin(), it->second.end());
                }
            }
            auto& summary = facts.may_return[f.name];
            for (const auto& c : ret) summaries_changed |= summary.insert(c).second;
        }
    }
    return facts;
}

enum class HandlerTechnique { BranchTest, ErrorReturn };

inline const char* technique_name(HandlerTechnique t) {
    return t == HandlerTechnique::BranchTest ? "branch-test" : "error-return";
}

// An error handler is identified by the branch (technique 1) or error-return
// node (technique 2) that anchors it. C_H holds the functions called before
// the error was detected, R_H those called in reaction to it.
struct ErrorHandler {
    std::string function;
    std::string node;
    HandlerTechnique technique = HandlerTechnique::BranchTest;
    std::set<std::string> context;
    std::set<std::string> response;

    std::string id() const { return function + "@" + node; }

    bool operator<(const ErrorHandler& o) const {
        return std::tie(function, node) < std::tie(o.function, o.node);
    }
};

namespace detail {

inline std::set<std::string> forward_reachable(const FunctionDef& f, const std::string& from) {
    std::set<std::string> seen;
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        if (!seen.insert(cur).second) continue;
        for (const auto& s : f.node(cur).succ)
            if (!seen.count(s)) stack.push_back(s);
    }
    return seen;
}

// Start node of the maximal straight-line block ending at `node`: walk up
// while the predecessor is unique and itself falls straight through.
inline std::string region_start(const FunctionDef& f,
                                const std::map<std::string, std::vector<std::string>>& preds,
                                std::string node) {
    for (;;) {
        auto it = preds.find(node);
        if (it == preds.end() || it->second.size() != 1) return node;
        const std::string& p = it->second.front();
        if (f.node(p).succ.size() != 1) return node;
        if (f.node(p).instr.kind == InstrKind::Branch) return node;
        node = p;
    }
}

// The call whose result feeds a branch test, found by chasing the test
// variable up the straight-line chain through copies. This call is the one
// being checked and is excluded from the handler context.
inline std::string feeding_call(const FunctionDef& f,
                                const std::map<std::string, std::vector<std::string>>& preds,
                                const std::string& branch) {
    std::set<std::string> targets{f.node(branch).instr.test_var};
    std::string cur = branch;
    for (;;) {
        auto it = preds.find(cur);
        if (it == preds.end() || it->second.size() != 1) return "";
        cur = it->second.front();
        const Instruction& in = f.node(cur).instr;
        if (in.kind == InstrKind::Call && !in.result_var.empty() && targets.count(in.result_var))
            return cur;
        if (in.kind == InstrKind::Assign && targets.count(in.lhs)) {
            targets.erase(in.lhs);
            targets.insert(in.rhs_var);
        }
        if (in.kind == InstrKind::Branch) return "";
    }
}

} // namespace detail

// Technique 1: branches whose test variable may hold an error code.
// Technique 2: returns of an error constant or a may-error variable, unless
// the return already lies inside a technique-1 handler's error region.
// Context and response sets are left empty; see extract_context_response.
inline std::vector<ErrorHandler> find_handlers(const Program& p, const MayErrorFacts& facts) {
    std::vector<ErrorHandler> out;
    for (const auto& f : p.functions) {
        std::vector<std::string> branch_roots;
        std::vector<ErrorHandler> found;
        for (const auto& id : f.node_order) {
            const Instruction& in = f.node(id).instr;
            if (in.kind != InstrKind::Branch) continue;
            if (!facts.codes(f.name, id, in.test_var).empty()) {
                found.push_back({f.name, id, HandlerTechnique::BranchTest, {}, {}});
                branch_roots.push_back(in.error_succ);
            }
        }
        std::set<std::string> covered;
        for (const auto& root : branch_roots) {
            auto reach = detail::forward_reachable(f, root);
            covered.insert(reach.begin(), reach.end());
        }
        for (const auto& id : f.node_order) {
            const Instruction& in = f.node(id).instr;
            if (in.kind != InstrKind::Return) continue;
            bool errors = in.ret == ReturnKind::ConstError ||
                          (in.ret == ReturnKind::Var &&
                           !facts.codes(f.name, id, in.ret_var).empty());
            if (errors && !covered.count(id))
                found.push_back({f.name, id, HandlerTechnique::ErrorReturn, {}, {}});
        }
        std::sort(found.begin(), found.end());
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

// C_H: calls on acyclic backward paths from the guarding branch to entry.
// Intervening branches may only be crossed through their normal side, so the
// context reflects calls that succeeded, and the call feeding the guarding
// test is skipped: it is the failing call, not part of the prior context.
// R_H: calls on acyclic forward paths from the error-side root.
inline void extract_context_response(const Program& p, ErrorHandler& h) {
    const FunctionDef& f = *p.function(h.function);
    auto preds = detail::predecessors(f);

    std::string response_root;
    std::string guard;
    if (h.technique == HandlerTechnique::BranchTest) {
        guard = h.node;
        response_root = f.node(h.node).instr.error_succ;
    } else {
        response_root = detail::region_start(f, preds, h.node);
        auto it = preds.find(response_root);
        if (it != preds.end() && it->second.size() == 1) {
            const std::string& q = it->second.front();
            const Instruction& qi = f.node(q).instr;
            if (qi.kind == InstrKind::Branch && qi.error_succ == response_root) guard = q;
        }
    }

    std::string excluded_call;
    std::string context_start = guard.empty() ? response_root : guard;
    if (!guard.empty()) excluded_call = detail::feeding_call(f, preds, guard);

    h.context.clear();
    std::set<std::string> on_path;
    std::function<void(const std::string&)> backward = [&](const std::string& cur) {
        if (!on_path.insert(cur).second) return;
        auto it = preds.find(cur);
        if (it != preds.end()) {
            for (const auto& q : it->second) {
                const Instruction& qi = f.node(q).instr;
                if (qi.kind == InstrKind::Branch && qi.normal_succ != cur && q != guard) continue;
                if (qi.kind == InstrKind::Call && q != excluded_call) h.context.insert(qi.callee);
                backward(q);
            }
        }
        on_path.erase(cur);
    };
    backward(context_start);

    h.response.clear();
    std::set<std::string> fwd_path;
    std::function<void(const std::string&)> forward = [&](const std::string& cur) {
        if (!fwd_path.insert(cur).second) return;
        const Node& n = f.node(cur);
        if (n.instr.kind == InstrKind::Call) h.response.insert(n.instr.callee);
        for (const auto& s : n.succ) forward(s);
        fwd_path.erase(cur);
    };
    forward(response_root);
}

inline std::vector<ErrorHandler> analyze_handlers(const Program& p) {
    auto facts = may_error(p);
    auto handlers = find_handlers(p, facts);
    for (auto& h : handlers) extract_context_response(p, h);
    return handlers;
}

// ---------------------------------------------------------------------------
// Handlers file (miner input)

inline Json handlers_to_json(const std::vector<ErrorHandler>& handlers) {
    Json arr = Json::array();
    for (const auto& h : handlers) {
        Json jh = Json::object();
        jh["function"] = h.function;
        jh["node"] = h.node;
        jh["technique"] = technique_name(h.technique);
        jh["context"] = std::vector<std::string>(h.context.begin(), h.context.end());
        jh["response"] = std::vector<std::string>(h.response.begin(), h.response.end());
        arr.push_back(std::move(jh));
    }
    return Json{{"handlers", std::move(arr)}};
}

inline std::vector<ErrorHandler> handlers_from_json(const Json& doc) {
    std::vector<ErrorHandler> out;
    for (const auto& jh : doc.at("handlers")) {
        ErrorHandler h;
        h.function = jh.at("function").get<std::string>();
        h.node = jh.at("node").get<std::string>();
        std::string t = jh.at("technique").get<std::string>();
        if (t == "branch-test") h.technique = HandlerTechnique::BranchTest;
        else if (t == "error-return") h.technique = HandlerTechnique::ErrorReturn;
        else throw std::runtime_error("unknown handler technique '" + t + "'");
        for (const auto& c : jh.at("context")) h.context.insert(c.get<std::string>());
        for (const auto& r : jh.at("response")) h.response.insert(r.get<std::string>());
        out.push_back(std::move(h));
    }
    return out;
}

inline std::string handlers_text_report(const std::vector<ErrorHandler>& handlers) {
    std::string out;
    for (const auto& h : handlers) {
        out += h.id();
        out += " (";
        out += technique_name(h.technique);
        out += ")\n  context :";
        for (const auto& c : h.context) out += " " + c;
        out += "\n  response:";
        for (const auto& r : h.response) out += " " + r;
        out += "\n";
    }
    return out;
}

} // namespace synmine
