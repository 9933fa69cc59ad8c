#pragma once

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "synmine/ir.hpp"

namespace synmine {

enum class LabelKind { Function, RecordType, Category, ErrorCode };

struct Label {
    LabelKind kind;
    std::string name;
    std::string rendered;
};

// A label renders as its bare name unless that name is taken by a label of a
// more primitive kind, in which case it is prefixed. Categories come from a
// fixed enumeration and always render bare; the escape order is
// category < error code < record type < function.
inline std::string render_label(LabelKind kind, const std::string& name, const Program& p) {
    switch (kind) {
    case LabelKind::Category:
        return name;
    case LabelKind::ErrorCode:
        return is_instruction_category(name) ? "err:" + name : name;
    case LabelKind::RecordType:
        return (is_instruction_category(name) || p.has_error_code(name)) ? "ty:" + name : name;
    case LabelKind::Function:
        return (is_instruction_category(name) || p.has_error_code(name) || p.has_record_type(name))
                   ? "fn:" + name
                   : name;
    }
    return name;
}

// Rule shapes per |rhs|: 0 = pop, 1 = internal, 2 = push. Only internal rules
// carry labels.
struct LabeledRule {
    std::string lhs;
    std::vector<std::string> rhs;
    std::vector<std::uint32_t> labels; // indices into Lpds::labels

    bool is_pop() const { return rhs.empty(); }
    bool is_internal() const { return rhs.size() == 1; }
    bool is_push() const { return rhs.size() == 2; }
};

struct Configuration {
    std::vector<std::string> stack;        // top first
    std::vector<std::uint32_t> emitted;    // label indices, in emission order
};

struct Lpds {
    std::vector<Label> labels;
    std::vector<LabeledRule> rules;
    std::unordered_map<std::string, std::vector<std::uint32_t>> rules_by_lhs;
    std::vector<std::vector<std::uint32_t>> rules_by_label; // parallel to labels
    std::unordered_map<std::string, std::uint32_t> label_index; // rendered -> index
    std::vector<std::string> declared_unused; // declared labels that occur in no rule

    const Label& label(std::uint32_t i) const { return labels[i]; }

    const std::uint32_t* find_label(const std::string& rendered) const {
        auto it = label_index.find(rendered);
        return it == label_index.end() ? nullptr : &it->second;
    }

    std::vector<std::string> render(const std::vector<std::uint32_t>& ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (auto i : ids) out.push_back(labels[i].rendered);
        return out;
    }
};

namespace detail {

class Encoder {
public:
    explicit Encoder(const Program& p) : p_(p) {}

    Lpds run() {
        auto diags = validate(p_);
        if (has_errors(diags)) {
            std::string msg = "cannot encode invalid program";
            for (const auto& d : diags)
                if (d.severity == Diagnostic::Severity::Error) {
                    msg += ": " + d.function + "/" + d.node + ": " + d.message;
                    break;
                }
            throw ValidationError(msg);
        }
        collect_symbols();
        for (const auto& f : p_.functions) encode_function(f);
        collect_unused();
        return std::move(out_);
    }

private:
    // Stack symbols are node ids qualified by function only when the bare id
    // is ambiguous across the program.
    void collect_symbols() {
        std::unordered_map<std::string, int> uses;
        auto count = [&](const std::string& id) { uses[id]++; };
        for (const auto& f : p_.functions) {
            for (const auto& id : f.node_order) {
                count(id);
                const Instruction& in = f.node(id).instr;
                if (in.kind == InstrKind::Return) count(exit_symbol(id, in));
            }
        }
        for (const auto& [name, ext] : p_.externals)
            if (!ext.entry.empty()) count(ext.entry);

        for (const auto& f : p_.functions) {
            for (const auto& id : f.node_order) {
                symbol_[f.name + "\x1f" + id] = uses[id] > 1 ? f.name + "::" + id : id;
                const Instruction& in = f.node(id).instr;
                if (in.kind == InstrKind::Return) {
                    std::string ex = exit_symbol(id, in);
                    symbol_[f.name + "\x1f" + ex] = uses[ex] > 1 ? f.name + "::" + ex : ex;
                }
            }
        }
        for (const auto& [name, ext] : p_.externals)
            if (!ext.entry.empty())
                external_entry_[name] = uses[ext.entry] > 1 ? name + "::" + ext.entry : ext.entry;
    }

    std::string sym(const FunctionDef& f, const std::string& id) const {
        return symbol_.at(f.name + "\x1f" + id);
    }

    std::uint32_t intern(LabelKind kind, const std::string& name) {
        std::string rendered = render_label(kind, name, p_);
        auto it = out_.label_index.find(rendered);
        if (it != out_.label_index.end()) return it->second;
        std::uint32_t idx = static_cast<std::uint32_t>(out_.labels.size());
        out_.labels.push_back({kind, name, rendered});
        out_.rules_by_label.emplace_back();
        out_.label_index.emplace(rendered, idx);
        return idx;
    }

    // Label order within a rule is fixed: record type, categories in declared
    // order, error code, function. A return of a constant error emits that
    // code's label even without an explicit error_code annotation.
    std::vector<std::uint32_t> labels_for(const Instruction& in) {
        std::vector<std::uint32_t> out;
        if (!in.record_type.empty()) out.push_back(intern(LabelKind::RecordType, in.record_type));
        for (const auto& c : in.categories) out.push_back(intern(LabelKind::Category, c));
        std::string code = in.error_code;
        if (code.empty() && in.kind == InstrKind::Return && in.ret == ReturnKind::ConstError)
            code = in.ret_error;
        if (!code.empty()) out.push_back(intern(LabelKind::ErrorCode, code));
        if (in.kind == InstrKind::Call) out.push_back(intern(LabelKind::Function, in.callee));
        return out;
    }

    void add_rule(std::string lhs, std::vector<std::string> rhs, std::vector<std::uint32_t> labels) {
        std::uint32_t idx = static_cast<std::uint32_t>(out_.rules.size());
        for (auto l : labels) out_.rules_by_label[l].push_back(idx);
        out_.rules_by_lhs[lhs].push_back(idx);
        out_.rules.push_back({std::move(lhs), std::move(rhs), std::move(labels)});
    }

    // Per node u with successor v: internal rule <u> -> <v> carrying u's
    // labels. A call to a callee with a known entry additionally gets the push
    // rule <u> -> <entry v>; the labeled internal rule doubles as the summary
    // edge the walk may take instead of descending. Each return node connects
    // to its own exit symbol, which carries the pop.
    void encode_function(const FunctionDef& f) {
        for (const auto& id : f.node_order) {
            const Node& n = f.node(id);
            const Instruction& in = n.instr;

            if (in.kind == InstrKind::Call && !n.succ.empty()) {
                std::string entry = callee_entry(in.callee);
                if (!entry.empty())
                    add_rule(sym(f, id), {entry, sym(f, n.succ[0])}, {});
            }
            for (const auto& s : n.succ)
                add_rule(sym(f, id), {sym(f, s)}, labels_for(in));
            if (in.kind == InstrKind::Return) {
                std::string exit = sym(f, exit_symbol(id, in));
                add_rule(sym(f, id), {exit}, labels_for(in));
                add_rule(exit, {}, {});
            }
        }
    }

    // Defined callees step into their entry node. Externals normally have no
    // body to enter and produce only the summary rule; an external that
    // declares an entry symbol gets the push rule too, with nothing behind it.
    std::string callee_entry(const std::string& callee) {
        if (const FunctionDef* g = p_.function(callee)) return sym(*g, g->entry);
        auto it = external_entry_.find(callee);
        return it == external_entry_.end() ? std::string() : it->second;
    }

    void collect_unused() {
        auto check = [&](LabelKind kind, const std::string& name) {
            std::string rendered = render_label(kind, name, p_);
            if (!out_.label_index.count(rendered)) out_.declared_unused.push_back(rendered);
        };
        for (const auto& f : p_.functions) check(LabelKind::Function, f.name);
        for (const auto& [name, ext] : p_.externals) check(LabelKind::Function, name);
        for (const auto& [name, v] : p_.error_codes) check(LabelKind::ErrorCode, name);
        for (const auto& t : p_.record_types) check(LabelKind::RecordType, t);
    }

    const Program& p_;
    Lpds out_;
    std::unordered_map<std::string, std::string> symbol_;
    std::unordered_map<std::string, std::string> external_entry_;
};

} // namespace detail

inline Lpds encode(const Program& p) { return detail::Encoder(p).run(); }

struct Successor {
    std::uint32_t rule;
    Configuration config;
};

// One successor per rule whose lhs matches the top of the stack, in rule
// order. A configuration with an empty stack has no successors.
inline std::vector<Successor> successors(const Lpds& l, const Configuration& c) {
    std::vector<Successor> out;
    if (c.stack.empty()) return out;
    auto it = l.rules_by_lhs.find(c.stack.front());
    if (it == l.rules_by_lhs.end()) return out;
    for (std::uint32_t ri : it->second) {
        const LabeledRule& r = l.rules[ri];
        Configuration next;
        next.stack.reserve(r.rhs.size() + c.stack.size() - 1);
        next.stack.insert(next.stack.end(), r.rhs.begin(), r.rhs.end());
        next.stack.insert(next.stack.end(), c.stack.begin() + 1, c.stack.end());
        next.emitted = c.emitted;
        next.emitted.insert(next.emitted.end(), r.labels.begin(), r.labels.end());
        out.push_back({ri, std::move(next)});
    }
    return out;
}

inline std::string format_rule(const Lpds& l, const LabeledRule& r) {
    std::string out = "⟨" + r.lhs + "⟩ -> ⟨";
    for (std::size_t i = 0; i < r.rhs.size(); ++i) {
        if (i) out += ' ';
        out += r.rhs[i];
    }
    out += "⟩";
    if (!r.labels.empty()) {
        out += " : ";
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            if (i) out += ',';
            out += l.labels[r.labels[i]].rendered;
        }
    }
    return out;
}

inline std::string dump_rules(const Lpds& l) {
    std::string out;
    for (const auto& r : l.rules) {
        out += format_rule(l, r);
        out += '\n';
    }
    return out;
}

} // namespace synmine
