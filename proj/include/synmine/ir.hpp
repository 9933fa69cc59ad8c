#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace synmine {

using Json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Instruction categories admitted by the interchange format. A label is
// reserved for each of these whether or not a given program uses it.
inline const std::vector<std::string>& instruction_categories() {
    static const std::vector<std::string> cats = {
        "LOAD", "STORE", "EQ", "NE", "LT", "LE", "GT", "GE",
        "ADD", "SUB", "MUL", "DIV", "AND", "OR", "XOR", "SHL", "SHR",
        "PHI", "CAST", "RET",
    };
    return cats;
}

inline bool is_instruction_category(const std::string& name) {
    const auto& cats = instruction_categories();
    return std::find(cats.begin(), cats.end(), name) != cats.end();
}

enum class InstrKind { Call, Branch, Return, Assign, Plain };

enum class ReturnKind { Ok, Var, ConstError };

struct Instruction {
    InstrKind kind = InstrKind::Plain;

    // call
    std::string callee;
    std::string result_var; // optional

    // branch
    std::string test_var;
    std::string error_succ;
    std::string normal_succ;

    // return
    ReturnKind ret = ReturnKind::Ok;
    std::string ret_var;    // ReturnKind::Var
    std::string ret_error;  // ReturnKind::ConstError
    std::string exit_id;    // optional stack symbol for the synthetic exit

    // assign
    std::string lhs;
    std::string rhs_var;

    // any kind
    std::vector<std::string> categories;
    std::string record_type; // optional
    std::string error_code;  // optional
};

struct Node {
    Instruction instr;
    std::vector<std::string> succ;
};

struct FunctionDef {
    std::string name;
    std::string entry;
    std::vector<std::string> node_order; // document order
    std::unordered_map<std::string, Node> nodes;

    const Node* find_node(const std::string& id) const {
        auto it = nodes.find(id);
        return it == nodes.end() ? nullptr : &it->second;
    }
    const Node& node(const std::string& id) const {
        auto it = nodes.find(id);
        if (it == nodes.end()) throw std::out_of_range("no node " + id);
        return it->second;
    }
};

struct ExternalDecl {
    std::vector<std::string> may_return_errors;
    std::string entry; // optional stack symbol; see encode()
};

struct Program {
    std::vector<std::pair<std::string, long long>> error_codes; // name -> negative value
    std::vector<std::string> record_types;
    std::vector<std::pair<std::string, ExternalDecl>> externals;
    std::vector<FunctionDef> functions;

    bool has_error_code(const std::string& name) const {
        for (const auto& [n, v] : error_codes)
            if (n == name) return true;
        return false;
    }
    bool has_record_type(const std::string& name) const {
        return std::find(record_types.begin(), record_types.end(), name) != record_types.end();
    }
    const FunctionDef* function(const std::string& name) const {
        for (const auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
    const ExternalDecl* external(const std::string& name) const {
        for (const auto& [n, e] : externals)
            if (n == name) return &e;
        return nullptr;
    }
    bool is_callee(const std::string& name) const {
        return function(name) != nullptr || external(name) != nullptr;
    }
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string function; // empty for program-level findings
    std::string node;     // empty when not node-specific
    std::string message;

    bool operator<(const Diagnostic& o) const {
        return std::tie(function, node, message) < std::tie(o.function, o.node, o.message);
    }
};

inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline std::string exit_symbol(const std::string& node_id, const Instruction& instr) {
    return instr.exit_id.empty() ? node_id + "__exit" : instr.exit_id;
}

} // namespace detail

inline std::vector<Diagnostic> validate(const Program& p) {
    std::vector<Diagnostic> diags;
    auto error = [&](std::string fn, std::string node, std::string msg) {
        diags.push_back({Diagnostic::Severity::Error, std::move(fn), std::move(node), std::move(msg)});
    };
    auto warning = [&](std::string fn, std::string node, std::string msg) {
        diags.push_back({Diagnostic::Severity::Warning, std::move(fn), std::move(node), std::move(msg)});
    };

    for (const auto& [name, value] : p.error_codes) {
        if (!is_identifier(name)) error("", "", "error code name '" + name + "' is not an identifier");
        if (value >= 0) error("", "", "error code " + name + " must have a negative value");
    }
    for (const auto& t : p.record_types)
        if (!is_identifier(t)) error("", "", "record type name '" + t + "' is not an identifier");

    std::set<std::string> callable;
    for (const auto& [name, ext] : p.externals) {
        if (!is_identifier(name)) error("", "", "external name '" + name + "' is not an identifier");
        if (!callable.insert(name).second) error("", "", "duplicate function name " + name);
        for (const auto& c : ext.may_return_errors)
            if (!p.has_error_code(c))
                error("", "", "external " + name + " references unknown error code " + c);
    }
    for (const auto& f : p.functions) {
        if (!is_identifier(f.name)) error("", "", "function name '" + f.name + "' is not an identifier");
        if (!callable.insert(f.name).second) error("", "", "duplicate function name " + f.name);
    }

    for (const auto& f : p.functions) {
        if (f.node_order.empty()) {
            error(f.name, "", "function has no nodes");
            continue;
        }
        if (!f.nodes.count(f.entry)) error(f.name, "", "entry node " + f.entry + " does not exist");

        std::set<std::string> exit_symbols;
        for (const auto& id : f.node_order) {
            const Node& n = f.node(id);
            const Instruction& in = n.instr;

            for (const auto& s : n.succ)
                if (!f.nodes.count(s))
                    error(f.name, id, "successor " + s + " does not exist");

            switch (in.kind) {
            case InstrKind::Return:
                if (!n.succ.empty()) error(f.name, id, "return node must have zero successors");
                if (in.ret == ReturnKind::ConstError && !p.has_error_code(in.ret_error))
                    error(f.name, id, "return references unknown error code " + in.ret_error);
                break;
            case InstrKind::Branch: {
                if (n.succ.size() != 2)
                    error(f.name, id, "branch node must have exactly two successors");
                else if (n.succ[0] != in.error_succ || n.succ[1] != in.normal_succ)
                    error(f.name, id, "branch successors must be [error_succ, normal_succ]");
                if (in.test_var.empty()) error(f.name, id, "branch has no test_var");
                break;
            }
            case InstrKind::Call:
                if (n.succ.size() > 1) error(f.name, id, "call node must have at most one successor");
                if (!p.is_callee(in.callee))
                    error(f.name, id, "unknown callee " + in.callee);
                break;
            case InstrKind::Assign:
                if (n.succ.size() > 1) error(f.name, id, "assign node must have at most one successor");
                if (in.lhs.empty() || in.rhs_var.empty()) error(f.name, id, "assign needs lhs and rhs_var");
                break;
            case InstrKind::Plain:
                if (n.succ.size() > 1) error(f.name, id, "plain node must have at most one successor");
                break;
            }

            for (const auto& c : in.categories)
                if (!is_instruction_category(c))
                    error(f.name, id, "unknown instruction category " + c);
            if (!in.record_type.empty() && !p.has_record_type(in.record_type))
                error(f.name, id, "unknown record type " + in.record_type);
            if (!in.error_code.empty() && !p.has_error_code(in.error_code))
                error(f.name, id, "unknown error code " + in.error_code);

            if (in.kind == InstrKind::Return) {
                std::string exit = detail::exit_symbol(id, in);
                if (f.nodes.count(exit))
                    error(f.name, id, "exit symbol " + exit + " collides with a node id");
                if (!exit_symbols.insert(exit).second)
                    error(f.name, id, "exit symbol " + exit + " is not unique");
            }
        }

        // reachability from entry
        if (f.nodes.count(f.entry)) {
            std::set<std::string> seen;
            std::vector<std::string> stack{f.entry};
            while (!stack.empty()) {
                std::string cur = stack.back();
                stack.pop_back();
                if (!seen.insert(cur).second) continue;
                const Node* n = f.find_node(cur);
                if (!n) continue;
                for (const auto& s : n->succ)
                    if (!seen.count(s)) stack.push_back(s);
            }
            for (const auto& id : f.node_order)
                if (!seen.count(id)) warning(f.name, id, "node is unreachable from entry");
        }
    }

    std::sort(diags.begin(), diags.end());
    return diags;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::Error) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing key '" + key + "'");
    return *it;
}

inline std::string require_string(const Json& j, const char* key, const std::string& where) {
    const Json& v = require(j, key, where);
    if (!v.is_string()) throw ParseError(where + ": key '" + key + "' must be a string");
    return v.get<std::string>();
}

inline Instruction parse_instruction(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": instr must be an object");
    Instruction in;
    std::string kind = require_string(j, "kind", where);
    if (kind == "call") {
        in.kind = InstrKind::Call;
        in.callee = require_string(j, "callee", where);
        if (j.contains("result_var")) in.result_var = j.at("result_var").get<std::string>();
    } else if (kind == "branch") {
        in.kind = InstrKind::Branch;
        in.test_var = require_string(j, "test_var", where);
        in.error_succ = require_string(j, "error_succ", where);
        in.normal_succ = require_string(j, "normal_succ", where);
    } else if (kind == "return") {
        in.kind = InstrKind::Return;
        const Json& v = require(j, "value", where);
        if (v.is_string() && v.get<std::string>() == "ok") {
            in.ret = ReturnKind::Ok;
        } else if (v.is_object() && v.contains("var")) {
            in.ret = ReturnKind::Var;
            in.ret_var = v.at("var").get<std::string>();
        } else if (v.is_object() && v.contains("const_error")) {
            in.ret = ReturnKind::ConstError;
            in.ret_error = v.at("const_error").get<std::string>();
        } else {
            throw ParseError(where + ": return value must be \"ok\", {\"var\": ...} or {\"const_error\": ...}");
        }
        if (j.contains("exit")) in.exit_id = j.at("exit").get<std::string>();
    } else if (kind == "assign") {
        in.kind = InstrKind::Assign;
        in.lhs = require_string(j, "lhs", where);
        in.rhs_var = require_string(j, "rhs_var", where);
    } else if (kind == "plain") {
        in.kind = InstrKind::Plain;
    } else {
        throw ParseError(where + ": unknown instruction kind '" + kind + "'");
    }
    if (j.contains("categories")) {
        if (!j.at("categories").is_array()) throw ParseError(where + ": categories must be an array");
        for (const auto& c : j.at("categories")) in.categories.push_back(c.get<std::string>());
    }
    if (j.contains("record_type")) in.record_type = j.at("record_type").get<std::string>();
    if (j.contains("error_code")) in.error_code = j.at("error_code").get<std::string>();
    return in;
}

} // namespace detail

inline Program parse_program(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("syntax error: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("top-level document must be an object");

    Program p;
    if (doc.contains("error_codes")) {
        const Json& ec = doc.at("error_codes");
        if (!ec.is_object()) throw ParseError("error_codes must be an object");
        for (auto it = ec.begin(); it != ec.end(); ++it) {
            if (!it.value().is_number_integer())
                throw ParseError("error code " + it.key() + " must map to an integer");
            p.error_codes.emplace_back(it.key(), it.value().get<long long>());
        }
    }
    if (doc.contains("record_types")) {
        for (const auto& t : doc.at("record_types")) p.record_types.push_back(t.get<std::string>());
    }
    if (doc.contains("externals")) {
        const Json& ex = doc.at("externals");
        if (!ex.is_object()) throw ParseError("externals must be an object");
        for (auto it = ex.begin(); it != ex.end(); ++it) {
            ExternalDecl d;
            const Json& v = it.value();
            if (!v.is_object()) throw ParseError("external " + it.key() + " must be an object");
            for (const auto& c : detail::require(v, "may_return_errors", "external " + it.key()))
                d.may_return_errors.push_back(c.get<std::string>());
            if (v.contains("entry")) d.entry = v.at("entry").get<std::string>();
            p.externals.emplace_back(it.key(), std::move(d));
        }
    }
    for (const auto& jf : detail::require(doc, "functions", "document")) {
        FunctionDef f;
        f.name = detail::require_string(jf, "name", "function");
        f.entry = detail::require_string(jf, "entry", "function " + f.name);
        const Json& nodes = detail::require(jf, "nodes", "function " + f.name);
        if (!nodes.is_object()) throw ParseError("function " + f.name + ": nodes must be an object");
        for (auto it = nodes.begin(); it != nodes.end(); ++it) {
            const std::string where = f.name + "." + it.key();
            Node n;
            n.instr = detail::parse_instruction(detail::require(it.value(), "instr", where), where);
            for (const auto& s : detail::require(it.value(), "succ", where))
                n.succ.push_back(s.get<std::string>());
            if (f.nodes.count(it.key())) throw ParseError(where + ": duplicate node id");
            f.node_order.push_back(it.key());
            f.nodes.emplace(it.key(), std::move(n));
        }
        p.functions.push_back(std::move(f));
    }

    auto diags = validate(p);
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::Error)
            throw ValidationError(d.function.empty() ? d.message
                                                     : d.function + "/" + d.node + ": " + d.message);
    return p;
}

// ---------------------------------------------------------------------------
// Canonical serialization. parse(serialize(p)) reproduces p exactly.

inline Json instruction_to_json(const Instruction& in) {
    Json j = Json::object();
    switch (in.kind) {
    case InstrKind::Call:
        j["kind"] = "call";
        j["callee"] = in.callee;
        if (!in.result_var.empty()) j["result_var"] = in.result_var;
        break;
    case InstrKind::Branch:
        j["kind"] = "branch";
        j["test_var"] = in.test_var;
        j["error_succ"] = in.error_succ;
        j["normal_succ"] = in.normal_succ;
        break;
    case InstrKind::Return:
        j["kind"] = "return";
        if (in.ret == ReturnKind::Ok) j["value"] = "ok";
        else if (in.ret == ReturnKind::Var) j["value"] = Json{{"var", in.ret_var}};
        else j["value"] = Json{{"const_error", in.ret_error}};
        if (!in.exit_id.empty()) j["exit"] = in.exit_id;
        break;
    case InstrKind::Assign:
        j["kind"] = "assign";
        j["lhs"] = in.lhs;
        j["rhs_var"] = in.rhs_var;
        break;
    case InstrKind::Plain:
        j["kind"] = "plain";
        break;
    }
    if (!in.categories.empty()) j["categories"] = in.categories;
    if (!in.record_type.empty()) j["record_type"] = in.record_type;
    if (!in.error_code.empty()) j["error_code"] = in.error_code;
    return j;
}

inline std::string serialize_program(const Program& p) {
    Json doc = Json::object();
    Json ec = Json::object();
    for (const auto& [n, v] : p.error_codes) ec[n] = v;
    doc["error_codes"] = std::move(ec);
    doc["record_types"] = p.record_types;
    Json ex = Json::object();
    for (const auto& [n, d] : p.externals) {
        Json je = Json::object();
        je["may_return_errors"] = d.may_return_errors;
        if (!d.entry.empty()) je["entry"] = d.entry;
        ex[n] = std::move(je);
    }
    doc["externals"] = std::move(ex);
    Json fns = Json::array();
    for (const auto& f : p.functions) {
        Json jf = Json::object();
        jf["name"] = f.name;
        jf["entry"] = f.entry;
        Json nodes = Json::object();
        for (const auto& id : f.node_order) {
            const Node& n = f.node(id);
            Json jn = Json::object();
            jn["instr"] = instruction_to_json(n.instr);
            jn["succ"] = n.succ;
            nodes[id] = std::move(jn);
        }
        jf["nodes"] = std::move(nodes);
        fns.push_back(std::move(jf));
    }
    doc["functions"] = std::move(fns);
    return doc.dump(2) + "\n";
}

} // namespace synmine
