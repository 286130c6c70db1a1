#include "discovery/policy.hpp"
#include "discovery/json_util.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "discovery/crypto.hpp"
#include "discovery/error.hpp"

namespace discovery {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::member: return "member";
        case Role::peer: return "peer";
        case Role::admin: return "admin";
    }
    return "member";
}

Role role_from_string(std::string_view text) {
    if (text == "member") return Role::member;
    if (text == "peer") return Role::peer;
    if (text == "admin") return Role::admin;
    throw Error(Errc::invalid_principal, "unknown role '" + std::string(text) + "'");
}

PolicyNode PolicyNode::leaf(std::size_t principal_index) {
    PolicyNode node;
    node.kind = Kind::leaf;
    node.principal_index = principal_index;
    return node;
}

PolicyNode PolicyNode::n_out_of(std::uint32_t threshold, std::vector<PolicyNode> children) {
    PolicyNode node;
    node.kind = Kind::n_out_of;
    node.threshold = threshold;
    node.children = std::move(children);
    return node;
}

std::string group_id(const Principal& principal) {
    std::string id = principal.msp_id;
    id.push_back('/');
    id.append(to_string(principal.role));
    return id;
}

namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
}

}  // namespace

bool is_valid_msp_id(std::string_view msp_id) {
    return !msp_id.empty() && std::all_of(msp_id.begin(), msp_id.end(), is_ident_char);
}

// ---------------------------------------------------------------------------
// DSL parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    SignaturePolicy parse() {
        SignaturePolicy policy;
        policy.root = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        policy.principals = std::move(principals_);
        return policy;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(Errc::syntax_error,
                    "syntax error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string_view read_ident() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        if (start == pos_) fail("expected identifier");
        return text_.substr(start, pos_ - start);
    }

    static bool iequals(std::string_view a, std::string_view b) {
        return a.size() == b.size() &&
               std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                   return std::tolower(static_cast<unsigned char>(x)) ==
                          std::tolower(static_cast<unsigned char>(y));
               });
    }

    PolicyNode parse_expr() {
        skip_ws();
        if (peek('\'')) {
            ++pos_;
            PolicyNode leaf = parse_principal(read_ident());
            expect('\'');
            return leaf;
        }
        const std::size_t start = pos_;
        const std::string_view word = read_ident();
        if (!peek('(')) {
            pos_ = start;
            return parse_principal(read_ident());
        }
        ++pos_;
        if (iequals(word, "AND")) {
            auto args = parse_args();
            const auto k = static_cast<std::uint32_t>(args.size());
            return PolicyNode::n_out_of(k, std::move(args));
        }
        if (iequals(word, "OR")) return PolicyNode::n_out_of(1, parse_args());
        if (iequals(word, "OutOf")) {
            skip_ws();
            const std::size_t num_start = pos_;
            std::uint64_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                n = n * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
                if (n > 0xffffffffULL) fail("threshold out of range");
                ++pos_;
            }
            if (num_start == pos_) fail("expected threshold");
            expect(',');
            auto args = parse_args();
            if (n < 1 || n > args.size())
                throw Error(Errc::arity_error, "OutOf threshold " + std::to_string(n) +
                                                   " outside [1, " + std::to_string(args.size()) +
                                                   "] at offset " + std::to_string(num_start));
            return PolicyNode::n_out_of(static_cast<std::uint32_t>(n), std::move(args));
        }
        pos_ = start;
        fail("unknown operator '" + std::string(word) + "'");
    }

    // Arguments after the opening parenthesis, through the closing one.
    std::vector<PolicyNode> parse_args() {
        std::vector<PolicyNode> args;
        args.push_back(parse_expr());
        while (peek(',')) {
            ++pos_;
            args.push_back(parse_expr());
        }
        expect(')');
        return args;
    }

    PolicyNode parse_principal(std::string_view word) {
        const auto dot = word.rfind('.');
        if (dot == std::string_view::npos || dot == 0 || dot + 1 == word.size())
            fail("expected principal of the form msp.role");
        Principal principal;
        principal.msp_id = std::string(word.substr(0, dot));
        try {
            principal.role = role_from_string(word.substr(dot + 1));
        } catch (const Error&) {
            fail("unknown role '" + std::string(word.substr(dot + 1)) + "'");
        }
        const auto it = std::find(principals_.begin(), principals_.end(), principal);
        const auto index = static_cast<std::size_t>(it - principals_.begin());
        if (it == principals_.end()) principals_.push_back(std::move(principal));
        return PolicyNode::leaf(index);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<Principal> principals_;
};

void render(const SignaturePolicy& policy, const PolicyNode& node, std::string& out) {
    if (node.is_leaf()) {
        const Principal& p = policy.principals.at(node.principal_index);
        out += p.msp_id;
        out += '.';
        out += to_string(p.role);
        return;
    }
    if (node.threshold == node.children.size()) {
        out += "AND(";
    } else if (node.threshold == 1) {
        out += "OR(";
    } else {
        out += "OutOf(";
        out += std::to_string(node.threshold);
        out += ", ";
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += ", ";
        render(policy, node.children[i], out);
    }
    out += ')';
}

void validate_node(const PolicyNode& node, std::size_t principal_count) {
    if (node.is_leaf()) {
        if (node.principal_index >= principal_count)
            throw Error(Errc::index_out_of_range,
                        "leaf index " + std::to_string(node.principal_index) +
                            " out of range for " + std::to_string(principal_count) + " principals");
        return;
    }
    if (node.children.empty()) throw Error(Errc::arity_error, "NOutOf vertex without children");
    if (node.threshold < 1 || node.threshold > node.children.size())
        throw Error(Errc::arity_error, "NOutOf threshold " + std::to_string(node.threshold) +
                                           " outside [1, " +
                                           std::to_string(node.children.size()) + "]");
    for (const auto& child : node.children) validate_node(child, principal_count);
}

}  // namespace

SignaturePolicy parse_policy(std::string_view text) {
    SignaturePolicy policy = Parser(text).parse();
    validate_policy(policy);
    return policy;
}

std::string to_dsl(const SignaturePolicy& policy) {
    std::string out;
    render(policy, policy.root, out);
    return out;
}

void validate_policy(const SignaturePolicy& policy) {
    if (policy.principals.empty())
        throw Error(Errc::index_out_of_range, "policy has no principals");
    for (const auto& p : policy.principals)
        if (!is_valid_msp_id(p.msp_id))
            throw Error(Errc::invalid_principal, "invalid msp id '" + p.msp_id + "'");
    validate_node(policy.root, policy.principals.size());
}

bool satisfies_principal(const Identity& identity, const Principal& principal) {
    return identity.msp_id == principal.msp_id &&
           (principal.role == Role::member || principal.role == identity.role);
}

std::size_t leaf_count(const PolicyNode& node) {
    if (node.is_leaf()) return 1;
    std::size_t total = 0;
    for (const auto& child : node.children) total += leaf_count(child);
    return total;
}

// ---------------------------------------------------------------------------
// Evaluation
//
// Valid endorsements are bucketed into classes of interchangeable signers
// (same msp and role). Each vertex is mapped to the set of minimal per-class
// consumption vectors with which it can be satisfied, never exceeding the
// available count of any class. The policy accepts iff the root's set is
// non-empty. Every vector is bounded componentwise by the class counts, so
// the sets stay small for realistic endorsement sets.

namespace {

using Usage = std::vector<std::uint16_t>;

bool dominates(const Usage& small, const Usage& big) {
    for (std::size_t i = 0; i < small.size(); ++i)
        if (small[i] > big[i]) return false;
    return true;
}

void keep_minimal(std::set<Usage>& usages) {
    std::vector<Usage> all(usages.begin(), usages.end());
    usages.clear();
    for (std::size_t i = 0; i < all.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < all.size() && !dominated; ++j)
            dominated = j != i && all[j] != all[i] && dominates(all[j], all[i]);
        if (!dominated) usages.insert(all[i]);
    }
}

struct Evaluator {
    const SignaturePolicy& policy;
    std::vector<Principal> classes;
    Usage available;

    std::set<Usage> solve(const PolicyNode& node) const {
        std::set<Usage> out;
        if (node.is_leaf()) {
            const Principal& wanted = policy.principals[node.principal_index];
            for (std::size_t c = 0; c < classes.size(); ++c) {
                Identity probe{"", classes[c].msp_id, classes[c].role, {}};
                if (available[c] > 0 && satisfies_principal(probe, wanted)) {
                    Usage u(classes.size(), 0);
                    u[c] = 1;
                    out.insert(std::move(u));
                }
            }
            return out;
        }
        const std::uint32_t n = node.threshold;
        // partial[k]: usages after satisfying exactly k of the children seen so far.
        std::vector<std::set<Usage>> partial(n + 1);
        partial[0].insert(Usage(classes.size(), 0));
        for (const auto& child : node.children) {
            const auto options = solve(child);
            if (options.empty()) continue;
            for (std::uint32_t k = n; k-- > 0;) {
                for (const auto& base : partial[k]) {
                    for (const auto& opt : options) {
                        Usage sum(base);
                        bool fits = true;
                        for (std::size_t c = 0; c < sum.size() && fits; ++c) {
                            sum[c] = static_cast<std::uint16_t>(sum[c] + opt[c]);
                            fits = sum[c] <= available[c];
                        }
                        if (fits) partial[k + 1].insert(std::move(sum));
                    }
                }
                keep_minimal(partial[k + 1]);
            }
        }
        return partial[n];
    }
};

}  // namespace

bool evaluate(const SignaturePolicy& policy, std::span<const Endorsement> endorsements,
              const Bytes& payload_digest) {
    std::set<std::string> seen;
    std::map<Principal, std::uint16_t> counts;
    for (const auto& e : endorsements) {
        if (e.payload_digest != payload_digest) continue;
        if (e.signature.payload_digest != payload_digest) continue;
        if (e.signature.signer_id != e.identity.id) continue;
        if (!crypto::sim_verify(e.identity.verification_key, payload_digest, e.signature.tag))
            continue;
        if (!seen.insert(e.identity.id).second) continue;
        ++counts[Principal{e.identity.msp_id, e.identity.role}];
    }
    Evaluator ev{policy, {}, {}};
    for (const auto& [cls, count] : counts) {
        ev.classes.push_back(cls);
        ev.available.push_back(count);
    }
    return !ev.solve(policy.root).empty();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json node_to_json(const PolicyNode& node) {
    if (node.is_leaf()) return {{"leaf", node.principal_index}};
    nlohmann::json children = nlohmann::json::array();
    for (const auto& c : node.children) children.push_back(node_to_json(c));
    return {{"n", node.threshold}, {"children", std::move(children)}};
}

PolicyNode node_from_json(const nlohmann::json& j, int depth) {
    if (depth > 64) throw Error(Errc::schema_error, "policy tree too deep");
    if (!j.is_object()) throw Error(Errc::schema_error, "policy vertex must be an object");
    if (j.contains("leaf")) {
        if (!is_non_negative_integer(j["leaf"]))
            throw Error(Errc::schema_error, "leaf must be a non-negative integer");
        return PolicyNode::leaf(j["leaf"].get<std::size_t>());
    }
    if (!j.contains("n") || !is_non_negative_integer(j["n"]) || !j.contains("children") ||
        !j["children"].is_array())
        throw Error(Errc::schema_error, "inner vertex needs integer 'n' and array 'children'");
    std::vector<PolicyNode> children;
    for (const auto& c : j["children"]) children.push_back(node_from_json(c, depth + 1));
    const auto n = j["n"].get<std::uint64_t>();
    if (n > 0xffffffffULL) throw Error(Errc::arity_error, "threshold out of range");
    return PolicyNode::n_out_of(static_cast<std::uint32_t>(n), std::move(children));
}

}  // namespace

nlohmann::json to_json(const SignaturePolicy& policy) {
    nlohmann::json principals = nlohmann::json::array();
    for (const auto& p : policy.principals)
        principals.push_back({{"msp", p.msp_id}, {"role", to_string(p.role)}});
    return {{"principals", std::move(principals)}, {"root", node_to_json(policy.root)}};
}

SignaturePolicy policy_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("principals") || !j["principals"].is_array() ||
        !j.contains("root"))
        throw Error(Errc::schema_error, "policy needs 'principals' array and 'root'");
    SignaturePolicy policy;
    for (const auto& p : j["principals"]) {
        if (!p.is_object() || !p.contains("msp") || !p["msp"].is_string() || !p.contains("role") ||
            !p["role"].is_string())
            throw Error(Errc::schema_error, "principal needs string 'msp' and 'role'");
        policy.principals.push_back(
            {p["msp"].get<std::string>(), role_from_string(p["role"].get<std::string>())});
    }
    policy.root = node_from_json(j["root"], 0);
    validate_policy(policy);
    return policy;
}

}  // namespace discovery
