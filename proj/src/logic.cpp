#include "proofplan/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>

namespace proofplan {

namespace {

void hash_mix(std::size_t &seed, std::size_t v) { seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2); }

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

int parse_int(std::string_view s, std::string_view context) {
    s = trim(s);
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("expected integer in " + std::string(context) + ": '" + std::string(s) + "'");
    }
    return value;
}

// Splits on commas that are not nested inside parentheses.
std::vector<std::string_view> split_top_level(std::string_view s) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        else if (s[i] == ')') --depth;
        else if (s[i] == ',' && depth == 0) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    parts.push_back(trim(s.substr(start)));
    return parts;
}

}  // namespace

std::string_view action_name(Action a) {
    switch (a) {
        case Action::North: return "N";
        case Action::East: return "E";
        case Action::South: return "S";
        case Action::West: return "W";
        case Action::Pickup: return "pickup";
        case Action::Probe: return "probe";
        case Action::Send: return "send";
    }
    return "?";
}

std::optional<Action> parse_action(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "n" || t == "north") return Action::North;
    if (t == "e" || t == "east") return Action::East;
    if (t == "s" || t == "south") return Action::South;
    if (t == "w" || t == "west") return Action::West;
    if (t == "pickup") return Action::Pickup;
    if (t == "probe") return Action::Probe;
    if (t == "send") return Action::Send;
    return std::nullopt;
}

bool is_move(Action a) {
    return a == Action::North || a == Action::East || a == Action::South || a == Action::West;
}

Cell step_cell(Cell c, Action move) {
    switch (move) {
        case Action::North: return {c.x, c.y - 1};
        case Action::East: return {c.x + 1, c.y};
        case Action::South: return {c.x, c.y + 1};
        case Action::West: return {c.x - 1, c.y};
        default: return c;
    }
}

// ---------------------------------------------------------------------------
// Proposition

Proposition Proposition::at(Cell c) { return Proposition(std::nullopt, AtFact{c}); }

Proposition Proposition::has_key(KeyId k) {
    if (k < 'a' || k > 'z') throw std::invalid_argument("key identifiers are lowercase letters");
    return Proposition(std::nullopt, KeyFact{k});
}

Proposition Proposition::atom(std::string symbol, std::vector<std::string> args) {
    if (symbol.empty()) throw std::invalid_argument("atom symbol must be non-empty");
    return Proposition(std::nullopt, AtomFact{std::move(symbol), std::move(args)});
}

Proposition Proposition::received(AgentId recipient, const Proposition &fact) {
    if (fact.is_received()) throw std::invalid_argument("Received facts cannot be nested");
    return Proposition(recipient, fact.base_);
}

Proposition::Kind Proposition::kind() const {
    if (recipient_) return Kind::Received;
    switch (base_.index()) {
        case 0: return Kind::At;
        case 1: return Kind::HasKey;
        default: return Kind::Atom;
    }
}

Cell Proposition::cell() const {
    if (kind() != Kind::At) throw std::logic_error("not an At proposition: " + to_string());
    return std::get<AtFact>(base_).cell;
}

KeyId Proposition::key() const {
    if (kind() != Kind::HasKey) throw std::logic_error("not a HasKey proposition: " + to_string());
    return std::get<KeyFact>(base_).key;
}

AgentId Proposition::recipient() const {
    if (!recipient_) throw std::logic_error("not a Received proposition: " + to_string());
    return *recipient_;
}

Proposition Proposition::inner() const {
    if (!recipient_) throw std::logic_error("not a Received proposition: " + to_string());
    return Proposition(std::nullopt, base_);
}

const Proposition::AtomFact &Proposition::atom_fact() const {
    if (kind() != Kind::Atom) throw std::logic_error("not an Atom proposition: " + to_string());
    return std::get<AtomFact>(base_);
}

std::string Proposition::to_string() const {
    std::string base;
    std::visit(
        [&](const auto &f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, AtFact>) {
                base = "At(" + std::to_string(f.cell.x) + "," + std::to_string(f.cell.y) + ")";
            } else if constexpr (std::is_same_v<T, KeyFact>) {
                base = std::string("HasKey(") + f.key + ")";
            } else {
                base = f.symbol;
                if (!f.args.empty()) {
                    base += "(";
                    for (std::size_t i = 0; i < f.args.size(); ++i) {
                        if (i) base += ",";
                        base += f.args[i];
                    }
                    base += ")";
                }
            }
        },
        base_);
    if (recipient_) return "Received(" + std::to_string(*recipient_) + "," + base + ")";
    return base;
}

std::size_t Proposition::hash() const {
    std::size_t seed = base_.index();
    hash_mix(seed, recipient_ ? static_cast<std::size_t>(*recipient_) + 1 : 0);
    std::visit(
        [&](const auto &f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, AtFact>) {
                hash_mix(seed, static_cast<std::size_t>(f.cell.x));
                hash_mix(seed, static_cast<std::size_t>(f.cell.y));
            } else if constexpr (std::is_same_v<T, KeyFact>) {
                hash_mix(seed, static_cast<std::size_t>(f.key));
            } else {
                hash_mix(seed, std::hash<std::string>{}(f.symbol));
                for (const auto &a : f.args) hash_mix(seed, std::hash<std::string>{}(a));
            }
        },
        base_);
    return seed;
}

Proposition parse_proposition(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty proposition");
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        if (text.find(')') != std::string_view::npos || text.find(',') != std::string_view::npos)
            throw std::invalid_argument("malformed proposition: '" + std::string(text) + "'");
        return Proposition::atom(std::string(text));
    }
    if (text.back() != ')') throw std::invalid_argument("malformed proposition: '" + std::string(text) + "'");
    const std::string name(trim(text.substr(0, open)));
    const std::string_view body = text.substr(open + 1, text.size() - open - 2);
    const auto args = split_top_level(body);
    const std::string kind = lower(name);
    if (kind == "at") {
        if (args.size() != 2) throw std::invalid_argument("At takes two coordinates");
        return Proposition::at({parse_int(args[0], "At"), parse_int(args[1], "At")});
    }
    if (kind == "haskey") {
        if (args.size() != 1 || args[0].size() != 1)
            throw std::invalid_argument("HasKey takes a single key letter");
        return Proposition::has_key(args[0][0]);
    }
    if (kind == "received") {
        if (args.size() != 2) throw std::invalid_argument("Received takes an agent and a fact");
        return Proposition::received(parse_int(args[0], "Received"), parse_proposition(args[1]));
    }
    if (name.empty()) throw std::invalid_argument("missing symbol in '" + std::string(text) + "'");
    std::vector<std::string> atom_args;
    for (auto a : args) {
        if (a.empty() || a.find('(') != std::string_view::npos)
            throw std::invalid_argument("atom arguments must be plain symbols: '" + std::string(text) + "'");
        atom_args.emplace_back(a);
    }
    return Proposition::atom(name, std::move(atom_args));
}

// ---------------------------------------------------------------------------
// Rule

bool Rule::same_content(const Rule &other) const {
    return antecedents == other.antecedents && consequent == other.consequent && action == other.action;
}

std::string Rule::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < antecedents.size(); ++i) {
        if (i) out += " & ";
        out += antecedents[i].to_string();
    }
    out += " -> " + consequent.to_string();
    if (action) out += " [" + std::string(action_name(*action)) + "]";
    return out;
}

Rule make_rule(RuleId id, std::vector<Proposition> antecedents, Proposition consequent,
               std::optional<Action> action) {
    if (antecedents.empty()) throw std::invalid_argument("rule needs at least one antecedent");
    std::sort(antecedents.begin(), antecedents.end());
    antecedents.erase(std::unique(antecedents.begin(), antecedents.end()), antecedents.end());
    if (std::binary_search(antecedents.begin(), antecedents.end(), consequent))
        throw std::invalid_argument("rule consequent appears among its antecedents: " + consequent.to_string());
    return Rule{id, std::move(antecedents), std::move(consequent), action};
}

// ---------------------------------------------------------------------------
// KnowledgeBase

KnowledgeBase::KnowledgeBase(std::initializer_list<Proposition> facts) {
    for (const auto &f : facts) insert(f);
}

bool KnowledgeBase::insert(const Proposition &p) {
    if (!index_.insert(p).second) return false;
    facts_.push_back(p);
    ++generation_;
    return true;
}

bool operator==(const KnowledgeBase &a, const KnowledgeBase &b) {
    if (a.size() != b.size()) return false;
    return std::all_of(a.begin(), a.end(), [&](const Proposition &p) { return b.contains(p); });
}

// ---------------------------------------------------------------------------
// DerivationGraph

const DerivationNode *DerivationGraph::find(const Proposition &p) const {
    auto it = nodes_.find(p);
    return it == nodes_.end() ? nullptr : &it->second;
}

bool DerivationGraph::record(const Proposition &p, Justification j, std::size_t pass) {
    auto [it, inserted] = nodes_.try_emplace(p, DerivationNode{std::move(j), order_.size(), pass});
    if (!inserted) return false;
    order_.push_back(p);
    return true;
}

// ---------------------------------------------------------------------------
// Closure

ClosureResult close(const KnowledgeBase &gamma0, std::span<const Rule> rules, const PassObserver &observer) {
    ClosureResult result;
    result.closure = gamma0;

    // Intern propositions to dense handles.
    std::unordered_map<Proposition, std::uint32_t, PropositionHash> handles;
    auto intern = [&](const Proposition &p) {
        auto [it, inserted] = handles.try_emplace(p, static_cast<std::uint32_t>(handles.size()));
        return it->second;
    };
    for (const auto &f : gamma0) intern(f);

    std::vector<std::size_t> order(rules.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rules[a].id < rules[b].id; });

    // rank = position in canonical (id ascending) order
    std::vector<std::uint32_t> consequent(rules.size());
    std::vector<std::size_t> missing(rules.size());
    std::vector<std::vector<std::uint32_t>> watchers;
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
        const Rule &r = rules[order[rank]];
        consequent[rank] = intern(r.consequent);
        missing[rank] = r.antecedents.size();
        for (const auto &a : r.antecedents) {
            const auto h = intern(a);
            if (watchers.size() <= h) watchers.resize(h + 1);
            watchers[h].push_back(rank);
        }
    }
    watchers.resize(handles.size());

    std::vector<char> known(handles.size(), 0);
    std::vector<std::uint32_t> delta;
    for (const auto &f : gamma0) {
        const auto h = handles.at(f);
        known[h] = 1;
        delta.push_back(h);
        result.graph.record(f, Axiom{}, 0);
    }
    if (observer) observer(0, result.closure);

    std::vector<std::uint32_t> ready;
    std::size_t pass = 0;
    while (!delta.empty()) {
        ++pass;
        ++result.stats.iterations;
        ready.clear();
        for (const auto h : delta) {
            for (const auto rank : watchers[h]) {
                ++result.stats.membership_tests;
                if (--missing[rank] == 0) ready.push_back(rank);
            }
        }
        std::sort(ready.begin(), ready.end());

        std::vector<std::uint32_t> next;
        for (const auto rank : ready) {
            const Rule &r = rules[order[rank]];
            ++result.stats.rule_applications;
            ++result.stats.membership_tests;
            const auto c = consequent[rank];
            if (known[c]) continue;
            known[c] = 1;
            next.push_back(c);
            result.closure.insert(r.consequent);
            result.graph.record(r.consequent, Applied{r.id, r.antecedents}, pass);
        }
        if (observer) observer(pass, result.closure);
        delta = std::move(next);
    }
    return result;
}

bool proves(const KnowledgeBase &closure, const Proposition &goal) { return closure.contains(goal); }

// ---------------------------------------------------------------------------
// Proof trees

std::size_t ProofTree::depth() const {
    std::size_t d = 0;
    for (const auto &c : children) d = std::max(d, c.depth());
    return d + 1;
}

std::size_t ProofTree::node_count() const {
    std::size_t n = 1;
    for (const auto &c : children) n += c.node_count();
    return n;
}

namespace {

const ProofTree &build_proof(const DerivationGraph &graph, const Proposition &p,
                             std::unordered_map<Proposition, ProofTree, PropositionHash> &memo) {
    if (auto it = memo.find(p); it != memo.end()) return it->second;
    const DerivationNode *node = graph.find(p);
    if (!node) throw GoalNotDerived(p);
    ProofTree tree{p, std::nullopt, {}};
    if (const auto *applied = std::get_if<Applied>(&node->justification)) {
        tree.rule = applied->rule;
        for (const auto &a : applied->antecedents) tree.children.push_back(build_proof(graph, a, memo));
    }
    return memo.emplace(p, std::move(tree)).first->second;
}

void collect_leaves(const ProofTree &t, std::vector<Proposition> &out,
                    std::unordered_set<Proposition, PropositionHash> &seen) {
    if (t.is_axiom()) {
        if (seen.insert(t.proposition).second) out.push_back(t.proposition);
        return;
    }
    for (const auto &c : t.children) collect_leaves(c, out, seen);
}

}  // namespace

ProofTree extract_proof(const DerivationGraph &graph, const Proposition &goal) {
    if (!graph.contains(goal)) throw GoalNotDerived(goal);
    std::unordered_map<Proposition, ProofTree, PropositionHash> memo;
    return build_proof(graph, goal, memo);
}

std::vector<Proposition> proof_leaves(const ProofTree &tree) {
    std::vector<Proposition> out;
    std::unordered_set<Proposition, PropositionHash> seen;
    collect_leaves(tree, out, seen);
    return out;
}

}  // namespace proofplan
