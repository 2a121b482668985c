#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace proofplan {

struct Cell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Cell &, const Cell &) = default;
};

using KeyId = char;    // lowercase letter a-z
using AgentId = int;   // digit 0-9
using RuleId = std::uint32_t;

enum class Action : std::uint8_t { North, East, South, West, Pickup, Probe, Send };

inline constexpr Action kMoves[] = {Action::North, Action::East, Action::South, Action::West};

std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view text);
bool is_move(Action a);
Cell step_cell(Cell c, Action move);

/// A ground atom. Received facts wrap exactly one non-Received fact, which the
/// representation enforces: the wrapped fact is stored separately from the
/// recipient tag.
class Proposition {
public:
    enum class Kind : std::uint8_t { At, HasKey, Received, Atom };

    struct AtFact {
        Cell cell;
        friend auto operator<=>(const AtFact &, const AtFact &) = default;
    };
    struct KeyFact {
        KeyId key;
        friend auto operator<=>(const KeyFact &, const KeyFact &) = default;
    };
    struct AtomFact {
        std::string symbol;
        std::vector<std::string> args;
        friend auto operator<=>(const AtomFact &, const AtomFact &) = default;
    };
    using Base = std::variant<AtFact, KeyFact, AtomFact>;

    static Proposition at(Cell c);
    static Proposition has_key(KeyId k);
    static Proposition atom(std::string symbol, std::vector<std::string> args = {});
    /// Throws std::invalid_argument if `fact` is itself a Received fact.
    static Proposition received(AgentId recipient, const Proposition &fact);

    Kind kind() const;
    bool is_at() const { return kind() == Kind::At; }
    bool is_has_key() const { return kind() == Kind::HasKey; }
    bool is_received() const { return recipient_.has_value(); }

    // Accessors throw std::logic_error on a kind mismatch.
    Cell cell() const;
    KeyId key() const;
    AgentId recipient() const;
    Proposition inner() const;
    const AtomFact &atom_fact() const;

    std::string to_string() const;
    std::size_t hash() const;

    friend auto operator<=>(const Proposition &, const Proposition &) = default;
    friend bool operator==(const Proposition &, const Proposition &) = default;

private:
    Proposition(std::optional<AgentId> recipient, Base base)
        : recipient_(recipient), base_(std::move(base)) {}

    std::optional<AgentId> recipient_;
    Base base_;
};

/// Parses the textual form produced by Proposition::to_string, e.g.
/// `At(1,2)`, `HasKey(a)`, `Received(1,HasKey(a))`, `door_open(x,y)`.
/// Kind names are case-insensitive. Throws std::invalid_argument.
Proposition parse_proposition(std::string_view text);

struct PropositionHash {
    std::size_t operator()(const Proposition &p) const { return p.hash(); }
};

/// Horn rule: conjunction of antecedents implies one consequent.
struct Rule {
    RuleId id = 0;
    std::vector<Proposition> antecedents;  // sorted, unique
    Proposition consequent = Proposition::atom("_");
    std::optional<Action> action;

    std::size_t arity() const { return antecedents.size(); }
    /// True when both rules have the same logical content, ignoring ids.
    bool same_content(const Rule &other) const;
    std::string to_string() const;
};

/// Builds a rule, normalizing the antecedent order. Throws std::invalid_argument
/// when antecedents are empty or contain the consequent.
Rule make_rule(RuleId id, std::vector<Proposition> antecedents, Proposition consequent,
               std::optional<Action> action = std::nullopt);

/// Monotone fact set. Facts keep their insertion order.
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(std::initializer_list<Proposition> facts);

    /// Returns true iff the fact was new.
    bool insert(const Proposition &p);
    bool contains(const Proposition &p) const { return index_.contains(p); }
    std::size_t size() const { return facts_.size(); }
    bool empty() const { return facts_.empty(); }
    std::uint64_t generation() const { return generation_; }
    std::span<const Proposition> facts() const { return facts_; }
    auto begin() const { return facts_.begin(); }
    auto end() const { return facts_.end(); }

    /// Set equality, insertion order ignored.
    friend bool operator==(const KnowledgeBase &a, const KnowledgeBase &b);

private:
    std::vector<Proposition> facts_;
    std::unordered_set<Proposition, PropositionHash> index_;
    std::uint64_t generation_ = 0;
};

struct Axiom {
    friend bool operator==(const Axiom &, const Axiom &) = default;
};
struct Applied {
    RuleId rule;
    std::vector<Proposition> antecedents;
    friend bool operator==(const Applied &, const Applied &) = default;
};
using Justification = std::variant<Axiom, Applied>;

struct DerivationNode {
    Justification justification;
    std::size_t order = 0;  // derivation sequence number
    std::size_t pass = 0;   // fixpoint pass that derived it; axioms are pass 0
};

class DerivationGraph {
public:
    const DerivationNode *find(const Proposition &p) const;
    bool contains(const Proposition &p) const { return find(p) != nullptr; }
    std::size_t size() const { return order_.size(); }
    /// Propositions in derivation order.
    std::span<const Proposition> order() const { return order_; }

    /// First justification wins; returns false if `p` was already present.
    bool record(const Proposition &p, Justification j, std::size_t pass);

private:
    std::unordered_map<Proposition, DerivationNode, PropositionHash> nodes_;
    std::vector<Proposition> order_;
};

struct ClosureStats {
    std::size_t rule_applications = 0;
    std::size_t membership_tests = 0;
    std::size_t iterations = 0;
};

struct ClosureResult {
    KnowledgeBase closure;
    DerivationGraph graph;
    ClosureStats stats;
};

/// Called after each fixpoint pass with the fact set reached so far.
using PassObserver = std::function<void(std::size_t pass, const KnowledgeBase &facts)>;

/// Least fixpoint of `gamma0` under `rules`, computed semi-naively: each pass
/// only revisits rules that mention a fact derived in the previous pass.
/// When several rules derive the same fact in one pass the lowest rule id is
/// recorded as its justification.
ClosureResult close(const KnowledgeBase &gamma0, std::span<const Rule> rules,
                    const PassObserver &observer = {});

bool proves(const KnowledgeBase &closure, const Proposition &goal);

struct ProofTree {
    Proposition proposition;
    std::optional<RuleId> rule;  // empty for axioms
    std::vector<ProofTree> children;

    bool is_axiom() const { return !rule.has_value(); }
    std::size_t depth() const;
    std::size_t node_count() const;
    friend bool operator==(const ProofTree &, const ProofTree &) = default;
};

class GoalNotDerived : public std::runtime_error {
public:
    explicit GoalNotDerived(const Proposition &goal)
        : std::runtime_error("goal not derived: " + goal.to_string()) {}
};

ProofTree extract_proof(const DerivationGraph &graph, const Proposition &goal);

/// Leaves of the tree, deduplicated, in first-visit order.
std::vector<Proposition> proof_leaves(const ProofTree &tree);

}  // namespace proofplan

template <>
struct std::hash<proofplan::Proposition> {
    std::size_t operator()(const proofplan::Proposition &p) const { return p.hash(); }
};
