// inclusion_graph.hpp -- the inclusion graph over equations and transducer
// constraints, direct chain-freeness, dual-variant search and topological
// ordering.

#ifndef STRAND_INCLUSION_GRAPH_HPP
#define STRAND_INCLUSION_GRAPH_HPP

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strand/constraint.hpp"

namespace strand {

/// Nodes are constraint indices; an edge (i, j) exists iff a variable of the
/// output term of i occurs in the input term of j. Self-loops are possible.
struct InclusionGraph {
    size_t num_nodes = 0;
    std::vector<std::pair<size_t, size_t>> edges;

    std::vector<std::vector<size_t>> successors() const {
        std::vector<std::vector<size_t>> out(num_nodes);
        for (auto& [a, b] : edges) out[a].push_back(b);
        return out;
    }
};

inline InclusionGraph build_inclusion_graph(const std::vector<Constraint>& constraints) {
    InclusionGraph g;
    g.num_nodes = constraints.size();
    std::vector<std::set<VarId>> outs(constraints.size()), ins(constraints.size());
    for (size_t i = 0; i < constraints.size(); ++i) {
        const Term& in = input_term(constraints[i]);
        const Term& out = output_term(constraints[i]);
        ins[i].insert(in.begin(), in.end());
        outs[i].insert(out.begin(), out.end());
    }
    for (size_t i = 0; i < constraints.size(); ++i) {
        for (size_t j = 0; j < constraints.size(); ++j) {
            bool shared = false;
            for (VarId v : outs[i])
                if (ins[j].count(v)) shared = true;
            if (shared) g.edges.push_back({i, j});
        }
    }
    return g;
}

inline bool is_acyclic(const InclusionGraph& g) {
    auto succ = g.successors();
    std::vector<int> state(g.num_nodes, 0);  // 0 unseen, 1 on stack, 2 done
    std::vector<std::pair<size_t, size_t>> stack;
    for (size_t start = 0; start < g.num_nodes; ++start) {
        if (state[start] != 0) continue;
        stack.push_back({start, 0});
        state[start] = 1;
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            if (idx < succ[node].size()) {
                size_t next = succ[node][idx++];
                if (state[next] == 1) return false;
                if (state[next] == 0) {
                    state[next] = 1;
                    stack.push_back({next, 0});
                }
            } else {
                state[node] = 2;
                stack.pop_back();
            }
        }
    }
    return true;
}

/// No variable may occur more than once across all input terms.
inline bool inputs_linear(const std::vector<Constraint>& constraints) {
    std::set<VarId> seen;
    for (const auto& c : constraints) {
        for (VarId v : input_term(c)) {
            if (!seen.insert(v).second) return false;
        }
    }
    return true;
}

inline bool is_directly_chain_free(const std::vector<Constraint>& constraints) {
    return inputs_linear(constraints) && is_acyclic(build_inclusion_graph(constraints));
}

inline Constraint dual_of(const Constraint& c) {
    if (auto* e = std::get_if<Equation>(&c)) return Equation{e->rhs, e->lhs};
    const auto& tc = std::get<TransConstraint>(c);
    return TransConstraint{std::make_shared<const Transducer>(inverse(*tc.t)), tc.name + "~",
                           tc.out, tc.in, tc.functional};
}

/// Search for a directly chain-free dual variant: exhaustive over
/// dualization bitmasks for small systems, then a greedy cycle-breaking
/// pass. Returns the input unchanged when it is already directly chain-free.
inline std::optional<std::vector<Constraint>> dualize_search(
    const std::vector<Constraint>& constraints, size_t budget = 4096) {
    if (is_directly_chain_free(constraints)) return constraints;
    const size_t n = constraints.size();
    if (n <= 12) {
        uint32_t limit = static_cast<uint32_t>(1) << n;
        for (uint32_t mask = 1; mask < limit && mask <= budget; ++mask) {
            std::vector<Constraint> variant = constraints;
            for (size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) variant[i] = dual_of(constraints[i]);
            if (is_directly_chain_free(variant)) return variant;
        }
        return std::nullopt;
    }
    // greedy: repeatedly dualize some constraint that removes a violation
    std::vector<Constraint> variant = constraints;
    for (size_t round = 0; round < budget && round < 4 * n; ++round) {
        if (is_directly_chain_free(variant)) return variant;
        bool progressed = false;
        for (size_t i = 0; i < n && !progressed; ++i) {
            std::vector<Constraint> next = variant;
            next[i] = dual_of(variant[i]);
            size_t before = is_acyclic(build_inclusion_graph(variant)) ? 0 : 1;
            before += inputs_linear(variant) ? 0 : 1;
            size_t after = is_acyclic(build_inclusion_graph(next)) ? 0 : 1;
            after += inputs_linear(next) ? 0 : 1;
            if (after < before) {
                variant = std::move(next);
                progressed = true;
            }
        }
        if (!progressed) return std::nullopt;
    }
    return is_directly_chain_free(variant) ? std::optional(variant) : std::nullopt;
}

struct CycleError : std::runtime_error {
    CycleError() : std::runtime_error("inclusion graph is cyclic") {}
};

/// Kahn's algorithm, deterministic (smallest node index first).
inline std::vector<size_t> toposort(const InclusionGraph& g) {
    std::vector<size_t> indegree(g.num_nodes, 0);
    auto succ = g.successors();
    for (auto& [a, b] : g.edges) {
        (void)a;
        ++indegree[b];
    }
    std::set<size_t> ready;
    for (size_t i = 0; i < g.num_nodes; ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::vector<size_t> order;
    while (!ready.empty()) {
        size_t node = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(node);
        for (size_t next : succ[node]) {
            if (--indegree[next] == 0) ready.insert(next);
        }
    }
    if (order.size() != g.num_nodes) throw CycleError();
    return order;
}

inline std::vector<Constraint> toposort_constraints(const std::vector<Constraint>& constraints) {
    auto order = toposort(build_inclusion_graph(constraints));
    std::vector<Constraint> out;
    out.reserve(constraints.size());
    for (size_t i : order) out.push_back(constraints[i]);
    return out;
}

/// Order a subset of constraints topologically among themselves.
inline std::vector<Constraint> topo_order_among(const std::vector<Constraint>& subset) {
    if (subset.size() <= 1) return subset;
    return toposort_constraints(subset);
}

inline std::string to_dot(const InclusionGraph& g, const std::vector<Constraint>& constraints,
                          const VarPool& pool) {
    std::ostringstream os;
    os << "digraph inclusion {\n";
    for (size_t i = 0; i < constraints.size(); ++i)
        os << "  n" << i << " [label=\"" << constraint_to_string(constraints[i], pool) << "\"];\n";
    for (auto& [a, b] : g.edges) os << "  n" << a << " -> n" << b << ";\n";
    os << "}\n";
    return os.str();
}

}  // namespace strand

#endif
