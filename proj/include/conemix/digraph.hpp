#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <queue>
#include <vector>

#include "conemix/errors.hpp"
#include "conemix/matrix.hpp"

namespace conemix {

/// Directed graph on vertices 0..n-1 with sorted, duplicate-free adjacency lists.
class Digraph {
public:
    explicit Digraph(std::size_t n) : adj_(n) {}

    /// Edge i -> j iff entry (j, i) is strictly positive (column i is the
    /// distribution leaving state i).
    template <Scalar T>
    static Digraph from_matrix(const Matrix<T>& m) {
        if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "adjacency needs a square matrix");
        Digraph g(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.rows(); ++j)
                if (sign_of(m(j, i)) > 0) g.adj_[i].push_back(j);
        return g;
    }

    std::size_t size() const { return adj_.size(); }
    const std::vector<std::size_t>& successors(std::size_t v) const { return adj_.at(v); }

    void add_edge(std::size_t from, std::size_t to) {
        if (from >= size() || to >= size()) throw Error(ErrorCode::DimensionMismatch, "edge endpoint out of range");
        auto& out = adj_[from];
        auto it = std::lower_bound(out.begin(), out.end(), to);
        if (it == out.end() || *it != to) out.insert(it, to);
    }

    bool has_edge(std::size_t from, std::size_t to) const {
        const auto& out = adj_.at(from);
        return std::binary_search(out.begin(), out.end(), to);
    }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& out : adj_) n += out.size();
        return n;
    }

private:
    std::vector<std::vector<std::size_t>> adj_;
};

struct SccResult {
    std::vector<std::size_t> component;  // component id per vertex
    std::size_t count = 0;
};

/// Tarjan's algorithm with an explicit stack.
inline SccResult strongly_connected_components(const Digraph& g) {
    const std::size_t n = g.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    SccResult out;
    out.component.assign(n, 0);
    std::size_t counter = 0;

    struct Frame {
        std::size_t v;
        std::size_t next;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& succ = g.successors(f.v);
            if (f.next < succ.size()) {
                const std::size_t w = succ[f.next++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    out.component[w] = out.count;
                } while (w != v);
                ++out.count;
            }
        }
    }
    return out;
}

/// One component covering every vertex; a lone vertex needs a self-loop.
inline bool strongly_connected(const Digraph& g) {
    if (g.size() == 0) return false;
    if (g.size() == 1) return g.has_edge(0, 0);
    return strongly_connected_components(g).count == 1;
}

/// gcd of all cycle lengths, from BFS levels: every edge u -> v contributes
/// level(u) + 1 - level(v).
inline std::size_t period(const Digraph& g) {
    if (!strongly_connected(g)) throw Error(ErrorCode::NotStronglyConnected, "period needs a strongly connected graph");
    const std::size_t n = g.size();
    std::vector<long long> level(n, -1);
    std::queue<std::size_t> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop();
        for (std::size_t w : g.successors(v))
            if (level[w] < 0) {
                level[w] = level[v] + 1;
                q.push(w);
            }
    }
    long long p = 0;
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w : g.successors(v)) p = std::gcd(p, std::llabs(level[v] + 1 - level[w]));
    return static_cast<std::size_t>(p);
}

/// Tensor (Kronecker) product: (i, j) -> (k, l) iff i -> k and j -> l.
/// Vertex (i, j) has index i * h.size() + j, matching kron of the matrices.
inline Digraph tensor_product(const Digraph& g, const Digraph& h) {
    const std::size_t m = h.size();
    Digraph out(g.size() * m);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k : g.successors(i))
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t l : h.successors(j)) out.add_edge(i * m + j, k * m + l);
    return out;
}

/// Number of strongly connected components of g (x) g that contain a cycle.
inline std::size_t tensor_scc_count(const Digraph& g) {
    if (!strongly_connected(g)) throw Error(ErrorCode::NotStronglyConnected, "tensor SCC count needs a strongly connected graph");
    const Digraph t = tensor_product(g, g);
    const SccResult scc = strongly_connected_components(t);
    std::vector<std::size_t> size(scc.count, 0);
    std::vector<bool> cyclic(scc.count, false);
    for (std::size_t v = 0; v < t.size(); ++v) {
        ++size[scc.component[v]];
        if (t.has_edge(v, v)) cyclic[scc.component[v]] = true;
    }
    std::size_t count = 0;
    for (std::size_t c = 0; c < scc.count; ++c)
        if (cyclic[c] || size[c] > 1) ++count;
    return count;
}

}  // namespace conemix
