#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wrm {

// Undirected exchange network.  Each agent i pushes an equal share 1/k_i of
// its outflow to every neighbour, so the coupling matrix J has J_ij = 1/k_j
// for i in N(j) and every column of J sums to one.  Immutable once built.
class ExchangeNetwork {
public:
    // Hard cap on the number of agents (Monte-Carlo side).
    static constexpr int kMaxAgents = 10000;
    // Full pairwise structures (distance matrices, pair-moment ODEs) cap out
    // earlier because they carry O(N^2) state.
    static constexpr int kMaxDense = 2048;

    static ExchangeNetwork complete(int n);
    static ExchangeNetwork ring(int n);
    static ExchangeNetwork star(int n);

    // Edge list "i j" per line, 0-based, '#' comments and blank lines ignored.
    // The number of agents is max index + 1.  Rejects self-loops, negative or
    // malformed entries, and agents that end up with no edges.  Duplicate and
    // reversed edges collapse to one.
    static ExchangeNetwork load_edge_list(std::istream& in);
    static ExchangeNetwork from_edge_list_text(const std::string& text);

    // Build straight from adjacency lists (validated: symmetric, no
    // self-loops, no isolated agents).
    explicit ExchangeNetwork(std::vector<std::vector<int>> adjacency);

    int n_agents() const { return static_cast<int>(adj_.size()); }
    int degree(int i) const { return static_cast<int>(adj_.at(i).size()); }
    const std::vector<int>& neighbours(int i) const { return adj_.at(i); }

    // Arithmetic mean degree z.
    double avg_degree() const { return z_; }

    bool has_edge(int i, int j) const;

    // J_ij: share of j's outflow reaching i.  Requires i != j.
    double coupling(int i, int j) const;

    // Stationary mean wealth profile <v_i> = k_i / z, normalised so the
    // profile averages to one.  Requires a connected network.
    std::vector<double> stationary_wealth() const;

    // BFS distances from one source; -1 never appears (throws if the network
    // is disconnected).
    std::vector<int> distances_from(int source) const;

    // Full distance matrix; only for n <= kMaxDense.
    std::vector<std::vector<int>> shortest_path_lengths() const;

    int diameter() const;

    bool is_connected() const { return connected_; }
    // True when every agent neighbours every other.
    bool is_complete() const;

    // One edge per line, "i j" with i < j, sorted; loadable by load_edge_list.
    void to_edge_list(std::ostream& out) const;

    // Canonical one-line descriptor ("complete:10", "graph n=7 edges=9", ...)
    // derived from the structure, not from how the object was built.
    std::string descriptor() const;

private:
    std::vector<std::vector<int>> adj_;
    double z_ = 0.0;
    bool connected_ = false;

    void require_connected(const char* op) const;
};

}  // namespace wrm
