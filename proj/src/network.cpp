#include "wrm/network.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "wrm/errors.hpp"

namespace wrm {

ExchangeNetwork::ExchangeNetwork(std::vector<std::vector<int>> adjacency)
    : adj_(std::move(adjacency)) {
    const int n = n_agents();
    if (n < 2) throw ConfigError("network needs at least 2 agents");
    if (n > kMaxAgents)
        throw CapError("network exceeds the hard cap of " + std::to_string(kMaxAgents) +
                       " agents");
    long long degree_sum = 0;
    for (int i = 0; i < n; ++i) {
        auto& nb = adj_[i];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        if (nb.empty()) throw ConfigError("agent " + std::to_string(i) + " has no edges");
        for (int j : nb) {
            if (j < 0 || j >= n) throw ConfigError("neighbour index out of range");
            if (j == i) throw ConfigError("self-loop at agent " + std::to_string(i));
        }
        degree_sum += static_cast<long long>(nb.size());
    }
    // symmetry
    for (int i = 0; i < n; ++i)
        for (int j : adj_[i])
            if (!std::binary_search(adj_[j].begin(), adj_[j].end(), i))
                throw ConfigError("adjacency is not symmetric");
    z_ = static_cast<double>(degree_sum) / static_cast<double>(n);

    // connectivity, one BFS
    std::vector<char> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int reached = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int w : adj_[u])
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                queue.push_back(w);
            }
    }
    connected_ = (reached == n);
}

ExchangeNetwork ExchangeNetwork::complete(int n) {
    if (n < 2) throw ConfigError("complete network needs n >= 2");
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        adj[i].reserve(n - 1);
        for (int j = 0; j < n; ++j)
            if (j != i) adj[i].push_back(j);
    }
    return ExchangeNetwork(std::move(adj));
}

ExchangeNetwork ExchangeNetwork::ring(int n) {
    if (n < 3) throw ConfigError("ring network needs n >= 3");
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i) {
        adj[i].push_back((i + 1) % n);
        adj[i].push_back((i + n - 1) % n);
    }
    return ExchangeNetwork(std::move(adj));
}

ExchangeNetwork ExchangeNetwork::star(int n) {
    if (n < 3) throw ConfigError("star network needs n >= 3");
    std::vector<std::vector<int>> adj(n);
    for (int i = 1; i < n; ++i) {
        adj[0].push_back(i);
        adj[i].push_back(0);
    }
    return ExchangeNetwork(std::move(adj));
}

ExchangeNetwork ExchangeNetwork::load_edge_list(std::istream& in) {
    std::set<std::pair<int, int>> edges;
    int max_index = -1;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        long long a, b;
        if (!(fields >> a)) continue;  // blank or comment-only line
        if (!(fields >> b)) throw LoadError("expected two indices", line_no);
        long long extra;
        if (fields >> extra) throw LoadError("trailing fields after edge", line_no);
        if (a < 0 || b < 0) throw LoadError("negative agent index", line_no);
        if (a == b) throw LoadError("self-loop", line_no);
        if (a >= kMaxAgents || b >= kMaxAgents)
            throw LoadError("agent index exceeds the cap of " + std::to_string(kMaxAgents),
                            line_no);
        const int i = static_cast<int>(std::min(a, b));
        const int j = static_cast<int>(std::max(a, b));
        edges.emplace(i, j);
        max_index = std::max(max_index, j);
    }
    if (edges.empty()) throw LoadError("no edges found", line_no);
    std::vector<std::vector<int>> adj(max_index + 1);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    for (int i = 0; i <= max_index; ++i)
        if (adj[i].empty())
            throw LoadError("agent " + std::to_string(i) + " has no edges", line_no);
    return ExchangeNetwork(std::move(adj));
}

ExchangeNetwork ExchangeNetwork::from_edge_list_text(const std::string& text) {
    std::istringstream in(text);
    return load_edge_list(in);
}

bool ExchangeNetwork::has_edge(int i, int j) const {
    const auto& nb = adj_.at(i);
    return std::binary_search(nb.begin(), nb.end(), j);
}

double ExchangeNetwork::coupling(int i, int j) const {
    if (i == j) throw ConfigError("coupling is defined for distinct agents only");
    if (i < 0 || j < 0 || i >= n_agents() || j >= n_agents())
        throw ConfigError("agent index out of range");
    return has_edge(i, j) ? 1.0 / static_cast<double>(degree(j)) : 0.0;
}

void ExchangeNetwork::require_connected(const char* op) const {
    if (!connected_)
        throw DisconnectedError(std::string(op) + " requires a connected network");
}

std::vector<double> ExchangeNetwork::stationary_wealth() const {
    require_connected("stationary_wealth");
    const int n = n_agents();
    long long degree_sum = 0;
    for (int i = 0; i < n; ++i) degree_sum += degree(i);
    // k_i * n / sum(k): algebraically k_i / z with one rounding
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = static_cast<double>(static_cast<long long>(degree(i)) * n) /
               static_cast<double>(degree_sum);
    return v;
}

std::vector<int> ExchangeNetwork::distances_from(int source) const {
    require_connected("distances_from");
    if (source < 0 || source >= n_agents()) throw ConfigError("source out of range");
    std::vector<int> dist(n_agents(), -1);
    std::deque<int> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int w : adj_[u])
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
    }
    return dist;
}

std::vector<std::vector<int>> ExchangeNetwork::shortest_path_lengths() const {
    if (n_agents() > kMaxDense)
        throw CapError("distance matrix limited to " + std::to_string(kMaxDense) +
                       " agents");
    require_connected("shortest_path_lengths");
    std::vector<std::vector<int>> d(n_agents());
    for (int i = 0; i < n_agents(); ++i) d[i] = distances_from(i);
    return d;
}

int ExchangeNetwork::diameter() const {
    require_connected("diameter");
    int best = 0;
    for (int i = 0; i < n_agents(); ++i) {
        const auto d = distances_from(i);
        best = std::max(best, *std::max_element(d.begin(), d.end()));
    }
    return best;
}

bool ExchangeNetwork::is_complete() const {
    for (int i = 0; i < n_agents(); ++i)
        if (degree(i) != n_agents() - 1) return false;
    return true;
}

void ExchangeNetwork::to_edge_list(std::ostream& out) const {
    for (int i = 0; i < n_agents(); ++i)
        for (int j : adj_[i])
            if (i < j) out << i << ' ' << j << '\n';
}

std::string ExchangeNetwork::descriptor() const {
    const int n = n_agents();
    if (is_complete()) return "complete:" + std::to_string(n);
    bool all_two = true;
    for (int i = 0; i < n && all_two; ++i) all_two = (degree(i) == 2);
    if (all_two && connected_) return "ring:" + std::to_string(n);
    int hubs = 0, leaves = 0;
    for (int i = 0; i < n; ++i) {
        if (degree(i) == n - 1) ++hubs;
        if (degree(i) == 1) ++leaves;
    }
    if (hubs == 1 && leaves == n - 1) return "star:" + std::to_string(n);
    long long m = 0;
    for (int i = 0; i < n; ++i) m += degree(i);
    return "graph n=" + std::to_string(n) + " edges=" + std::to_string(m / 2);
}

}  // namespace wrm
