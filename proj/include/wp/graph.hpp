#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wp/dist.hpp"
#include "wp/rule.hpp"

namespace wp {

// Simple undirected graph with one message per directed edge. Directed edges
// are identified with adjacency slots: slot e in [offsets[v], offsets[v+1])
// is the edge v -> nbr[e], and rev[e] is the slot of the opposite direction.
struct MessagedGraph {
    std::int64_t n = 0;
    std::vector<std::int64_t> offsets;  // n+1
    std::vector<std::uint32_t> nbr;     // 2|E|
    std::vector<std::uint32_t> tail;    // 2|E|, source vertex of each slot
    std::vector<std::int64_t> rev;      // 2|E|
    std::vector<std::uint8_t> msg;      // 2|E|, current message (empty until init)
    int round = -1;                     // -1: unmessaged

    std::int64_t num_directed() const { return static_cast<std::int64_t>(nbr.size()); }
    std::int64_t num_edges() const { return num_directed() / 2; }
    std::int64_t degree(std::int64_t v) const { return offsets[v + 1] - offsets[v]; }
    bool messaged() const { return round >= 0; }
};

// Binomial random graph G(n, d/n) by geometric skipping over the C(n,2) pair
// sequence; O(|E|) expected time, deterministic given the seed.
MessagedGraph gen_gnp(std::int64_t n, double d, std::uint64_t seed);

// Build from an explicit undirected edge list (validates simplicity). If
// slots is given, it receives per input edge (u,v) the directed slot ids of
// u->v and v->u.
MessagedGraph graph_from_edges(std::int64_t n,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                               std::vector<std::pair<std::int64_t, std::int64_t>>* slots = nullptr);

// Draw every directed message i.i.d. from q0 (overwrites any existing ones).
void init_messages(MessagedGraph& g, const Dist& q0, std::uint64_t seed);

struct RunStats {
    std::vector<std::int64_t> changes_per_round;
    bool reached_fixed_point = false;
    int rounds = 0;
    int cycle_period = 0;  // >0 if the synchronous dynamics entered a cycle
};

// Synchronous rounds from the current messages: every new message is computed
// from the previous round's snapshot. Stops at the first round with zero
// changes, on a detected cycle (period up to 64), or at t_max.
RunStats wp_run(MessagedGraph& g, const UpdateRule& rule, int t_max, int threads = 1);

// A run with the per-round message snapshots kept: snapshots[r][slot] is the
// message after r rounds, r = 0..stats.rounds.
struct StoryGraph {
    MessagedGraph g;
    std::vector<std::vector<std::uint8_t>> snapshots;
    RunStats stats;

    int horizon() const { return static_cast<int>(snapshots.size()) - 1; }
    bool at_fixed_point() const { return stats.reached_fixed_point; }
};

StoryGraph wp_run_with_stories(MessagedGraph g, const UpdateRule& rule, int t_max,
                               int threads = 1);

// Number of directed edges whose message differs between rounds s and t.
std::int64_t changes_between(const StoryGraph& sg, int s, int t);

// Vertices with at least k incoming "1" messages at the fixed point.
std::vector<std::uint32_t> extract_core_wp(const StoryGraph& sg, int k);

// Peeling oracle: repeatedly delete vertices of degree < k; returns survivors.
std::vector<std::uint32_t> peel_kcore(const MessagedGraph& g, int k);

// |C_{t0}| where C_0 is the set of vertices on a cycle of length <= t0 and
// C_t adds the neighborhood t0 times.
std::int64_t count_near_short_cycles(const MessagedGraph& g, int t0);

// Exact re-derivation check: every snapshot entry at round s >= 1 equals the
// rule applied to the neighbors' round s-1 messages.
bool stories_consistent(const StoryGraph& sg, const UpdateRule& rule);

// Edge-list file IO ("u v" per line; messaged dump appends "mu_uv mu_vu";
// story dump writes "u v m0,m1,...,mt" per direction).
void save_edge_list(const MessagedGraph& g, const std::string& path);
void save_messaged(const MessagedGraph& g, const Alphabet& alphabet, const std::string& path);
void save_stories(const StoryGraph& sg, const Alphabet& alphabet, const std::string& path);
MessagedGraph load_edge_list(const std::string& path);

}  // namespace wp
