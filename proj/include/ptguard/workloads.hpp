#pragma once

// Victim workload generators. Each one builds and exercises a real data
// structure (the node layouts, balancing, chaining, splits are all genuine)
// over a simulated heap, recording every page-granular memory access into a
// replayable trace. Footprints therefore come from actual allocation
// behavior, not from a synthetic page list.
//
// The heap is a bump allocator in a 1 GiB region (a single PUD's reach), so
// a whole workload is guarded by one defense tree. Structures that free
// nodes (rbtree, sdg) recycle them through a free list, as a real allocator
// would — without reuse their footprint would grow with churn instead of
// live size.

#include "addressing.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace ptguard {

struct access {
    virt_addr va{};
    bool is_write = false;

    friend bool operator==(const access &, const access &) = default;
};

struct access_trace {
    std::string label;        // e.g. "btree:2000"
    std::uint64_t seed = 0;
    std::vector<access> accesses;
};

enum class workload_kind { ntimes, btree, hash, rbtree, sdg, sps, ssca2 };

struct workload_spec {
    workload_kind kind = workload_kind::ntimes;
    std::uint64_t param = 100;   // page count, op count, or scale (ssca2)
    std::uint64_t seed = 1;
};

inline constexpr std::uint64_t workload_region_base = 0x5588'0000'0000ull;  // 1 GiB aligned
inline constexpr std::uint64_t workload_region_size = 1ull << 30;

inline const char *workload_kind_name(workload_kind k) {
    switch (k) {
    case workload_kind::ntimes: return "ntimes";
    case workload_kind::btree: return "btree";
    case workload_kind::hash: return "hash";
    case workload_kind::rbtree: return "rbtree";
    case workload_kind::sdg: return "sdg";
    case workload_kind::sps: return "sps";
    case workload_kind::ssca2: return "ssca2";
    }
    throw sim_error("workload_kind_name: unknown kind");
}

/// Parses "<name>:<param>", e.g. "btree:2000". The kind/seed pair fully
/// determines the generated trace.
inline workload_spec parse_workload(const std::string &text) {
    auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw config_error("workload: expected <name>:<param>, got '" + text + "'");
    const std::string name = text.substr(0, colon);
    const std::string num = text.substr(colon + 1);
    workload_spec spec;
    if (name == "ntimes") spec.kind = workload_kind::ntimes;
    else if (name == "btree") spec.kind = workload_kind::btree;
    else if (name == "hash") spec.kind = workload_kind::hash;
    else if (name == "rbtree") spec.kind = workload_kind::rbtree;
    else if (name == "sdg") spec.kind = workload_kind::sdg;
    else if (name == "sps") spec.kind = workload_kind::sps;
    else if (name == "ssca2") spec.kind = workload_kind::ssca2;
    else throw config_error("workload: unknown kind '" + name + "'");
    // digits only: stoull would quietly accept signs and wrap negatives
    if (num.find_first_not_of("0123456789") != std::string::npos)
        throw config_error("workload: bad parameter '" + num + "'");
    try {
        spec.param = std::stoull(num, nullptr, 10);
    } catch (const std::exception &) {
        throw config_error("workload: bad parameter '" + num + "'");
    }
    if (spec.param == 0)
        throw config_error("workload: parameter must be positive");
    return spec;
}

inline std::string format_workload(const workload_spec &spec) {
    return std::string(workload_kind_name(spec.kind)) + ":" + std::to_string(spec.param);
}

namespace detail {

class sim_heap {
public:
    sim_heap(access_trace &out, std::uint64_t base, std::uint64_t capacity)
        : out_(out), base_(base), limit_(base + capacity), cursor_(base) {}

    std::uint64_t alloc(std::uint64_t bytes, std::uint64_t align = 8) {
        cursor_ = (cursor_ + align - 1) / align * align;
        if (bytes > limit_ - cursor_)
            throw config_error("workload footprint exceeds the 1 GiB heap region");
        std::uint64_t va = cursor_;
        cursor_ += bytes;
        return va;
    }

    void read(std::uint64_t va) { out_.accesses.push_back({virt_addr(va), false}); }
    void write(std::uint64_t va) { out_.accesses.push_back({virt_addr(va), true}); }

    [[nodiscard]] std::uint64_t used() const { return cursor_ - base_; }

private:
    access_trace &out_;
    std::uint64_t base_;
    std::uint64_t limit_;
    std::uint64_t cursor_;
};

// --- ntimes: one sequential read per page over n fresh pages ---

inline void gen_ntimes(sim_heap &heap, std::mt19937_64 &, std::uint64_t n) {
    std::uint64_t a = heap.alloc(n * page_size, page_size);
    for (std::uint64_t i = 0; i < n; ++i) heap.read(a + i * page_size);
}

// --- sps: random pairwise element swaps in a fixed int64 array (50 pages) ---

inline void gen_sps(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t ops) {
    constexpr std::uint64_t elems = 25600;   // x8 bytes = exactly 50 pages
    std::uint64_t a = heap.alloc(elems * 8, page_size);
    for (std::uint64_t op = 0; op < ops; ++op) {
        std::uint64_t i = rng() % elems, j = rng() % elems;
        heap.read(a + 8 * i);
        heap.read(a + 8 * j);
        heap.write(a + 8 * i);
        heap.write(a + 8 * j);
    }
}

// --- btree: B-tree of minimum degree 8 (7..15 keys/node), 1 KiB nodes ---

struct btree_state {
    struct node {
        std::uint64_t va;
        bool leaf;
        std::vector<std::uint64_t> keys;
        std::vector<int> kids;
    };
    std::vector<node> pool;
    int root = -1;

    static constexpr unsigned t = 8;            // minimum degree
    static constexpr unsigned max_keys = 2 * t - 1;
    static constexpr std::uint64_t node_bytes = 1024;

    int make_node(sim_heap &heap, bool leaf) {
        pool.push_back({heap.alloc(node_bytes, node_bytes), leaf, {}, {}});
        return static_cast<int>(pool.size()) - 1;
    }

    // Splits full child i of node x; the median key moves up into x.
    void split_child(sim_heap &heap, int x, unsigned i) {
        int c = pool[x].kids[i];
        int nn = make_node(heap, pool[c].leaf);
        heap.read(pool[c].va);
        auto &cn = pool[c];
        auto &nw = pool[nn];
        nw.keys.assign(cn.keys.begin() + t, cn.keys.end());
        if (!cn.leaf) nw.kids.assign(cn.kids.begin() + t, cn.kids.end());
        std::uint64_t median = cn.keys[t - 1];
        cn.keys.resize(t - 1);
        if (!cn.leaf) cn.kids.resize(t);
        auto &xn = pool[x];
        xn.keys.insert(xn.keys.begin() + i, median);
        xn.kids.insert(xn.kids.begin() + i + 1, nn);
        heap.write(nw.va);
        heap.write(cn.va);
        heap.write(xn.va);
    }

    void insert(sim_heap &heap, std::uint64_t k) {
        if (root < 0) root = make_node(heap, true);
        if (pool[root].keys.size() == max_keys) {
            int s = make_node(heap, false);
            pool[s].kids.push_back(root);
            split_child(heap, s, 0);
            root = s;
        }
        int x = root;
        for (;;) {
            heap.read(pool[x].va);
            if (pool[x].leaf) {
                auto &keys = pool[x].keys;
                keys.insert(std::upper_bound(keys.begin(), keys.end(), k), k);
                heap.write(pool[x].va);
                return;
            }
            unsigned i = static_cast<unsigned>(
                std::upper_bound(pool[x].keys.begin(), pool[x].keys.end(), k) -
                pool[x].keys.begin());
            if (pool[pool[x].kids[i]].keys.size() == max_keys) {
                split_child(heap, x, i);
                if (k > pool[x].keys[i]) ++i;
            }
            x = pool[x].kids[i];
        }
    }
};

inline void gen_btree(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t ops) {
    btree_state bt;
    for (std::uint64_t op = 0; op < ops; ++op) bt.insert(heap, rng());
}

// --- hash: separate-chaining table, 20480 bucket heads (40 pages), 24 B
//     chain entries; 70% inserts at chain head, 30% lookups walking it ---

inline void gen_hash(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t ops) {
    constexpr std::uint64_t buckets = 20480;
    std::uint64_t head_va = heap.alloc(buckets * 8, page_size);
    struct entry {
        std::uint64_t key;
        int next;
        std::uint64_t va;
    };
    std::vector<entry> entries;
    std::vector<int> heads(buckets, -1);
    for (std::uint64_t op = 0; op < ops; ++op) {
        std::uint64_t k = rng();
        std::uint64_t b = k % buckets;
        heap.read(head_va + 8 * b);
        if (rng() % 100 < 30) {   // lookup: walk the chain
            for (int e = heads[b]; e != -1; e = entries[static_cast<std::size_t>(e)].next) {
                heap.read(entries[static_cast<std::size_t>(e)].va);
                if (entries[static_cast<std::size_t>(e)].key == k) break;
            }
        } else {                  // insert at head
            std::uint64_t va = heap.alloc(24);
            entries.push_back({k, heads[b], va});
            heads[b] = static_cast<int>(entries.size()) - 1;
            heap.write(va);
            heap.write(head_va + 8 * b);
        }
    }
}

// --- rbtree: red-black tree (CLRS shape, nil sentinel, parent pointers),
//     160 B nodes, 75% inserts / 25% deletes, freed nodes recycled ---

struct rbtree_state {
    static constexpr std::uint64_t node_bytes = 160;

    struct node {
        std::uint64_t va = 0;
        std::uint64_t key = 0;
        int left = 0, right = 0, parent = 0;
        bool red = false;
    };
    std::vector<node> pool;   // index 0 is the nil sentinel (black)
    std::vector<int> free_list;
    int root = 0;

    explicit rbtree_state(sim_heap &heap) { pool.push_back({heap.alloc(node_bytes)}); }

    int make_node(sim_heap &heap, std::uint64_t k) {
        int z;
        if (!free_list.empty()) {
            z = free_list.back();
            free_list.pop_back();
            pool[static_cast<std::size_t>(z)] = node{pool[static_cast<std::size_t>(z)].va, k};
        } else {
            pool.push_back({heap.alloc(node_bytes), k});
            z = static_cast<int>(pool.size()) - 1;
        }
        return z;
    }

    node &at(int i) { return pool[static_cast<std::size_t>(i)]; }

    void left_rotate(sim_heap &heap, int x) {
        int y = at(x).right;
        at(x).right = at(y).left;
        if (at(y).left != 0) at(at(y).left).parent = x;
        at(y).parent = at(x).parent;
        if (at(x).parent == 0) root = y;
        else if (x == at(at(x).parent).left) at(at(x).parent).left = y;
        else at(at(x).parent).right = y;
        at(y).left = x;
        at(x).parent = y;
        heap.write(at(x).va);
        heap.write(at(y).va);
        if (at(y).parent != 0) heap.write(at(at(y).parent).va);
    }

    void right_rotate(sim_heap &heap, int x) {
        int y = at(x).left;
        at(x).left = at(y).right;
        if (at(y).right != 0) at(at(y).right).parent = x;
        at(y).parent = at(x).parent;
        if (at(x).parent == 0) root = y;
        else if (x == at(at(x).parent).right) at(at(x).parent).right = y;
        else at(at(x).parent).left = y;
        at(y).right = x;
        at(x).parent = y;
        heap.write(at(x).va);
        heap.write(at(y).va);
        if (at(y).parent != 0) heap.write(at(at(y).parent).va);
    }

    void insert(sim_heap &heap, std::uint64_t k) {
        int y = 0, x = root;
        while (x != 0) {
            heap.read(at(x).va);
            y = x;
            x = k < at(x).key ? at(x).left : at(x).right;
        }
        int z = make_node(heap, k);
        at(z).parent = y;
        at(z).red = true;
        if (y == 0) root = z;
        else if (k < at(y).key) at(y).left = z;
        else at(y).right = z;
        heap.write(at(z).va);
        if (y != 0) heap.write(at(y).va);
        insert_fixup(heap, z);
    }

    void insert_fixup(sim_heap &heap, int z) {
        while (at(at(z).parent).red) {
            int p = at(z).parent, g = at(p).parent;
            if (p == at(g).left) {
                int u = at(g).right;
                if (at(u).red) {
                    at(p).red = false;
                    at(u).red = false;
                    at(g).red = true;
                    heap.write(at(p).va);
                    heap.write(at(u).va);
                    heap.write(at(g).va);
                    z = g;
                } else {
                    if (z == at(p).right) {
                        z = p;
                        left_rotate(heap, z);
                    }
                    p = at(z).parent;
                    g = at(p).parent;
                    at(p).red = false;
                    at(g).red = true;
                    heap.write(at(p).va);
                    heap.write(at(g).va);
                    right_rotate(heap, g);
                }
            } else {
                int u = at(g).left;
                if (at(u).red) {
                    at(p).red = false;
                    at(u).red = false;
                    at(g).red = true;
                    heap.write(at(p).va);
                    heap.write(at(u).va);
                    heap.write(at(g).va);
                    z = g;
                } else {
                    if (z == at(p).left) {
                        z = p;
                        right_rotate(heap, z);
                    }
                    p = at(z).parent;
                    g = at(p).parent;
                    at(p).red = false;
                    at(g).red = true;
                    heap.write(at(p).va);
                    heap.write(at(g).va);
                    left_rotate(heap, g);
                }
            }
        }
        if (at(root).red) {
            at(root).red = false;
            heap.write(at(root).va);
        }
    }

    void transplant(int u, int v) {
        if (at(u).parent == 0) root = v;
        else if (u == at(at(u).parent).left) at(at(u).parent).left = v;
        else at(at(u).parent).right = v;
        at(v).parent = at(u).parent;
    }

    bool erase(sim_heap &heap, std::uint64_t k) {
        int z = root;
        while (z != 0) {
            heap.read(at(z).va);
            if (k == at(z).key) break;
            z = k < at(z).key ? at(z).left : at(z).right;
        }
        if (z == 0) return false;

        int y = z;
        bool y_was_red = at(y).red;
        int x;
        if (at(z).left == 0) {
            x = at(z).right;
            transplant(z, x);
        } else if (at(z).right == 0) {
            x = at(z).left;
            transplant(z, x);
        } else {
            y = at(z).right;
            while (at(y).left != 0) {
                heap.read(at(y).va);
                y = at(y).left;
            }
            y_was_red = at(y).red;
            x = at(y).right;
            if (at(y).parent == z) {
                at(x).parent = y;
            } else {
                transplant(y, x);
                at(y).right = at(z).right;
                at(at(y).right).parent = y;
            }
            transplant(z, y);
            at(y).left = at(z).left;
            at(at(y).left).parent = y;
            at(y).red = at(z).red;
            heap.write(at(y).va);
        }
        if (at(z).parent != 0) heap.write(at(at(z).parent).va);
        free_list.push_back(z);
        if (!y_was_red) erase_fixup(heap, x);
        return true;
    }

    void erase_fixup(sim_heap &heap, int x) {
        while (x != root && !at(x).red) {
            int p = at(x).parent;
            if (x == at(p).left) {
                int w = at(p).right;
                if (at(w).red) {
                    at(w).red = false;
                    at(p).red = true;
                    heap.write(at(w).va);
                    heap.write(at(p).va);
                    left_rotate(heap, p);
                    w = at(p).right;
                }
                if (!at(at(w).left).red && !at(at(w).right).red) {
                    at(w).red = true;
                    heap.write(at(w).va);
                    x = p;
                } else {
                    if (!at(at(w).right).red) {
                        at(at(w).left).red = false;
                        at(w).red = true;
                        heap.write(at(at(w).left).va);
                        heap.write(at(w).va);
                        right_rotate(heap, w);
                        w = at(p).right;
                    }
                    at(w).red = at(p).red;
                    at(p).red = false;
                    at(at(w).right).red = false;
                    heap.write(at(w).va);
                    heap.write(at(p).va);
                    heap.write(at(at(w).right).va);
                    left_rotate(heap, p);
                    x = root;
                }
            } else {
                int w = at(p).left;
                if (at(w).red) {
                    at(w).red = false;
                    at(p).red = true;
                    heap.write(at(w).va);
                    heap.write(at(p).va);
                    right_rotate(heap, p);
                    w = at(p).left;
                }
                if (!at(at(w).left).red && !at(at(w).right).red) {
                    at(w).red = true;
                    heap.write(at(w).va);
                    x = p;
                } else {
                    if (!at(at(w).left).red) {
                        at(at(w).right).red = false;
                        at(w).red = true;
                        heap.write(at(at(w).right).va);
                        heap.write(at(w).va);
                        left_rotate(heap, w);
                        w = at(p).left;
                    }
                    at(w).red = at(p).red;
                    at(p).red = false;
                    at(at(w).left).red = false;
                    heap.write(at(w).va);
                    heap.write(at(p).va);
                    heap.write(at(at(w).left).va);
                    right_rotate(heap, p);
                    x = root;
                }
            }
        }
        if (at(x).red) {
            at(x).red = false;
            heap.write(at(x).va);
        }
    }
};

inline void gen_rbtree(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t ops) {
    rbtree_state rb(heap);
    std::vector<std::uint64_t> live;
    for (std::uint64_t op = 0; op < ops; ++op) {
        if (!live.empty() && rng() % 100 < 25) {
            std::size_t pick = rng() % live.size();
            std::uint64_t k = live[pick];
            live[pick] = live.back();
            live.pop_back();
            rb.erase(heap, k);
        } else {
            std::uint64_t k = rng();
            rb.insert(heap, k);
            live.push_back(k);
        }
    }
}

// --- sdg: sparse directed graph, 4096 adjacency heads (8 pages), 88 B edge
//     nodes with free-list recycling; 85% edge inserts, 15% removals ---

inline void gen_sdg(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t ops) {
    constexpr std::uint64_t vertices = 4096;
    constexpr std::uint64_t edge_bytes = 88;
    std::uint64_t head_va = heap.alloc(vertices * 8, page_size);
    struct edge {
        int to;
        int next;
        std::uint64_t va;
    };
    std::vector<edge> pool;
    std::vector<int> free_list;
    std::vector<int> heads(vertices, -1);

    for (std::uint64_t op = 0; op < ops; ++op) {
        std::uint64_t u = rng() % vertices;
        heap.read(head_va + 8 * u);
        if (rng() % 100 < 15) {   // remove the first edge of u, if any
            int e = heads[u];
            if (e != -1) {
                heap.read(pool[static_cast<std::size_t>(e)].va);
                heads[u] = pool[static_cast<std::size_t>(e)].next;
                free_list.push_back(e);
                heap.write(head_va + 8 * u);
            }
        } else {                  // insert edge u -> v at list head
            int v = static_cast<int>(rng() % vertices);
            int e;
            if (!free_list.empty()) {
                e = free_list.back();
                free_list.pop_back();
                pool[static_cast<std::size_t>(e)] = {v, heads[u], pool[static_cast<std::size_t>(e)].va};
            } else {
                pool.push_back({v, heads[u], heap.alloc(edge_bytes)});
                e = static_cast<int>(pool.size()) - 1;
            }
            heads[u] = e;
            heap.write(pool[static_cast<std::size_t>(e)].va);
            heap.write(head_va + 8 * u);
        }
    }
}

// --- ssca2: scalable graph kernel. Phase 1 builds a clustered (R-MAT style)
//     directed multigraph of 2^scale vertices and 10x that many 48 B edge
//     nodes; phase 2 runs four BFS traversals over the adjacency lists ---

inline void gen_ssca2(sim_heap &heap, std::mt19937_64 &rng, std::uint64_t scale) {
    const std::uint64_t vertices = 1ull << scale;
    const std::uint64_t edge_count = 10 * vertices;
    constexpr std::uint64_t edge_bytes = 48;
    std::uint64_t head_va = heap.alloc(vertices * 8, page_size);
    struct edge {
        std::uint64_t to;
        int next;
        std::uint64_t va;
    };
    std::vector<edge> pool;
    pool.reserve(edge_count);
    std::vector<int> heads(vertices, -1);

    auto rmat_pick = [&]() {
        std::uint64_t u = 0, v = 0;
        for (std::uint64_t bit = vertices >> 1; bit != 0; bit >>= 1) {
            std::uint64_t r = rng() % 100;
            // quadrant probabilities 57/19/19/5: clustered like R-MAT
            if (r < 57) {
            } else if (r < 76) {
                v |= bit;
            } else if (r < 95) {
                u |= bit;
            } else {
                u |= bit;
                v |= bit;
            }
        }
        return std::pair<std::uint64_t, std::uint64_t>{u, v};
    };

    for (std::uint64_t i = 0; i < edge_count; ++i) {
        auto [u, v] = rmat_pick();
        heap.read(head_va + 8 * u);
        pool.push_back({v, heads[u], heap.alloc(edge_bytes)});
        heads[u] = static_cast<int>(pool.size()) - 1;
        heap.write(pool.back().va);
        heap.write(head_va + 8 * u);
    }

    std::vector<std::uint8_t> seen(vertices);
    std::vector<std::uint64_t> frontier, next;
    for (int round = 0; round < 4; ++round) {
        std::fill(seen.begin(), seen.end(), 0);
        frontier.assign(1, rng() % vertices);
        seen[frontier[0]] = 1;
        while (!frontier.empty()) {
            next.clear();
            for (std::uint64_t u : frontier) {
                heap.read(head_va + 8 * u);
                for (int e = heads[u]; e != -1; e = pool[static_cast<std::size_t>(e)].next) {
                    heap.read(pool[static_cast<std::size_t>(e)].va);
                    std::uint64_t v = pool[static_cast<std::size_t>(e)].to;
                    if (!seen[v]) {
                        seen[v] = 1;
                        next.push_back(v);
                    }
                }
            }
            frontier.swap(next);
        }
    }
}

} // namespace detail

/// Deterministic trace generation: same spec, same trace, bit for bit.
inline access_trace generate_trace(const workload_spec &spec) {
    if (spec.kind == workload_kind::ssca2 && (spec.param < 4 || spec.param > 16))
        throw config_error("ssca2 scale must be in [4,16]");
    access_trace t;
    t.label = format_workload(spec);
    t.seed = spec.seed;
    std::mt19937_64 rng(spec.seed);
    detail::sim_heap heap(t, workload_region_base, workload_region_size);
    switch (spec.kind) {
    case workload_kind::ntimes: detail::gen_ntimes(heap, rng, spec.param); break;
    case workload_kind::btree: detail::gen_btree(heap, rng, spec.param); break;
    case workload_kind::hash: detail::gen_hash(heap, rng, spec.param); break;
    case workload_kind::rbtree: detail::gen_rbtree(heap, rng, spec.param); break;
    case workload_kind::sdg: detail::gen_sdg(heap, rng, spec.param); break;
    case workload_kind::sps: detail::gen_sps(heap, rng, spec.param); break;
    case workload_kind::ssca2: detail::gen_ssca2(heap, rng, spec.param); break;
    }
    return t;
}

/// Number of distinct pages the trace touches (its working-set footprint).
inline std::size_t distinct_pages(const access_trace &t) {
    std::set<std::uint64_t> vpns;
    for (const auto &a : t.accesses) vpns.insert(a.va.vpn());
    return vpns.size();
}

/// One access per line: "R 0x<va>" or "W 0x<va>".
inline void write_trace_file(std::ostream &os, const access_trace &t) {
    for (const auto &a : t.accesses)
        os << (a.is_write ? 'W' : 'R') << " " << a.va.hex() << "\n";
}

inline access_trace read_trace_file(std::istream &is) {
    access_trace t;
    t.label = "replay";
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i == line.size()) continue;
        const char op = line[i];
        if (op != 'R' && op != 'W')
            throw config_error("trace line " + std::to_string(lineno) +
                               ": expected R or W, got '" + line.substr(i, 1) + "'");
        ++i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::uint64_t raw = 0;
        try {
            std::size_t used = 0;
            raw = std::stoull(line.substr(i), &used, 16);
            std::size_t end = i + used;
            while (end < line.size() && std::isspace(static_cast<unsigned char>(line[end]))) ++end;
            if (used == 0 || end != line.size()) throw std::invalid_argument(line);
        } catch (const std::exception &) {
            throw config_error("trace line " + std::to_string(lineno) + ": bad address");
        }
        try {
            t.accesses.push_back({virt_addr(raw), op == 'W'});
        } catch (const sim_error &e) {
            throw config_error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return t;
}

} // namespace ptguard
