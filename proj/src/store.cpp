#include "dgcf/store.hpp"

#include <random>
#include <string>

#include "dgcf/error.hpp"

namespace dgcf {

namespace {

std::vector<EntityState>& side_table(GraphSnapshot& snap, Side s) {
    return s == Side::user ? snap.users : snap.items;
}

const std::vector<EntityState>& side_table(const GraphSnapshot& snap, Side s) {
    return s == Side::user ? snap.users : snap.items;
}

const char* side_name(Side s) { return s == Side::user ? "user" : "item"; }

} // namespace

EntityState& GraphSnapshot::state(Side s, int id) {
    auto& table = side_table(*this, s);
    if (id < 0 || id >= static_cast<int>(table.size()))
        throw LookupError(std::string(side_name(s)) + " id " + std::to_string(id) + " out of range [0," +
                          std::to_string(table.size()) + ")");
    return table[id];
}

const EntityState& GraphSnapshot::state(Side s, int id) const {
    return const_cast<GraphSnapshot*>(this)->state(s, id);
}

double GraphSnapshot::elapsed_since_last(Side s, int id, double t) const {
    const EntityState& e = state(s, id);
    if (!e.last_time) return 0.0;
    return t - *e.last_time;
}

void GraphSnapshot::detach_all() {
    for (auto* table : {&users, &items})
        for (EntityState& e : *table) {
            e.emb.node = -1;
            for (HistoryEntry& h : e.history) h.snapshot.node = -1;
        }
}

void GraphSnapshot::check_consistent() const {
    for (Side s : {Side::user, Side::item}) {
        const auto& table = side_table(*this, s);
        const auto& partners = side_table(*this, other_side(s));
        for (size_t id = 0; id < table.size(); ++id) {
            const EntityState& e = table[id];
            if (e.emb.value.rows != d || e.emb.value.cols != 1)
                throw ContractError(std::string(side_name(s)) + " " + std::to_string(id) +
                                    " embedding is " + e.emb.value.shape_str());
            if (static_cast<int>(e.history.size()) > history_capacity)
                throw ContractError(std::string(side_name(s)) + " " + std::to_string(id) +
                                    " history exceeds capacity");
            if (e.last_time && *e.last_time > now)
                throw ContractError(std::string(side_name(s)) + " " + std::to_string(id) +
                                    " clock is ahead of the snapshot");
            double prev = -1.0;
            for (const HistoryEntry& h : e.history) {
                if (h.partner < 0 || h.partner >= static_cast<int>(partners.size()))
                    throw ContractError("history of " + std::string(side_name(s)) + " " +
                                        std::to_string(id) + " names unknown partner " +
                                        std::to_string(h.partner));
                if (h.time < prev)
                    throw ContractError("history of " + std::string(side_name(s)) + " " +
                                        std::to_string(id) + " is not chronological");
                prev = h.time;
            }
        }
    }
}

GraphSnapshot init_states(int num_users, int num_items, int d, int history_capacity, uint64_t seed) {
    if (num_users < 0 || num_items < 0 || d <= 0 || history_capacity < 0)
        throw DomainError("init_states: bad sizes");
    GraphSnapshot snap;
    snap.d = d;
    snap.history_capacity = history_capacity;
    snap.users.resize(num_users);
    snap.items.resize(num_items);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto* table : {&snap.users, &snap.items})
        for (EntityState& e : *table) {
            e.emb.value = DenseMatrix(d, 1);
            for (double& v : e.emb.value.data) v = gauss(rng);
        }
    return snap;
}

void record_interaction(GraphSnapshot& snap, const Interaction& x,
                        StateRef new_user_emb, StateRef new_item_emb) {
    EntityState& u = snap.state(Side::user, x.user);
    EntityState& v = snap.state(Side::item, x.item);
    for (const EntityState* e : {&u, &v})
        if (e->last_time && x.time < *e->last_time)
            throw OrderingError("interaction at t=" + std::to_string(x.time) +
                                " precedes an entity clock at t=" + std::to_string(*e->last_time));
    if (new_user_emb.value.rows != snap.d || new_user_emb.value.cols != 1 ||
        new_item_emb.value.rows != snap.d || new_item_emb.value.cols != 1)
        throw DimensionError("record_interaction: embeddings " + new_user_emb.value.shape_str() +
                             " / " + new_item_emb.value.shape_str() + " for d=" + std::to_string(snap.d));

    // Histories keep the embeddings the entities had going into this
    // interaction, not the freshly produced ones.
    auto append = [&](EntityState& owner, int partner, StateRef snapshot) {
        owner.history.push_back(HistoryEntry{partner, x.time, std::move(snapshot)});
        if (static_cast<int>(owner.history.size()) > snap.history_capacity)
            owner.history.erase(owner.history.begin());
    };
    StateRef old_user = u.emb;
    StateRef old_item = v.emb;
    if (snap.history_capacity > 0) {
        append(v, x.user, std::move(old_user));
        append(u, x.item, std::move(old_item));
    }

    u.emb = std::move(new_user_emb);
    v.emb = std::move(new_item_emb);
    u.last_time = x.time;
    v.last_time = x.time;
    if (x.time > snap.now) snap.now = x.time;
}

std::vector<HistoryEntry*> neighbors_for(GraphSnapshot& snap, Side s, int id,
                                         std::optional<int> exclude_partner) {
    EntityState& e = snap.state(s, id);
    std::vector<HistoryEntry*> out;
    out.reserve(e.history.size());
    for (HistoryEntry& h : e.history)
        if (!exclude_partner || h.partner != *exclude_partner) out.push_back(&h);
    return out;
}

std::vector<const HistoryEntry*> neighbors_for(const GraphSnapshot& snap, Side s, int id,
                                               std::optional<int> exclude_partner) {
    auto mut = neighbors_for(const_cast<GraphSnapshot&>(snap), s, id, exclude_partner);
    return {mut.begin(), mut.end()};
}

} // namespace dgcf
