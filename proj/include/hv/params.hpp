#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hv/tape.hpp"

namespace hv {

/// Named parameter tensors in registration order, with optimizer moments.
/// Registration order is fixed by the model builder, so optimizer sweeps
/// and checkpoint dumps are deterministic.
struct ParamStore {
    struct Entry {
        std::string name;
        Matrix value;
        Matrix m; // Adam first moment
        Matrix v; // Adam second moment
        bool trainable = true;
    };

    std::vector<Entry> entries;
    std::unordered_map<std::string, int> index;

    Matrix& add(const std::string& name, Matrix init, bool trainable = true) {
        if (index.count(name)) throw ModelError("params: duplicate parameter '" + name + "'");
        index[name] = static_cast<int>(entries.size());
        entries.push_back(Entry{name, std::move(init), Matrix{}, Matrix{}, trainable});
        Entry& e = entries.back();
        e.m = Matrix::zeros(e.value.rows, e.value.cols);
        e.v = Matrix::zeros(e.value.rows, e.value.cols);
        return e.value;
    }

    int find(const std::string& name) const {
        auto it = index.find(name);
        return it == index.end() ? -1 : it->second;
    }

    Matrix& value(const std::string& name) {
        int i = find(name);
        if (i < 0) throw ModelError("params: unknown parameter '" + name + "'");
        return entries[i].value;
    }
    const Matrix& value(const std::string& name) const {
        int i = find(name);
        if (i < 0) throw ModelError("params: unknown parameter '" + name + "'");
        return entries[i].value;
    }
};

/// Per-forward binding of every store entry onto a tape. Trainable
/// entries bind as differentiable leaves, frozen ones as plain inputs.
struct BoundParams {
    const ParamStore* store = nullptr;
    std::vector<ad::Var> vars;

    ad::Var operator[](const std::string& name) const {
        int i = store->find(name);
        if (i < 0) throw ModelError("params: unknown parameter '" + name + "'");
        return vars[i];
    }
};

inline BoundParams bind_params(ad::Tape& tape, const ParamStore& store) {
    BoundParams b;
    b.store = &store;
    b.vars.reserve(store.entries.size());
    for (const auto& e : store.entries)
        b.vars.push_back(e.trainable ? tape.param(e.value) : tape.input(e.value));
    return b;
}

} // namespace hv
