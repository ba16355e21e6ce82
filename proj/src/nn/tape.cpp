#include "cnnrom/nn/tape.hpp"

#include <stdexcept>

namespace cnnrom::nn {

Tensor& ParamStore::add(const std::string& name, Tensor value, bool trainable)
{
    if (contains(name)) {
        throw std::invalid_argument("ParamStore: duplicate name " + name);
    }
    Tensor grad(value.shape());
    auto& e = entries_[name];
    e.value = std::move(value);
    e.grad = std::move(grad);
    e.trainable = trainable;
    return e.value;
}

ParamStore::Entry& ParamStore::at(const std::string& name)
{
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("ParamStore: unknown parameter " + name);
    }
    return it->second;
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const
{
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("ParamStore: unknown parameter " + name);
    }
    return it->second;
}

void ParamStore::zero_grad()
{
    for (auto& [name, e] : entries_) {
        e.grad.fill(0.0);
    }
}

std::vector<std::string> ParamStore::names() const
{
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) {
        out.push_back(name);
    }
    return out;
}

std::int64_t ParamStore::num_trainable_scalars() const
{
    std::int64_t n = 0;
    for (const auto& [name, e] : entries_) {
        if (e.trainable) {
            n += e.value.size();
        }
    }
    return n;
}

void ParamStore::load_values(const ParamStore& other)
{
    for (const auto& [name, e] : other.entries_) {
        Entry& mine = at(name);
        if (mine.value.shape() != e.value.shape()) {
            throw std::invalid_argument("ParamStore: shape mismatch for " + name);
        }
        mine.value = e.value;
    }
}

bool ParamStore::operator==(const ParamStore& other) const
{
    if (entries_.size() != other.entries_.size()) {
        return false;
    }
    for (const auto& [name, e] : entries_) {
        auto it = other.entries_.find(name);
        if (it == other.entries_.end() || it->second.value != e.value || it->second.trainable != e.trainable) {
            return false;
        }
    }
    return true;
}

const Tensor& Var::value() const
{
    return tape->value(id);
}

bool Var::requires_grad() const
{
    return tape->requires_grad(id);
}

Var Tape::leaf(Tensor value, bool requires_grad)
{
    nodes_.push_back(Node{std::move(value), {}, requires_grad, nullptr, nullptr});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(ParamStore& store, const std::string& name, bool track)
{
    ParamStore::Entry& e = store.at(name);
    const bool needs = track && e.trainable;
    nodes_.push_back(Node{e.value, {}, needs, nullptr, needs ? &e.grad : nullptr});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward)
{
    bool needs = false;
    for (const Var& v : inputs) {
        if (v.tape != this) {
            throw std::invalid_argument("Tape::record: input belongs to another tape");
        }
        needs = needs || requires_grad(v.id);
    }
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : nullptr, nullptr});
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor& g)
{
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) {
        return;
    }
    if (n.grad.empty() && n.value.size() > 0) {
        n.grad = g;
        return;
    }
    if (g.size() != n.value.size()) {
        throw std::logic_error("Tape::accumulate: gradient size mismatch");
    }
    n.grad.vec() += g.vec();
}

void Tape::accumulate(int id, Tensor&& g)
{
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) {
        return;
    }
    if (n.grad.empty() && n.value.size() > 0) {
        if (g.size() != n.value.size()) {
            throw std::logic_error("Tape::accumulate: gradient size mismatch");
        }
        n.grad = std::move(g);
        return;
    }
    accumulate(id, static_cast<const Tensor&>(g));
}

void Tape::backward(Var loss)
{
    if (value(loss).size() != 1) {
        throw std::invalid_argument("Tape::backward: loss must be a single value");
    }
    backward(loss, Tensor(value(loss).shape(), 1.0));
}

void Tape::backward(Var out, const Tensor& seed)
{
    if (seed.size() != value(out).size()) {
        throw std::invalid_argument("Tape::backward: seed shape mismatch");
    }
    accumulate(out.id, seed);
    for (int id = out.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad || n.grad.empty()) {
            continue;
        }
        if (n.backward) {
            n.backward(*this, n.grad);
        }
        if (n.sink != nullptr) {
            n.sink->vec() += n.grad.vec();
        }
    }
}

}  // namespace cnnrom::nn
