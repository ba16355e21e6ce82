#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cnnrom/nn/tensor.hpp"

namespace cnnrom::nn {

/// Named tensors. Trainable entries receive gradients and optimizer updates;
/// the others are buffers (batch-norm running statistics).
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
        bool trainable = true;
    };

    /// Throws std::invalid_argument if `name` already exists.
    Tensor& add(const std::string& name, Tensor value, bool trainable = true);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    /// Throws std::out_of_range for an unknown name.
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    Tensor& value(const std::string& name) { return at(name).value; }
    const Tensor& value(const std::string& name) const { return at(name).value; }
    Tensor& grad(const std::string& name) { return at(name).grad; }

    void zero_grad();
    /// Sorted names.
    std::vector<std::string> names() const;
    std::int64_t num_trainable_scalars() const;
    std::map<std::string, Entry>& entries() { return entries_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    /// Values of `other` copied into matching names; shapes must agree.
    void load_values(const ParamStore& other);
    bool operator==(const ParamStore& other) const;

private:
    std::map<std::string, Entry> entries_;
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
};

/// Reverse-mode record. Nodes are appended in evaluation order, so backward
/// walks them in reverse and visits each once.
class Tape {
public:
    /// Receives d(loss)/d(output) and pushes contributions to inputs via accumulate().
    using Backward = std::function<void(Tape& tape, const Tensor& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);
    /// Leaf holding a copy of a stored parameter; its gradient is added to the
    /// store's grad buffer by backward() when `track` and the entry is trainable.
    Var param(ParamStore& store, const std::string& name, bool track = true);
    /// Node computed from `inputs`; `backward` runs only if some input needs a gradient.
    Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

    const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& value(Var v) const { return value(v.id); }
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    /// Gradient of a node after backward(); empty if it received none.
    const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

    /// Adds `g` to the gradient of node `id` (ignored if it needs none).
    void accumulate(int id, const Tensor& g);
    void accumulate(int id, Tensor&& g);

    /// Seeds d(loss)/d(loss) = 1 for a single-element node and back-propagates.
    void backward(Var loss);
    /// Back-propagates an explicit upstream gradient.
    void backward(Var out, const Tensor& seed);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Backward backward;
        Tensor* sink = nullptr;
    };
    std::deque<Node> nodes_;
};

}  // namespace cnnrom::nn
