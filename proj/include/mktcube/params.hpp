#pragma once

#include "mktcube/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mktcube::ad {

/// Ordered, named collection of trainable tensors. Order is insertion order
/// and is the canonical order for optimizer slots and checkpoints.
class ParamMap {
public:
    TensorPtr add(const std::string& name, TensorPtr t) {
        for (const auto& [n, _] : items_) {
            if (n == name) throw std::invalid_argument("ParamMap: duplicate parameter name " + name);
        }
        t->requires_grad = true;
        items_.emplace_back(name, t);
        return t;
    }

    TensorPtr get(const std::string& name) const {
        for (const auto& [n, t] : items_) {
            if (n == name) return t;
        }
        throw std::invalid_argument("ParamMap: unknown parameter " + name);
    }

    bool contains(const std::string& name) const {
        for (const auto& [n, _] : items_) {
            if (n == name) return true;
        }
        return false;
    }

    std::vector<TensorPtr> tensors() const {
        std::vector<TensorPtr> out;
        out.reserve(items_.size());
        for (const auto& [_, t] : items_) out.push_back(t);
        return out;
    }

    const std::vector<std::pair<std::string, TensorPtr>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    Index total_count() const {
        Index n = 0;
        for (const auto& [_, t] : items_) n += t->size();
        return n;
    }

private:
    std::vector<std::pair<std::string, TensorPtr>> items_;
};

} // namespace mktcube::ad
