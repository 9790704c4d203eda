#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmal/kernels.hpp"
#include "mmal/rng.hpp"
#include "mmal/tensor.hpp"

namespace mmal {

using NodeId = int;

// Reverse-mode tape. Ops append nodes; node inputs always have smaller ids,
// so walking the tape backwards is a reverse topological traversal that
// visits each recorded op exactly once. A tape is single use: backward()
// throws if called twice.
template <typename T>
class Tape {
  public:
    NodeId leaf(Tensor<T> value, bool needs_grad = false) {
        return push(std::move(value), needs_grad);
    }

    // Trainable leaf. param_id keys the gradient map returned by backward().
    NodeId param(Tensor<T> value, int param_id) {
        NodeId id = push(std::move(value), true);
        params_.emplace_back(param_id, id);
        return id;
    }

    const Tensor<T>& value(NodeId id) const { return nodes_[id].value; }
    const Tensor<T>& grad(NodeId id) const { return nodes_[id].grad; }
    Tensor<T>& grad_ref(NodeId id) { return nodes_[id].grad; }
    bool needs_grad(NodeId id) const { return nodes_[id].needs_grad; }

    NodeId push(Tensor<T> value, bool needs_grad) {
        nodes_.push_back(Node{std::move(value), Tensor<T>{}, nullptr, needs_grad});
        Node& n = nodes_.back();
        if (n.needs_grad) n.grad = Tensor<T>(n.value.shape);
        return static_cast<NodeId>(nodes_.size()) - 1;
    }

    void set_back(NodeId id, std::function<void(Tape&)> back) {
        nodes_[id].back = std::move(back);
    }

    void add_grad(NodeId id, const Tensor<T>& g) {
        Node& n = nodes_[id];
        if (!n.needs_grad) return;
        for (std::size_t i = 0; i < g.size(); ++i) n.grad.data[i] += g.data[i];
    }

    // Seeds dLoss/dLoss = 1 and propagates. Returns dLoss/dParam for every
    // registered parameter; parameters the loss never touched keep their
    // zero-initialized gradients.
    std::map<int, Tensor<T>> backward(NodeId loss) {
        if (consumed_) throw std::runtime_error("tape: backward called twice");
        if (!nodes_[loss].value.is_scalar())
            throw std::invalid_argument("tape: loss must be a scalar");
        if (!std::isfinite(static_cast<double>(nodes_[loss].value.data[0])))
            throw std::runtime_error("tape: non-finite loss");
        consumed_ = true;

        nodes_[loss].grad.data[0] = T{1};
        for (NodeId id = loss; id >= 0; --id) {
            Node& n = nodes_[id];
            if (n.needs_grad && n.back) n.back(*this);
        }

        std::map<int, Tensor<T>> grads;
        for (const auto& [pid, nid] : params_) grads.emplace(pid, nodes_[nid].grad);
        return grads;
    }

    bool all_values_finite() const {
        for (const Node& n : nodes_)
            if (!n.value.all_finite()) return false;
        return true;
    }

  private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::function<void(Tape&)> back;
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<std::pair<int, NodeId>> params_;
    bool consumed_ = false;
};

// ---- ops ---------------------------------------------------------------

// y = x * w + b  with x: [B x I], w: [I x O], b: [O]
template <typename T>
NodeId linear(Tape<T>& tape, NodeId x, NodeId w, NodeId b) {
    const Tensor<T>& xv = tape.value(x);
    const Tensor<T>& wv = tape.value(w);
    const Tensor<T>& bv = tape.value(b);
    const std::size_t B = xv.rows(), I = xv.cols(), O = wv.cols();
    if (wv.rows() != I || bv.size() != O) throw std::invalid_argument("linear: shape mismatch");

    Tensor<T> y({B, O});
    kernels::matmul(xv.data.data(), wv.data.data(), y.data.data(), B, I, O);
#pragma omp parallel for schedule(static) if (B * O > 32768)
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < O; ++j) y.data[i * O + j] += bv.data[j];

    bool ng = tape.needs_grad(x) || tape.needs_grad(w) || tape.needs_grad(b);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x, w, b, B, I, O](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            if (t.needs_grad(x)) {
                Tensor<T> dx({B, I});
                kernels::matmul_bt(dy.data.data(), t.value(w).data.data(), dx.data.data(), B, O,
                                   I);
                t.add_grad(x, dx);
            }
            if (t.needs_grad(w)) {
                kernels::matmul_at_add(t.value(x).data.data(), dy.data.data(),
                                       t.grad_ref(w).data.data(), B, I, O);
            }
            if (t.needs_grad(b)) {
                Tensor<T>& db = t.grad_ref(b);
                for (std::size_t i = 0; i < B; ++i)
                    for (std::size_t j = 0; j < O; ++j) db.data[j] += dy.data[i * O + j];
            }
        });
    }
    return out;
}

template <typename T>
NodeId relu(Tape<T>& tape, NodeId x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> y(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = xv.data[i] > T{0} ? xv.data[i] : T{0};

    bool ng = tape.needs_grad(x);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            const Tensor<T>& xv2 = t.value(x);
            Tensor<T>& dx = t.grad_ref(x);
            for (std::size_t i = 0; i < dy.size(); ++i)
                if (xv2.data[i] > T{0}) dx.data[i] += dy.data[i];
        });
    }
    return out;
}

template <typename T>
NodeId tanh_act(Tape<T>& tape, NodeId x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> y(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = std::tanh(xv.data[i]);

    bool ng = tape.needs_grad(x);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            const Tensor<T>& yv = t.value(out);
            Tensor<T>& dx = t.grad_ref(x);
            for (std::size_t i = 0; i < dy.size(); ++i)
                dx.data[i] += dy.data[i] * (T{1} - yv.data[i] * yv.data[i]);
        });
    }
    return out;
}

// Inverted dropout. The mask for element i is a pure function of (seed, i),
// so parallel application and replay are deterministic. active=false is the
// inference path and returns the input node unchanged.
template <typename T>
NodeId dropout(Tape<T>& tape, NodeId x, double p, std::uint64_t seed, bool active) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
    if (!active || p == 0.0) return x;

    const Tensor<T>& xv = tape.value(x);
    const T inv_keep = static_cast<T>(1.0 / (1.0 - p));
    Tensor<T> y(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i)
        y.data[i] = unit_from_hash(seed, i) >= p ? xv.data[i] * inv_keep : T{0};

    bool ng = tape.needs_grad(x);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x, p, seed, inv_keep](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            Tensor<T>& dx = t.grad_ref(x);
            for (std::size_t i = 0; i < dy.size(); ++i)
                if (unit_from_hash(seed, i) >= p) dx.data[i] += dy.data[i] * inv_keep;
        });
    }
    return out;
}

// Presence-weighted mean over modality branches: out[i] = sum_m mask[i][m] *
// in_m[i] / count[i]. Absent branches are multiplied by an exact 0, so the
// output carries no dependence on their stored contents. Caller guarantees
// count[i] >= 1.
template <typename T>
NodeId masked_mean(Tape<T>& tape, const std::vector<NodeId>& branches,
                   const std::vector<std::vector<std::uint8_t>>& present) {
    if (branches.empty()) throw std::invalid_argument("masked_mean: no branches");
    const std::size_t M = branches.size();
    const Tensor<T>& first = tape.value(branches[0]);
    const std::size_t B = first.rows(), D = first.cols();

    std::vector<T> inv_count(B);
    for (std::size_t i = 0; i < B; ++i) {
        int c = 0;
        for (std::size_t m = 0; m < M; ++m) c += present[i][m] ? 1 : 0;
        if (c == 0) throw std::invalid_argument("masked_mean: sample with no present modality");
        inv_count[i] = T{1} / static_cast<T>(c);
    }

    Tensor<T> y({B, D});
    for (std::size_t m = 0; m < M; ++m) {
        const Tensor<T>& bm = tape.value(branches[m]);
        if (!bm.same_shape(first)) throw std::invalid_argument("masked_mean: shape mismatch");
        for (std::size_t i = 0; i < B; ++i) {
            if (!present[i][m]) continue;
            const T s = inv_count[i];
            for (std::size_t j = 0; j < D; ++j) y.data[i * D + j] += s * bm.data[i * D + j];
        }
    }

    bool ng = false;
    for (NodeId b : branches) ng = ng || tape.needs_grad(b);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, branches, present, inv_count, B, D, M](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            for (std::size_t m = 0; m < M; ++m) {
                if (!t.needs_grad(branches[m])) continue;
                Tensor<T>& dbm = t.grad_ref(branches[m]);
                for (std::size_t i = 0; i < B; ++i) {
                    if (!present[i][m]) continue;
                    const T s = inv_count[i];
                    for (std::size_t j = 0; j < D; ++j)
                        dbm.data[i * D + j] += s * dy.data[i * D + j];
                }
            }
        });
    }
    return out;
}

template <typename T>
struct XentResult {
    NodeId loss;
    Tensor<T> probs; // [B x K], rows sum to 1
};

// Mean cross-entropy over the batch with a numerically stable softmax.
template <typename T>
XentResult<T> softmax_xent(Tape<T>& tape, NodeId logits, const std::vector<int>& labels) {
    const Tensor<T>& lv = tape.value(logits);
    const std::size_t B = lv.rows(), K = lv.cols();
    if (labels.size() != B) throw std::invalid_argument("softmax_xent: label count mismatch");

    Tensor<T> probs({B, K});
    double loss_acc = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K)
            throw std::out_of_range("softmax_xent: label out of range");
        const T* row = lv.data.data() + i * K;
        T mx = row[0];
        for (std::size_t j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < K; ++j) z += std::exp(static_cast<double>(row[j] - mx));
        const double log_z = std::log(z);
        for (std::size_t j = 0; j < K; ++j)
            probs.data[i * K + j] =
                static_cast<T>(std::exp(static_cast<double>(row[j] - mx) - log_z));
        loss_acc -= static_cast<double>(row[labels[i]] - mx) - log_z;
    }

    Tensor<T> loss({1});
    loss.data[0] = static_cast<T>(loss_acc / static_cast<double>(B));

    bool ng = tape.needs_grad(logits);
    NodeId out = tape.push(std::move(loss), ng);
    if (ng) {
        Tensor<T> probs_copy = probs;
        tape.set_back(out, [out, logits, labels, probs_copy, B, K](Tape<T>& t) {
            const T dy = t.grad(out).data[0];
            const T scale = dy / static_cast<T>(B);
            Tensor<T>& dl = t.grad_ref(logits);
            for (std::size_t i = 0; i < B; ++i)
                for (std::size_t j = 0; j < K; ++j) {
                    T g = probs_copy.data[i * K + j];
                    if (static_cast<std::size_t>(labels[i]) == j) g -= T{1};
                    dl.data[i * K + j] += scale * g;
                }
        });
    }
    return {out, std::move(probs)};
}

// ---- small ops used by tests and toy losses ------------------------------

template <typename T>
NodeId mul(Tape<T>& tape, NodeId a, NodeId b) {
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    if (!av.same_shape(bv)) throw std::invalid_argument("mul: shape mismatch");
    Tensor<T> y(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) y.data[i] = av.data[i] * bv.data[i];

    bool ng = tape.needs_grad(a) || tape.needs_grad(b);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, a, b](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            if (t.needs_grad(a)) {
                Tensor<T>& da = t.grad_ref(a);
                const Tensor<T>& bv2 = t.value(b);
                for (std::size_t i = 0; i < dy.size(); ++i)
                    da.data[i] += dy.data[i] * bv2.data[i];
            }
            if (t.needs_grad(b)) {
                Tensor<T>& db = t.grad_ref(b);
                const Tensor<T>& av2 = t.value(a);
                for (std::size_t i = 0; i < dy.size(); ++i)
                    db.data[i] += dy.data[i] * av2.data[i];
            }
        });
    }
    return out;
}

template <typename T>
NodeId sum_all(Tape<T>& tape, NodeId x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> y({1});
    double acc = 0.0;
    for (const T& v : xv.data) acc += static_cast<double>(v);
    y.data[0] = static_cast<T>(acc);

    bool ng = tape.needs_grad(x);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x](Tape<T>& t) {
            const T dy = t.grad(out).data[0];
            Tensor<T>& dx = t.grad_ref(x);
            for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy;
        });
    }
    return out;
}

template <typename T>
NodeId scale(Tape<T>& tape, NodeId x, T s) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> y(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = xv.data[i] * s;

    bool ng = tape.needs_grad(x);
    NodeId out = tape.push(std::move(y), ng);
    if (ng) {
        tape.set_back(out, [out, x, s](Tape<T>& t) {
            const Tensor<T>& dy = t.grad(out);
            Tensor<T>& dx = t.grad_ref(x);
            for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] += dy.data[i] * s;
        });
    }
    return out;
}

} // namespace mmal
