#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "paat/lstm.hpp"
#include "paat/matrix.hpp"
#include "paat/segments.hpp"

namespace paat {

using NodeId = int;

// Reverse-mode differentiation over recorded matrix primitives. Node ids
// are topologically ordered by construction; one output node per entry.
// A tape belongs to a single forward/backward pass and is not shared
// across workers.
class Tape {
public:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Add,
        Mul,
        Scale,
        AddColVec,
        ColScale,
        Tanh,
        Sigmoid,
        RowSoftmax,
        DiagOf,
        Sum,
        SliceCols,
        ConcatCols,
        ConcatRows,
        EmbedSegments,
        BiLstm,
        Bce,
    };

    NodeId leaf(Matrix value, bool requiresGrad, std::string name = "");
    NodeId constant(Matrix value) { return leaf(std::move(value), false); }

    NodeId matmul(NodeId a, NodeId b, bool transA = false, bool transB = false);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId addColVec(NodeId a, NodeId v);
    NodeId colScale(NodeId a, NodeId s);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId rowSoftmax(NodeId a);
    NodeId diagOf(NodeId a);
    NodeId sum(NodeId a);
    NodeId sliceCols(NodeId a, std::size_t c0, std::size_t c1);
    NodeId concatCols(const std::vector<NodeId>& parts);
    NodeId concatRows(NodeId a, NodeId b);

    // Embedding lookup over all segments; when mix is set each column
    // additionally receives gamma * (segment mean of looked-up columns).
    NodeId embedSegments(NodeId table, const std::vector<TokenId>& tokens,
                         const SegmentBoundaries& boundaries, double gamma, bool mix);

    // Fused bidirectional LSTM. params holds the 24 tensors, forward
    // direction first, in LstmDirView order.
    NodeId biLstm(NodeId x, const std::vector<NodeId>& params);

    // Mean binary cross-entropy of probabilities against a 0/1 gold
    // vector; probabilities are clamped to [1e-12, 1 - 1e-12].
    NodeId bce(NodeId probs, const std::vector<std::uint8_t>& gold);

    const Matrix& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool requiresGrad(NodeId id) const {
        return nodes_[static_cast<std::size_t>(id)].requiresGrad;
    }
    std::size_t nodeCount() const { return nodes_.size(); }

    // Adjoint pass from a scalar (1x1) loss node. Adjoints accumulate
    // over fan-out; callable once per tape.
    void backward(NodeId lossNode);

    // Gradient of the loss w.r.t. a node; zeros if the node was never
    // reached. Valid after backward().
    Matrix grad(NodeId id) const;

private:
    struct Node {
        Op op;
        Matrix value;
        std::vector<NodeId> inputs;
        bool requiresGrad = false;
        std::string name;
        // op payloads
        bool transA = false, transB = false;
        double scalar = 0.0;
        std::size_t c0 = 0, c1 = 0;
        std::vector<TokenId> tokens;
        SegmentBoundaries boundaries;
        std::vector<std::uint8_t> gold;
        std::unique_ptr<BiLstmCache> lstmCache;
    };

    NodeId push(Node node);
    Node& at(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Matrix& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Matrix& gradBuf(NodeId id);
    bool anyGrad(const std::vector<NodeId>& ids) const;
    BiLstmView lstmView(const Node& n) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    bool backwardDone_ = false;
};

// Collects gradients for a set of named leaves after tape.backward().
struct LeafGrad {
    std::string name;
    NodeId id;
    Matrix grad;
};

std::vector<LeafGrad> leafGradients(const Tape& tape,
                                    const std::vector<std::pair<std::string, NodeId>>& leaves);

}  // namespace paat
