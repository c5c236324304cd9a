#include "paat/tape.hpp"

#include <cmath>

#include "paat/kernels.hpp"

namespace paat {

namespace {
constexpr double kProbClamp = 1e-12;
}

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

bool Tape::anyGrad(const std::vector<NodeId>& ids) const {
    for (NodeId id : ids)
        if (requiresGrad(id)) return true;
    return false;
}

NodeId Tape::leaf(Matrix value, bool requiresGrad, std::string name) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requiresGrad = requiresGrad;
    n.name = std::move(name);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b, bool transA, bool transB) {
    Node n;
    n.op = Op::MatMul;
    n.inputs = {a, b};
    n.transA = transA;
    n.transB = transB;
    n.value = paat::matmul(val(a), val(b), transA, transB);
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.inputs = {a, b};
    n.value = paat::add(val(a), val(b));
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Mul;
    n.inputs = {a, b};
    n.value = paat::mul(val(a), val(b));
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
    Node n;
    n.op = Op::Scale;
    n.inputs = {a};
    n.scalar = c;
    n.value = scaleMap(val(a), c);
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::addColVec(NodeId a, NodeId v) {
    Node n;
    n.op = Op::AddColVec;
    n.inputs = {a, v};
    n.value = paat::addColVec(val(a), val(v));
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::colScale(NodeId a, NodeId s) {
    Node n;
    n.op = Op::ColScale;
    n.inputs = {a, s};
    n.value = paat::colScale(val(a), val(s));
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    Node n;
    n.op = Op::Tanh;
    n.inputs = {a};
    n.value = tanhMap(val(a));
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
    Node n;
    n.op = Op::Sigmoid;
    n.inputs = {a};
    n.value = sigmoidMap(val(a));
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::rowSoftmax(NodeId a) {
    Node n;
    n.op = Op::RowSoftmax;
    n.inputs = {a};
    n.value = paat::rowSoftmax(val(a));
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::diagOf(NodeId a) {
    Node n;
    n.op = Op::DiagOf;
    n.inputs = {a};
    n.value = paat::diagOf(val(a));
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = Op::Sum;
    n.inputs = {a};
    n.value = Matrix(1, 1);
    n.value[0] = sumAll(val(a));
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::sliceCols(NodeId a, std::size_t c0, std::size_t c1) {
    Node n;
    n.op = Op::SliceCols;
    n.inputs = {a};
    n.c0 = c0;
    n.c1 = c1;
    n.value = paat::sliceCols(val(a), c0, c1);
    n.requiresGrad = requiresGrad(a);
    return push(std::move(n));
}

NodeId Tape::concatCols(const std::vector<NodeId>& parts) {
    Node n;
    n.op = Op::ConcatCols;
    n.inputs = parts;
    std::vector<const Matrix*> mats;
    mats.reserve(parts.size());
    for (NodeId id : parts) mats.push_back(&val(id));
    n.value = paat::concatCols(mats);
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::concatRows(NodeId a, NodeId b) {
    Node n;
    n.op = Op::ConcatRows;
    n.inputs = {a, b};
    n.value = paat::concatRows(val(a), val(b));
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::embedSegments(NodeId table, const std::vector<TokenId>& tokens,
                           const SegmentBoundaries& boundaries, double gamma, bool mix) {
    boundaries.validate();
    if (boundaries.tokenCount() != tokens.size()) {
        throw ContractError("embedSegments: boundaries cover " +
                            std::to_string(boundaries.tokenCount()) + " tokens, document has " +
                            std::to_string(tokens.size()));
    }
    const Matrix& tab = val(table);
    const std::size_t e = tab.rows();
    Node n;
    n.op = Op::EmbedSegments;
    n.inputs = {table};
    n.tokens = tokens;
    n.boundaries = boundaries;
    n.scalar = gamma;
    n.transA = mix;  // reused flag: mixing enabled
    Matrix out(e, tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const TokenId id = tokens[t];
        if (id < 0 || static_cast<std::size_t>(id) >= tab.cols()) {
            throw InputError("embedSegments: token id " + std::to_string(id) + " at position " +
                             std::to_string(t) + " is outside vocabulary of " +
                             std::to_string(tab.cols()));
        }
        for (std::size_t r = 0; r < e; ++r) out.at(r, t) = tab.at(r, static_cast<std::size_t>(id));
    }
    if (mix && gamma != 0.0) {
        std::vector<double> mean(e);
        for (const auto& [s0, s1] : boundaries.spans) {
            const double inv = 1.0 / static_cast<double>(s1 - s0);
            for (std::size_t r = 0; r < e; ++r) {
                double acc = 0.0;
                for (std::size_t t = s0; t < s1; ++t) acc += out.at(r, t);
                mean[r] = acc * inv;
            }
            for (std::size_t t = s0; t < s1; ++t)
                for (std::size_t r = 0; r < e; ++r) out.at(r, t) += gamma * mean[r];
        }
    }
    n.value = std::move(out);
    n.requiresGrad = requiresGrad(table);
    return push(std::move(n));
}

BiLstmView Tape::lstmView(const Node& n) const {
    BiLstmView v;
    for (std::size_t i = 0; i < kLstmTensorsPerDir; ++i) {
        v.fwd.t[i] = &val(n.inputs[1 + i]);
        v.bwd.t[i] = &val(n.inputs[1 + kLstmTensorsPerDir + i]);
    }
    return v;
}

NodeId Tape::biLstm(NodeId x, const std::vector<NodeId>& params) {
    if (params.size() != 2 * kLstmTensorsPerDir) {
        throw ContractError("biLstm: expected " + std::to_string(2 * kLstmTensorsPerDir) +
                            " parameter tensors, got " + std::to_string(params.size()));
    }
    Node n;
    n.op = Op::BiLstm;
    n.inputs.reserve(1 + params.size());
    n.inputs.push_back(x);
    n.inputs.insert(n.inputs.end(), params.begin(), params.end());
    n.lstmCache = std::make_unique<BiLstmCache>();
    n.value = biLstmForwardKernel(lstmView(n), val(x), n.lstmCache.get());
    n.requiresGrad = anyGrad(n.inputs);
    return push(std::move(n));
}

NodeId Tape::bce(NodeId probs, const std::vector<std::uint8_t>& gold) {
    const Matrix& p = val(probs);
    if (p.cols() != 1 || p.rows() != gold.size()) {
        throw ContractError("bce: probabilities " + p.shapeStr() + " against " +
                            std::to_string(gold.size()) + " gold labels");
    }
    Node n;
    n.op = Op::Bce;
    n.inputs = {probs};
    n.gold = gold;
    double loss = 0.0;
    for (std::size_t l = 0; l < gold.size(); ++l) {
        const double pc = std::min(1.0 - kProbClamp, std::max(kProbClamp, p[l]));
        loss -= gold[l] ? std::log(pc) : std::log(1.0 - pc);
    }
    n.value = Matrix(1, 1);
    n.value[0] = loss / static_cast<double>(gold.size());
    n.requiresGrad = requiresGrad(probs);
    return push(std::move(n));
}

Matrix& Tape::gradBuf(NodeId id) {
    Matrix& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g = Matrix(val(id).rows(), val(id).cols());
    return g;
}

Matrix Tape::grad(NodeId id) const {
    if (!backwardDone_) throw ContractError("grad: backward has not run");
    const Matrix& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) return Matrix(val(id).rows(), val(id).cols());
    return g;
}

void Tape::backward(NodeId lossNode) {
    const Matrix& loss = val(lossNode);
    if (loss.rows() != 1 || loss.cols() != 1) {
        throw ContractError("backward: loss node is " + loss.shapeStr() + ", expected 1x1");
    }
    if (backwardDone_) throw ContractError("backward: tape already differentiated");
    backwardDone_ = true;
    grads_.assign(nodes_.size(), Matrix());
    gradBuf(lossNode)[0] = 1.0;

    for (NodeId id = lossNode; id >= 0; --id) {
        Node& n = at(id);
        if (!n.requiresGrad) continue;
        const Matrix& g = grads_[static_cast<std::size_t>(id)];
        if (g.empty()) continue;  // not on a path to the loss

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const NodeId a = n.inputs[0], b = n.inputs[1];
                const Matrix& av = val(a);
                const Matrix& bv = val(b);
                if (requiresGrad(a)) {
                    Matrix& da = gradBuf(a);
                    if (!n.transA && !n.transB) matmulAcc(da, g, bv, false, true, true);
                    else if (!n.transA && n.transB) matmulAcc(da, g, bv, false, false, true);
                    else if (n.transA && !n.transB) matmulAcc(da, bv, g, false, true, true);
                    else matmulAcc(da, bv, g, true, true, true);
                }
                if (requiresGrad(b)) {
                    Matrix& db = gradBuf(b);
                    if (!n.transA && !n.transB) matmulAcc(db, av, g, true, false, true);
                    else if (!n.transA && n.transB) matmulAcc(db, g, av, true, false, true);
                    else if (n.transA && !n.transB) matmulAcc(db, av, g, false, false, true);
                    else matmulAcc(db, g, av, true, true, true);
                }
                break;
            }
            case Op::Add: {
                for (NodeId in : n.inputs) {
                    if (!requiresGrad(in)) continue;
                    Matrix& d = gradBuf(in);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                }
                break;
            }
            case Op::Mul: {
                const NodeId a = n.inputs[0], b = n.inputs[1];
                if (requiresGrad(a)) {
                    Matrix& da = gradBuf(a);
                    const Matrix& bv = val(b);
                    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
                }
                if (requiresGrad(b)) {
                    Matrix& db = gradBuf(b);
                    const Matrix& av = val(a);
                    for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
                }
                break;
            }
            case Op::Scale: {
                Matrix& da = gradBuf(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.scalar * g[i];
                break;
            }
            case Op::AddColVec: {
                const NodeId a = n.inputs[0], v = n.inputs[1];
                if (requiresGrad(a)) {
                    Matrix& da = gradBuf(a);
                    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                }
                if (requiresGrad(v)) {
                    Matrix& dv = gradBuf(v);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                        double s = 0.0;
                        const double* row = g.rowPtr(r);
                        for (std::size_t c = 0; c < g.cols(); ++c) s += row[c];
                        dv[r] += s;
                    }
                }
                break;
            }
            case Op::ColScale: {
                const NodeId a = n.inputs[0], s = n.inputs[1];
                const Matrix& av = val(a);
                const Matrix& sv = val(s);
                if (requiresGrad(a)) {
                    Matrix& da = gradBuf(a);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c)
                            da.at(r, c) += g.at(r, c) * sv[c];
                }
                if (requiresGrad(s)) {
                    Matrix& ds = gradBuf(s);
                    for (std::size_t c = 0; c < g.cols(); ++c) {
                        double acc = 0.0;
                        for (std::size_t r = 0; r < g.rows(); ++r)
                            acc += g.at(r, c) * av.at(r, c);
                        ds[c] += acc;
                    }
                }
                break;
            }
            case Op::Tanh: {
                Matrix& da = gradBuf(n.inputs[0]);
                const Matrix& y = n.value;
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case Op::Sigmoid: {
                Matrix& da = gradBuf(n.inputs[0]);
                const Matrix& y = n.value;
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
                break;
            }
            case Op::RowSoftmax: {
                Matrix& da = gradBuf(n.inputs[0]);
                const Matrix& y = n.value;
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    const double* gr = g.rowPtr(r);
                    const double* yr = y.rowPtr(r);
                    double dot = 0.0;
                    for (std::size_t c = 0; c < g.cols(); ++c) dot += gr[c] * yr[c];
                    double* dr = da.rowPtr(r);
                    for (std::size_t c = 0; c < g.cols(); ++c)
                        dr[c] += (gr[c] - dot) * yr[c];
                }
                break;
            }
            case Op::DiagOf: {
                Matrix& da = gradBuf(n.inputs[0]);
                for (std::size_t i = 0; i < g.rows(); ++i) da.at(i, i) += g[i];
                break;
            }
            case Op::Sum: {
                Matrix& da = gradBuf(n.inputs[0]);
                const double gv = g[0];
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += gv;
                break;
            }
            case Op::SliceCols: {
                Matrix& da = gradBuf(n.inputs[0]);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < g.cols(); ++c) da.at(r, n.c0 + c) += g.at(r, c);
                break;
            }
            case Op::ConcatCols: {
                std::size_t off = 0;
                for (NodeId in : n.inputs) {
                    const std::size_t w = val(in).cols();
                    if (requiresGrad(in)) {
                        Matrix& d = gradBuf(in);
                        for (std::size_t r = 0; r < d.rows(); ++r)
                            for (std::size_t c = 0; c < w; ++c) d.at(r, c) += g.at(r, off + c);
                    }
                    off += w;
                }
                break;
            }
            case Op::ConcatRows: {
                const NodeId a = n.inputs[0], b = n.inputs[1];
                const std::size_t ar = val(a).rows();
                if (requiresGrad(a)) {
                    Matrix& da = gradBuf(a);
                    for (std::size_t r = 0; r < ar; ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) da.at(r, c) += g.at(r, c);
                }
                if (requiresGrad(b)) {
                    Matrix& db = gradBuf(b);
                    for (std::size_t r = 0; r < val(b).rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c)
                            db.at(r, c) += g.at(ar + r, c);
                }
                break;
            }
            case Op::EmbedSegments: {
                Matrix& dt = gradBuf(n.inputs[0]);
                const std::size_t e = dt.rows();
                const double gamma = n.scalar;
                const bool mix = n.transA;
                for (const auto& [s0, s1] : n.boundaries.spans) {
                    std::vector<double> colsum;
                    if (mix && gamma != 0.0) {
                        colsum.assign(e, 0.0);
                        for (std::size_t t = s0; t < s1; ++t)
                            for (std::size_t r = 0; r < e; ++r) colsum[r] += g.at(r, t);
                    }
                    const double mixCoef =
                        (mix && gamma != 0.0) ? gamma / static_cast<double>(s1 - s0) : 0.0;
                    for (std::size_t t = s0; t < s1; ++t) {
                        const auto col = static_cast<std::size_t>(n.tokens[t]);
                        for (std::size_t r = 0; r < e; ++r) {
                            double d = g.at(r, t);
                            if (mixCoef != 0.0) d += mixCoef * colsum[r];
                            dt.at(r, col) += d;
                        }
                    }
                }
                break;
            }
            case Op::BiLstm: {
                const NodeId x = n.inputs[0];
                std::array<Matrix*, 2 * kLstmTensorsPerDir> pg{};
                // Parameter grads always materialize; untouched ones stay
                // zero and are simply not read back by callers.
                for (std::size_t i = 0; i < pg.size(); ++i) pg[i] = &gradBuf(n.inputs[1 + i]);
                Matrix& dx = gradBuf(x);
                biLstmBackwardKernel(lstmView(n), val(x), *n.lstmCache, g, pg, dx);
                break;
            }
            case Op::Bce: {
                Matrix& dp = gradBuf(n.inputs[0]);
                const Matrix& p = val(n.inputs[0]);
                const double invL = 1.0 / static_cast<double>(n.gold.size());
                for (std::size_t l = 0; l < n.gold.size(); ++l) {
                    if (p[l] < kProbClamp || p[l] > 1.0 - kProbClamp) continue;  // clamped flat
                    const double d =
                        n.gold[l] ? -1.0 / p[l] : 1.0 / (1.0 - p[l]);
                    dp[l] += g[0] * invL * d;
                }
                break;
            }
        }
    }
}

std::vector<LeafGrad> leafGradients(const Tape& tape,
                                    const std::vector<std::pair<std::string, NodeId>>& leaves) {
    std::vector<LeafGrad> out;
    out.reserve(leaves.size());
    for (const auto& [name, id] : leaves) out.push_back({name, id, tape.grad(id)});
    return out;
}

}  // namespace paat
