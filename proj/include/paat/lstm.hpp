#pragma once

#include <array>

#include "paat/matrix.hpp"

// Bidirectional LSTM forward/backward kernels. The recurrence is serial
// in time, so these stay single-threaded; the tape wraps them as one
// fused operation with cached gate activations for the adjoint pass.

namespace paat {

// One direction's tensors in fixed order: Wi Wf Wg Wo (u x e),
// Ri Rf Rg Ro (u x u), bi bf bg bo (u x 1).
inline constexpr std::size_t kLstmTensorsPerDir = 12;

struct LstmDirView {
    std::array<const Matrix*, kLstmTensorsPerDir> t{};

    const Matrix& W(std::size_t gate) const { return *t[gate]; }
    const Matrix& R(std::size_t gate) const { return *t[4 + gate]; }
    const Matrix& b(std::size_t gate) const { return *t[8 + gate]; }
    std::size_t hiddenSize() const { return t[0]->rows(); }
    std::size_t inputSize() const { return t[0]->cols(); }
};

struct LstmDirCache {
    // u x N each; gate activations and cell/hidden states per step.
    Matrix i, f, g, o, c, h;
};

// Runs one direction over all N columns of x (e x N). reverse walks
// right-to-left. Writes hidden states into cache->h; returns nothing
// extra. cache must outlive the backward call.
void lstmDirForward(const LstmDirView& w, const Matrix& x, bool reverse, LstmDirCache* cache);

// Accumulates parameter gradients (same order as LstmDirView) and the
// input gradient. dH is u x N, the loss gradient w.r.t. this
// direction's hidden states.
void lstmDirBackward(const LstmDirView& w, const Matrix& x, const LstmDirCache& cache,
                     bool reverse, const Matrix& dH,
                     std::array<Matrix*, kLstmTensorsPerDir>& grads, Matrix& dX);

struct BiLstmView {
    LstmDirView fwd, bwd;
};

struct BiLstmCache {
    LstmDirCache fwd, bwd;
};

// Output is 2u x N: forward hidden states stacked on backward ones.
Matrix biLstmForwardKernel(const BiLstmView& w, const Matrix& x, BiLstmCache* cache);

void biLstmBackwardKernel(const BiLstmView& w, const Matrix& x, const BiLstmCache& cache,
                          const Matrix& dOut,
                          std::array<Matrix*, 2 * kLstmTensorsPerDir>& grads, Matrix& dX);

}  // namespace paat
