#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "paat/matrix.hpp"

namespace paat {

struct GradCheckEntry {
    std::string name;
    Matrix analytic;
    Matrix numeric;
    double maxRelErr = 0.0;
    bool pass = true;
};

struct GradReport {
    std::vector<GradCheckEntry> entries;
    double tol = 0.0;
    bool pass = true;

    std::string summary() const;
};

// relErr = |a - n| / max(1, |a|, |n|); damped so near-zero gradients do
// not blow up the ratio.
double gradRelErr(double analytic, double numeric);

// Central finite differences: (f(p + h e) - f(p - h e)) / (2h) per
// coordinate. lossFn must be deterministic (dropout disabled) and read
// the tensors behind `params`; they are perturbed in place and restored.
// Throws InputError naming the coordinate if the loss goes non-finite at
// a perturbed point.
GradReport finiteDiffCheck(const std::function<double()>& lossFn,
                           const std::vector<std::pair<std::string, Matrix*>>& params,
                           const std::vector<Matrix>& analytic, double h, double tol);

}  // namespace paat
