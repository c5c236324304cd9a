#include "paat/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace paat {

double gradRelErr(double analytic, double numeric) {
    const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    return std::fabs(analytic - numeric) / denom;
}

GradReport finiteDiffCheck(const std::function<double()>& lossFn,
                           const std::vector<std::pair<std::string, Matrix*>>& params,
                           const std::vector<Matrix>& analytic, double h, double tol) {
    if (h <= 0.0) throw ContractError("finiteDiffCheck: step must be positive");
    if (analytic.size() != params.size()) {
        throw ContractError("finiteDiffCheck: analytic gradient count mismatch");
    }
    GradReport report;
    report.tol = tol;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto& [name, tensor] = params[p];
        GradCheckEntry entry;
        entry.name = name;
        entry.analytic = analytic[p];
        entry.numeric = Matrix(tensor->rows(), tensor->cols());
        if (!analytic[p].sameShape(*tensor)) {
            throw ContractError("finiteDiffCheck: gradient shape " + analytic[p].shapeStr() +
                                " for tensor " + name + " of shape " + tensor->shapeStr());
        }
        for (std::size_t i = 0; i < tensor->size(); ++i) {
            const double orig = (*tensor)[i];
            (*tensor)[i] = orig + h;
            const double up = lossFn();
            (*tensor)[i] = orig - h;
            const double down = lossFn();
            (*tensor)[i] = orig;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw InputError("finiteDiffCheck: non-finite loss perturbing " + name +
                                 " coordinate " + std::to_string(i));
            }
            const double num = (up - down) / (2.0 * h);
            entry.numeric[i] = num;
            entry.maxRelErr = std::max(entry.maxRelErr, gradRelErr(entry.analytic[i], num));
        }
        entry.pass = entry.maxRelErr <= tol;
        report.pass = report.pass && entry.pass;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string GradReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " (tol " << tol << ")";
    for (const auto& e : entries) {
        os << "\n  " << (e.pass ? "ok  " : "FAIL") << e.name << " maxRelErr=" << e.maxRelErr;
    }
    return os.str();
}

}  // namespace paat
