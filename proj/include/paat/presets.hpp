#pragma once

#include <string>

#include "paat/data.hpp"
#include "paat/model.hpp"

// Canned generator specs and the desk-scale model configuration used by
// the experiment suite: dispersed plants evidence for every gold label
// in all six document regions, concentrated confines it to one.

namespace paat {

GenSpec dispersedGenSpec(std::uint64_t seed = 1);
GenSpec concentratedGenSpec(std::uint64_t seed = 1);
// Small corpus for overfit sanity runs.
GenSpec memorizationGenSpec(std::uint64_t seed = 1);

bool applyGenPreset(const std::string& name, GenSpec& spec);

// Desk-scale dimensions (e=32, u=16, d_a=32, alpha=0.8, six partitions)
// with the training budget the experiment suite uses.
PaatConfig experimentConfig(std::size_t labelCount, std::size_t vocabSize);

// Split fractions for the dispersed experiment: 2000/300/500 documents
// out of 2800.
inline constexpr double kExperimentTrainFrac = 2000.0 / 2800.0;
inline constexpr double kExperimentValidFrac = 300.0 / 2800.0;
inline constexpr double kExperimentTestFrac = 500.0 / 2800.0;

}  // namespace paat
