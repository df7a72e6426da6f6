#pragma once

#include "attribens/ensemble.hpp"
#include "attribens/experiments.hpp"

// Small trained ensembles shared across test files. Built once per process;
// everything is deterministic, so the fixtures are stable across runs.
namespace testfix {

// 3-class 2-D Gaussian mixture, 30 items in 6 groups, n=4 / h=2 codes.
const attribens::ToyDataset& mixture_dataset();
const attribens::EnsembleDenoiser& mixture_ensemble();

// 7-class glyph dataset with the 7-member Walsh class design (tiny training
// budget: structure checks only, not generation quality).
const attribens::ToyDataset& glyph_dataset();
const attribens::EnsembleDenoiser& glyph_ensemble();

}  // namespace testfix
