#include "fixtures.hpp"

#include <cstdint>
#include <vector>

namespace testfix {

using namespace attribens;

const ToyDataset& mixture_dataset() {
  static const ToyDataset ds = gen_gaussian_mixture(3, 10, 2, 6.0, 11);
  return ds;
}

const EnsembleDenoiser& mixture_ensemble() {
  static const EnsembleDenoiser ens = [] {
    const ToyDataset& ds = mixture_dataset();
    Codebook cb = assign_codes(6, 4, 2, 5);
    std::vector<std::uint32_t> groups(ds.size());
    for (std::size_t i = 0; i < groups.size(); ++i)
      groups[i] = static_cast<std::uint32_t>(i % 6);
    bind_groups(cb, groups);

    MlpArchitecture arch;
    arch.sample_dim = 2;
    arch.time_embed_dim = 8;
    arch.hidden = {16};

    TrainingConfig config;
    config.epochs = 30;
    config.batch_size = 8;
    config.seed = 99;

    return train_ensemble(ds.items, cb, arch, config, make_schedule(20, 1e-4, 0.2));
  }();
  return ens;
}

const ToyDataset& glyph_dataset() {
  static const ToyDataset ds = gen_glyphs(7, 8, 0.5, 21);
  return ds;
}

const EnsembleDenoiser& glyph_ensemble() {
  static const EnsembleDenoiser ens = [] {
    const ToyDataset& ds = glyph_dataset();
    Codebook cb = walsh_class_codebook(ds.labels);

    MlpArchitecture arch;
    arch.sample_dim = 64;
    arch.time_embed_dim = 8;
    arch.hidden = {32};

    TrainingConfig config;
    config.epochs = 20;
    config.batch_size = 16;
    config.seed = 77;

    return train_ensemble(ds.items, cb, arch, config, make_schedule(30, 1e-4, 0.15));
  }();
  return ens;
}

}  // namespace testfix
