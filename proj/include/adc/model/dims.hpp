#pragma once

#include <string>

#include "adc/error.hpp"

namespace adc {

/// Sizes shared by the actor and both critics.
struct ModelDims {
  long feature_dim = 0;
  long vocab_size = 0;
  long hidden = 256;
  double dropout = 0.2;

  void validate() const {
    if (feature_dim < 1) throw ValidationError("model: feature_dim must be >= 1");
    if (vocab_size < 5) throw ValidationError("model: vocab_size must exceed the 4 special tokens");
    if (hidden < 1) throw ValidationError("model: hidden must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model: dropout must lie in [0, 1)");
  }
};

}  // namespace adc
