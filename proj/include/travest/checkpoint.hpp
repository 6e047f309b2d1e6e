#pragma once

#include <string>

#include "travest/trainer.hpp"

namespace travest {

// Versioned binary container ("GSNN") holding the network config, every
// named parameter, batch-norm running statistics, Adam state, the
// hypersphere, and the training/grid configs. Round-trips bit-exactly.
struct Checkpoint {
  TrainedModel model;
  nn::Adam<float> adam;
};

void save_checkpoint(Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace travest
