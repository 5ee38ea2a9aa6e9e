// checkpoint.hpp — versioned binary container for trained operator
// parameters: a JSON header (architecture, channel statistics, noise
// schedule, named section directory) followed by raw little-endian double
// payloads in directory order.

#pragma once

#include <string>

#include "hsl/fno.hpp"
#include "hsl/train.hpp"

namespace hsl {

struct Checkpoint {
    OperatorParams params;
    NoiseSchedule schedule;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hsl
