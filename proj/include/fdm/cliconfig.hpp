#pragma once

#include <string>

#include "fdm/train.hpp"

namespace fdm {

// key=value lines overriding the training defaults; blank lines and lines
// starting with '#' are skipped. Model keys follow the checkpoint config
// vocabulary; unknown keys are rejected.
TrainConfig train_config_from_text(const std::string& text);

}  // namespace fdm
